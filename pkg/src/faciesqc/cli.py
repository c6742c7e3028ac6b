"""Command-line surface: generate, condition, check, experiment.

Every run with identical flags and seeds produces byte-identical outputs;
reports embed all seeds and input content hashes for exact replay. Exit
code 0 means every requested output was written; any failure prints one
diagnostic line to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditioning import (
    ConditioningConfig,
    ExperimentConfig,
    condition,
    derive_seed,
)
from .experiment import run_experiment
from .generator import (
    ExternalGenerator,
    ProceduralChannelGenerator,
    plausibility_score,
    sample_latent,
    ti_stats,
)
from .grids import (
    GridFormatError,
    parse_gslib_grid,
    parse_points_csv,
    threshold_grid,
    write_gslib_grid,
)
from .grids import Ensemble
from .optimize import OptOptions
from .report import (
    CheckParams,
    build_check_report,
    content_hash,
    metadata_block,
    report_json,
    write_plot_series,
)


class CliError(RuntimeError):
    pass


def _add_generator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generator", default="procedural",
                   help="'procedural' or 'exec:<command>' for an external generator")
    p.add_argument("--latent-dim", type=int, default=15,
                   help="procedural latent dimension (5 per channel)")
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--timeout", type=float, default=30.0,
                   help="per-request timeout for external generators (s)")


def _add_optimizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-evals", type=int, default=None,
                   help="objective evaluations per restart (default 500*d)")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--initial-step", type=float, default=0.5)


def _make_generator(args):
    spec = args.generator
    if spec == "procedural":
        if args.latent_dim % 5 != 0 or args.latent_dim < 5:
            raise CliError("--latent-dim must be a positive multiple of 5")
        return ProceduralChannelGenerator(args.latent_dim // 5, args.rows, args.cols)
    if spec.startswith("exec:"):
        return ExternalGenerator(shlex.split(spec[len("exec:"):]), timeout=args.timeout)
    raise CliError(f"unknown generator {spec!r}; use 'procedural' or 'exec:<command>'")


def _make_discriminator(gen, ti_path: str | None, positive: int = 1):
    """External discriminator when the generator declares one, otherwise a
    plausibility scorer anchored on --ti (or, failing that, on the
    generator's own zero-latent output)."""
    if isinstance(gen, ExternalGenerator) and gen.info.supports_discriminator:
        return gen.discriminate, "external"
    if ti_path is not None:
        ti = _read_grid(Path(ti_path))
    else:
        ti = threshold_grid(gen.generate(np.zeros(gen.info.latent_dim)))
    stats = ti_stats(ti, positive)
    return (lambda g: plausibility_score(g, stats, positive)), "plausibility"


def _read_grid(path: Path, kind: str = "categorical"):
    try:
        return parse_gslib_grid(path.read_text(encoding="utf-8"), kind)
    except FileNotFoundError:
        raise CliError(f"grid file not found: {path}") from None


def _read_points(path: Path, shape):
    try:
        return parse_points_csv(path.read_text(encoding="utf-8"), shape)
    except FileNotFoundError:
        raise CliError(f"points file not found: {path}") from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_generate(args) -> int:
    if args.count < 1:
        raise CliError("count must be >= 1")
    gen = _make_generator(args)
    out_dir = Path(args.out_dir)
    entries = []
    try:
        for i in range(args.count):
            seed = derive_seed(args.seed, 0, i)
            z = sample_latent(seed, gen.info.latent_dim)
            grid = threshold_grid(gen.generate(z), args.threshold)
            name = f"real_{i:04d}.gslib"
            text = write_gslib_grid(grid)
            _write(out_dir / name, text)
            entries.append({"file": name, "seed": seed, "sha256": content_hash(text)})
        manifest = {
            "tool": "faciesqc",
            "version": __version__,
            "generator": gen.info.name,
            "latent_dim": gen.info.latent_dim,
            "n_rows": gen.info.n_rows,
            "n_cols": gen.info.n_cols,
            "master_seed": args.seed,
            "threshold": args.threshold,
            "realizations": entries,
        }
        _write(out_dir / "manifest.json",
               json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    finally:
        if isinstance(gen, ExternalGenerator):
            gen.close()
    print(f"wrote {args.count} realizations + manifest to {out_dir}")
    return 0


def _opt_options(args) -> OptOptions:
    return OptOptions(max_evaluations=args.max_evals, restarts=args.restarts,
                      tolerance=args.tolerance, initial_step=args.initial_step)


def cmd_condition(args) -> int:
    if args.count < 1:
        raise CliError("count must be >= 1")
    gen = _make_generator(args)
    try:
        shape = (gen.info.n_rows, gen.info.n_cols)
        data = _read_points(Path(args.data), shape)
        disc, disc_mode = _make_discriminator(gen, args.ti)
        cfg = ConditioningConfig(lam=args.lam, optimizer=_opt_options(args),
                                 threshold=args.threshold,
                                 discriminator_mode=disc_mode)
        out_dir = Path(args.out_dir)
        for i in range(args.count):
            seed = derive_seed(args.seed, 0, i)
            run = condition(gen, disc, data, shape, cfg, seed=seed)
            name = f"cond_{i:04d}"
            _write(out_dir / f"{name}.gslib", write_gslib_grid(run.grid))
            meta = {
                "seed": seed,
                "z_opt": run.z_opt.tolist(),
                "loss_final": run.loss_final,
                "f1_at_data": run.f1_at_data,
                "evaluations": run.evaluations,
                "lambda": args.lam,
                "content_term_disabled": args.lam == 0.0,
                "discriminator_mode": disc_mode,
            }
            _write(out_dir / f"{name}.json",
                   json.dumps(meta, sort_keys=True, indent=1) + "\n")
    finally:
        if isinstance(gen, ExternalGenerator):
            gen.close()
    print(f"wrote {args.count} conditional realizations to {args.out_dir}")
    return 0


def _read_ensemble(dir_path: str, provenance: str) -> tuple:
    files = sorted(Path(dir_path).glob("*.gslib"))
    if not files:
        raise CliError(f"no .gslib files in {dir_path}")
    members, hashes = [], {}
    for f in files:
        text = f.read_text(encoding="utf-8")
        members.append(parse_gslib_grid(text, "categorical"))
        hashes[f.name] = content_hash(text)
    return Ensemble(tuple(members), provenance), hashes


def cmd_check(args) -> int:
    ti_text = Path(args.ti).read_text(encoding="utf-8")
    ti = parse_gslib_grid(ti_text, "categorical")
    ensemble, hashes = _read_ensemble(args.ensemble, "conditional")
    if ensemble.shape != ti.shape:
        raise CliError(f"ensemble shape {ensemble.shape} != TI shape {ti.shape}")
    baseline = None
    if args.baseline:
        baseline, base_hashes = _read_ensemble(args.baseline, "unconditional")
        hashes.update({f"baseline/{k}": v for k, v in base_hashes.items()})
        if baseline.shape != ti.shape:
            raise CliError("baseline shape does not match TI")
    data = None
    if args.data:
        data = _read_points(Path(args.data), ti.shape)
        hashes["points"] = content_hash(Path(args.data).read_text(encoding="utf-8"))
    hashes["ti"] = content_hash(ti_text)
    p_lo, p_hi = (float(x) for x in args.percentiles.split(","))
    params = CheckParams(window=args.window, max_lag=args.max_lag,
                         connectivity=args.connectivity,
                         sv_percentiles=(p_lo, p_hi))
    metadata = metadata_block(config={"window": params.resolved_window(ti.shape),
                                      "max_lag": args.max_lag,
                                      "connectivity": args.connectivity,
                                      "percentiles": [p_lo, p_hi]},
                              input_hashes=hashes)
    rep = build_check_report(ensemble, ti, params, baseline, data, metadata)
    out_dir = Path(args.out_dir)
    _write(out_dir / "report.json", report_json(rep))
    write_plot_series(rep, out_dir)
    print(f"wrote report.json + plot series to {out_dir}")
    return 0


def cmd_experiment(args) -> int:
    gen = _make_generator(args)
    try:
        if args.truth.startswith("seed:"):
            z = sample_latent(int(args.truth[len("seed:"):]), gen.info.latent_dim)
            truth = threshold_grid(gen.generate(z), args.threshold)
        else:
            truth = _read_grid(Path(args.truth))
        ti = _read_grid(Path(args.ti)) if args.ti else truth
        disc, disc_mode = _make_discriminator(gen, None if args.ti is None else args.ti)
        n_values = tuple(int(x) for x in args.n_values.split(","))
        cfg = ExperimentConfig(
            n_values=n_values,
            realizations_per_n=args.per_n,
            unconditional_count=args.unconditional_count,
            ti=ti, truth=truth, master_seed=args.seed,
            conditioning=ConditioningConfig(
                lam=args.lam, optimizer=_opt_options(args),
                threshold=args.threshold, discriminator_mode=disc_mode),
        )
        params = CheckParams(window=args.window, max_lag=args.max_lag,
                             connectivity=args.connectivity)
        rep = run_experiment(cfg, gen, disc, params)
        _write(Path(args.out), report_json(rep))
    finally:
        if isinstance(gen, ExternalGenerator):
            gen.close()
    summary = rep["summary"]
    print("\t".join(["check"] + summary["columns"]))
    for row, vals in summary["rows"].items():
        print("\t".join([row] + ["-" if v is None else f"{v:.4g}" for v in vals]))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faciesqc",
        description="Data-conditioned facies realizations and acceptance checks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="unconditional realizations")
    _add_generator_flags(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("condition", help="well-conditioned realizations")
    _add_generator_flags(p)
    _add_optimizer_flags(p)
    p.add_argument("--data", required=True, help="points CSV (row,col,facies)")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--ti", default=None,
                   help="training image grid anchoring the plausibility scorer")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("check", help="acceptance checks on an ensemble")
    p.add_argument("--ti", required=True)
    p.add_argument("--ensemble", required=True, help="directory of .gslib grids")
    p.add_argument("--baseline", default=None, help="unconditional ensemble directory")
    p.add_argument("--data", default=None, help="points CSV for F1/entropy-at-data")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--percentiles", default="10,90",
                   help="semivariogram envelope percentiles, e.g. 10,90")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("experiment", help="N-sweep conditioning experiment")
    _add_generator_flags(p)
    _add_optimizer_flags(p)
    p.add_argument("--truth", required=True,
                   help="grid file, or seed:<int> to derive truth from the generator")
    p.add_argument("--ti", default=None, help="training image (default: the truth grid)")
    p.add_argument("--n-values", default="10,20,30,40,50,60,70,80")
    p.add_argument("--per-n", type=int, default=20)
    p.add_argument("--unconditional-count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, GridFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
