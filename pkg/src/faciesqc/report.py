"""Machine-readable check reports and plot-ready data series.

A check report bundles every acceptance metric for one
(ensemble, training image, well data) triple into a JSON document with
"schema_version": 1. Plot emission is data-only: one CSV per
figure-equivalent series, no rendering.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .grids import CategoricalGrid, ConditioningSet, Ensemble
from .metrics import (
    Envelope,
    accuracy,
    confusion_at_points,
    count_geobodies,
    directional_semivariogram,
    ensemble_semivariogram_envelope,
    entropy_at_points,
    entropy_map,
    f1_score,
    facies_proportion,
    moving_window_proportions,
    percentile,
    pixel_average_map,
    pixel_dispersion_map,
    proportion_histogram,
    window_scatter,
)

__all__ = [
    "CheckParams",
    "build_check_report",
    "ensemble_section",
    "ti_reference_section",
    "report_json",
    "validate_report",
    "write_plot_series",
    "REPORT_SCHEMA",
]

MAJOR = (0, 1)
MINOR = (1, 0)


@dataclass(frozen=True)
class CheckParams:
    positive: int = 1
    window: int | None = None  # default: min(grid dims) // 2
    stride: int = 1
    max_lag: int = 10
    connectivity: int = 8
    sv_percentiles: tuple = (10.0, 90.0)  # P10-P90
    box_percentiles: tuple = (25.0, 75.0)  # P25-P75
    bin_width: float = 0.02
    scatter_limit: int = 400

    def resolved_window(self, shape: tuple) -> int:
        if self.window is not None:
            return self.window
        return max(1, min(shape) // 2)


def _env_dict(env: Envelope) -> dict:
    return {
        "index": list(env.index),
        "lower": list(env.lower),
        "upper": list(env.upper),
        "p_lo": env.p_lo,
        "p_hi": env.p_hi,
    }


def _summary(values, lo: float, hi: float) -> dict:
    return {
        "mean": float(np.mean(values)),
        "p_lo": percentile(values, lo),
        "p_hi": percentile(values, hi),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
    }


def ti_reference_section(ti: CategoricalGrid, params: CheckParams) -> dict:
    major = directional_semivariogram(ti, params.positive, MAJOR, params.max_lag)
    minor = directional_semivariogram(ti, params.positive, MINOR, params.max_lag)
    return {
        "proportion": facies_proportion(ti, params.positive),
        "geobody_count": count_geobodies(ti, params.positive, params.connectivity).count,
        "semivariogram_major": {"h": list(major.h), "gamma": list(major.gamma)},
        "semivariogram_minor": {"h": list(minor.h), "gamma": list(minor.gamma)},
    }


def ensemble_section(e: Ensemble, ti: CategoricalGrid | None, params: CheckParams,
                     data: ConditioningSet | None = None) -> dict:
    """All per-ensemble checks as a JSON-ready dict; the F1 and at-data
    entropy blocks appear only when well data is supplied."""
    p_lo, p_hi = params.box_percentiles
    section: dict = {"size": len(e), "provenance": e.provenance}

    props = [facies_proportion(m, params.positive) for m in e.members]
    hist = proportion_histogram(e, params.positive, params.bin_width)
    section["proportions"] = {
        "values": props,
        "histogram": {"edges": list(hist.edges), "counts": list(hist.counts)},
        "summary": _summary(props, p_lo, p_hi),
    }

    counts = [count_geobodies(m, params.positive, params.connectivity).count
              for m in e.members]
    section["geobodies"] = {
        "counts": counts,
        "connectivity": params.connectivity,
        "summary": _summary(counts, p_lo, p_hi),
    }

    hmap = entropy_map(e, params.positive)
    section["entropy"] = {"map": hmap.cells.tolist()}
    section["pixel_maps"] = {
        "average": pixel_average_map(e, params.positive).cells.tolist(),
        "dispersion": pixel_dispersion_map(e, params.positive).cells.tolist(),
    }

    sv_lo, sv_hi = params.sv_percentiles
    section["semivariograms"] = {
        "major_envelope": _env_dict(ensemble_semivariogram_envelope(
            e, params.positive, MAJOR, params.max_lag, sv_lo, sv_hi)),
        "minor_envelope": _env_dict(ensemble_semivariogram_envelope(
            e, params.positive, MINOR, params.max_lag, sv_lo, sv_hi)),
    }

    window = params.resolved_window(e.shape)
    per_member = np.stack([
        moving_window_proportions(m, params.positive, window, params.stride).cells
        for m in e.members])
    section["window"] = {
        "window": window,
        "stride": params.stride,
        "lower": np.percentile(per_member, p_lo, axis=0, method="linear").tolist(),
        "upper": np.percentile(per_member, p_hi, axis=0, method="linear").tolist(),
        "p_lo": p_lo,
        "p_hi": p_hi,
    }
    if ti is not None and ti.shape == e.shape:
        pairs = window_scatter(ti, e.members[0], params.positive, window, params.stride)
        section["window"]["scatter_sample"] = [
            list(p) for p in pairs[:params.scatter_limit]]

    if data is not None and len(data) > 0:
        confusions = [confusion_at_points(m, data, params.positive) for m in e.members]
        f1s = [f1_score(c) for c in confusions]
        accs = [accuracy(c) for c in confusions]
        section["f1"] = {
            "values": f1s,
            "accuracy": accs,
            "summary": _summary(f1s, p_lo, p_hi),
        }
        section["entropy"]["at_data"] = entropy_at_points(hmap, data)
    return section


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def metadata_block(seeds: dict | None = None, config: dict | None = None,
                   input_hashes: dict | None = None) -> dict:
    return {
        "tool": "faciesqc",
        "version": __version__,
        "seeds": seeds or {},
        "config": config or {},
        "input_hashes": input_hashes or {},
    }


def build_check_report(ensemble: Ensemble, ti: CategoricalGrid,
                       params: CheckParams = CheckParams(),
                       baseline: Ensemble | None = None,
                       data: ConditioningSet | None = None,
                       metadata: dict | None = None) -> dict:
    report = {
        "schema_version": 1,
        "kind": "check",
        "metadata": metadata or metadata_block(),
        "ti_reference": ti_reference_section(ti, params),
        "ensemble": ensemble_section(ensemble, ti, params, data),
    }
    if baseline is not None:
        report["baseline"] = ensemble_section(baseline, ti, params, data)
    return report


def report_json(report: dict) -> str:
    """Canonical serialization: sorted keys, fixed separators, trailing
    newline; identical inputs give byte-identical text."""
    return json.dumps(report, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


_ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["index", "lower", "upper", "p_lo", "p_hi"],
    "properties": {
        "index": {"type": "array", "items": {"type": "number"}},
        "lower": {"type": "array", "items": {"type": "number"}},
        "upper": {"type": "array", "items": {"type": "number"}},
        "p_lo": {"type": "number"},
        "p_hi": {"type": "number"},
    },
}

_MATRIX_SCHEMA = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}},
}

_SECTION_SCHEMA = {
    "type": "object",
    "required": ["size", "provenance", "proportions", "geobodies", "entropy",
                 "pixel_maps", "semivariograms", "window"],
    "properties": {
        "size": {"type": "integer", "minimum": 1},
        "provenance": {"type": "string"},
        "proportions": {
            "type": "object",
            "required": ["values", "histogram", "summary"],
            "properties": {
                "values": {"type": "array", "items": {"type": "number"}},
                "histogram": {
                    "type": "object",
                    "required": ["edges", "counts"],
                },
                "summary": {"type": "object"},
            },
        },
        "geobodies": {
            "type": "object",
            "required": ["counts", "connectivity", "summary"],
        },
        "entropy": {
            "type": "object",
            "required": ["map"],
            "properties": {
                "map": _MATRIX_SCHEMA,
                "at_data": {"type": "array", "items": {"type": "number"}},
            },
        },
        "pixel_maps": {
            "type": "object",
            "required": ["average", "dispersion"],
            "properties": {"average": _MATRIX_SCHEMA, "dispersion": _MATRIX_SCHEMA},
        },
        "semivariograms": {
            "type": "object",
            "required": ["major_envelope", "minor_envelope"],
            "properties": {
                "major_envelope": _ENVELOPE_SCHEMA,
                "minor_envelope": _ENVELOPE_SCHEMA,
            },
        },
        "window": {
            "type": "object",
            "required": ["window", "stride", "lower", "upper", "p_lo", "p_hi"],
        },
        "f1": {
            "type": "object",
            "required": ["values", "accuracy", "summary"],
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "metadata", "ti_reference", "ensemble"],
    "properties": {
        "schema_version": {"const": 1},
        "kind": {"const": "check"},
        "metadata": {
            "type": "object",
            "required": ["tool", "version", "seeds", "config", "input_hashes"],
        },
        "ti_reference": {
            "type": "object",
            "required": ["proportion", "geobody_count",
                         "semivariogram_major", "semivariogram_minor"],
        },
        "ensemble": _SECTION_SCHEMA,
        "baseline": _SECTION_SCHEMA,
    },
}


def validate_report(report: dict) -> None:
    """Raise jsonschema.ValidationError if the report breaks the schema."""
    import jsonschema

    jsonschema.validate(report, REPORT_SCHEMA)


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_plot_series(report: dict, out_dir) -> list:
    """Emit one CSV per figure-equivalent series; returns written paths."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sections = [("conditional", report["ensemble"])]
    if "baseline" in report:
        sections.append(("baseline", report["baseline"]))
    written = []

    def emit(name: str, header, rows):
        path = out_dir / name
        path.write_text(_rows_to_csv(header, rows), encoding="utf-8")
        written.append(path)

    rows = []
    for label, sec in sections:
        if "f1" in sec:
            for i, (f1, acc) in enumerate(zip(sec["f1"]["values"],
                                              sec["f1"]["accuracy"])):
                rows.append([label, i, f1, acc])
    if rows:
        emit("f1_box.csv", ["ensemble", "member", "f1", "accuracy"], rows)

    rows = []
    for label, sec in sections:
        for i, v in enumerate(sec["entropy"].get("at_data", [])):
            rows.append([label, i, v])
    if rows:
        emit("entropy_hist.csv", ["ensemble", "point", "entropy"], rows)

    for direction in ("major", "minor"):
        rows = []
        ref = report["ti_reference"][f"semivariogram_{direction}"]
        ti_gamma = dict(zip(ref["h"], ref["gamma"]))
        for label, sec in sections:
            env = sec["semivariograms"][f"{direction}_envelope"]
            for h, lo, hi in zip(env["index"], env["lower"], env["upper"]):
                rows.append([label, h, lo, hi, ti_gamma.get(h, "")])
        emit(f"semivariogram_{direction}.csv",
             ["ensemble", "lag", "lower", "upper", "ti_gamma"], rows)

    rows = []
    for label, sec in sections:
        for i, v in enumerate(sec["proportions"]["values"]):
            rows.append([label, i, v])
    emit("proportions.csv", ["ensemble", "member", "proportion"], rows)

    rows = []
    for label, sec in sections:
        for i, v in enumerate(sec["geobodies"]["counts"]):
            rows.append([label, i, v])
    emit("geobody_counts.csv", ["ensemble", "member", "count"], rows)

    rows = []
    for label, sec in sections:
        win = sec["window"]
        for r, (lo_row, hi_row) in enumerate(zip(win["lower"], win["upper"])):
            for c, (lo, hi) in enumerate(zip(lo_row, hi_row)):
                rows.append([label, r, c, lo, hi])
    emit("window_envelope.csv",
         ["ensemble", "window_row", "window_col", "lower", "upper"], rows)

    rows = []
    for label, sec in sections:
        for ti_p, real_p in sec["window"].get("scatter_sample", []):
            rows.append([label, ti_p, real_p])
    if rows:
        emit("window_scatter.csv", ["ensemble", "ti_proportion", "realization_proportion"],
             rows)
    return written
