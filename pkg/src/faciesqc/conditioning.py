"""Latent-space data conditioning and the N-sweep experiment harness.

Conditioning a realization to well data = minimizing, over the generator's
latent vector z, a loss with two terms: a content term (weighted mean
absolute mismatch between generated values and the well values at the
conditioned cells) and a realism term log(1 - D(composite)), where the
composite grid is the generated grid with conditioned cells overwritten by
the well values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import map_ordered
from .generator import ExternalGenerator, sample_latent
from .grids import CategoricalGrid, ConditioningSet, Ensemble, RealGrid, threshold_grid
from .metrics import confusion_at_points, f1_score
from .optimize import OptOptions, OptResult, minimize

__all__ = [
    "Mask",
    "DataImage",
    "ConditioningConfig",
    "ConditionalRealization",
    "ExperimentConfig",
    "build_mask",
    "composite",
    "conditioning_loss",
    "condition",
    "sample_well_points",
    "derive_seed",
]


@dataclass(frozen=True)
class Mask:
    """Binary raster marking conditioned cells, plus the content-term weight."""

    values: np.ndarray
    weight: float = 5.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all((v == 0.0) | (v == 1.0)):
            raise ValueError("mask must be binary")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def conditioned_count(self) -> int:
        return int(self.values.sum())


@dataclass(frozen=True)
class DataImage:
    """Well facies values (as real 0/1) on the mask support; NaN elsewhere,
    so an unconditioned cell can never silently enter a masked sum."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ConditioningConfig:
    lam: float = 5.0
    epsilon_clamp: float = 1e-6
    optimizer: OptOptions = field(default_factory=OptOptions)
    threshold: float = 0.5
    discriminator_mode: str = "plausibility"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not (0.0 < self.epsilon_clamp < 0.5):
            raise ValueError("epsilon_clamp must be in (0, 0.5)")


@dataclass(frozen=True)
class ConditionalRealization:
    grid: CategoricalGrid
    raw: RealGrid
    z_opt: np.ndarray
    loss_final: float
    f1_at_data: float
    evaluations: int = 0
    seed: int = 0


def build_mask(data: ConditioningSet, shape: tuple, lam: float = 5.0):
    """Binary mask + data image from well points."""
    if len(data) == 0:
        raise ValueError("conditioning requires at least one point")
    n_rows, n_cols = shape
    data.check_bounds(n_rows, n_cols)
    mask = np.zeros(shape)
    img = np.full(shape, np.nan)
    for r, c, v in data.points:
        mask[r, c] = 1.0
        img[r, c] = float(v)
    return Mask(mask, lam), DataImage(img)


def composite(generated: RealGrid, data: DataImage, mask: Mask) -> RealGrid:
    """Generated grid with conditioned cells overwritten by well values."""
    if generated.shape != mask.values.shape or generated.shape != data.values.shape:
        raise ValueError("composite inputs must share one shape")
    out = np.where(mask.values == 1.0, data.values, generated.cells)
    return RealGrid(out)


def conditioning_loss(z, gen, disc, data: DataImage, mask: Mask,
                      cfg: ConditioningConfig = ConditioningConfig()) -> float:
    """lam * mean |y - G(z)| over conditioned cells
    + log(1 - clamp(D(composite), eps, 1-eps)); finite by construction."""
    raw = gen.generate(z)
    on = mask.values == 1.0
    content = float(np.abs(data.values[on] - raw.cells[on]).mean())
    score = float(disc(composite(raw, data, mask)))
    score = min(max(score, cfg.epsilon_clamp), 1.0 - cfg.epsilon_clamp)
    return cfg.lam * content + math.log(1.0 - score)


def condition(gen, disc, data: ConditioningSet, shape: tuple,
              cfg: ConditioningConfig = ConditioningConfig(),
              seed: int = 0, positive: int = 1) -> ConditionalRealization:
    """One conditional realization: seed -> z0 -> optimized z -> thresholded
    grid, with the final loss and F1 at the well locations recorded."""
    info = gen.info
    if (info.n_rows, info.n_cols) != tuple(shape):
        raise ValueError(f"generator produces {info.n_rows}x{info.n_cols}, wanted {shape}")
    mask, img = build_mask(data, shape, cfg.lam)
    z0 = sample_latent(seed, info.latent_dim)

    def objective(z):
        return conditioning_loss(z, gen, disc, img, mask, cfg)

    opts = cfg.optimizer
    if opts.seed == 0:
        opts = replace(opts, seed=seed)
    result: OptResult = minimize(objective, z0, opts)
    raw = gen.generate(result.x_opt)
    grid = threshold_grid(raw, cfg.threshold)
    f1 = f1_score(confusion_at_points(grid, data, positive))
    return ConditionalRealization(grid, raw, result.x_opt, result.f_opt, f1,
                                  result.evaluations, seed)


def derive_seed(master_seed: int, *path: int) -> int:
    """Deterministic child seed for a (stream, index...) path."""
    return int(np.random.SeedSequence([int(master_seed), *map(int, path)])
               .generate_state(1)[0])


def sample_well_points(truth: CategoricalGrid, n: int, seed: int) -> ConditioningSet:
    """N well locations uniform without replacement, values read off `truth`."""
    total = truth.cells.size
    if not (1 <= n <= total):
        raise ValueError(f"cannot sample {n} points from {total} cells")
    rng = np.random.default_rng(seed)
    flat = rng.choice(total, size=n, replace=False)
    pts = [(int(i // truth.n_cols), int(i % truth.n_cols),
            int(truth.cells[i // truth.n_cols, i % truth.n_cols])) for i in flat]
    return ConditioningSet(pts)


@dataclass(frozen=True)
class ExperimentConfig:
    """N-sweep: for each N, sample N wells from `truth`, build a conditional
    ensemble, and compare the full check suite against one unconditional
    baseline ensemble and the TI."""

    n_values: tuple
    realizations_per_n: int
    unconditional_count: int
    ti: CategoricalGrid
    truth: CategoricalGrid
    master_seed: int = 0
    conditioning: ConditioningConfig = field(default_factory=ConditioningConfig)

    def __post_init__(self):
        nv = tuple(int(n) for n in self.n_values)
        if not nv or any(b <= a for a, b in zip(nv, nv[1:])):
            raise ValueError("n_values must be non-empty and strictly increasing")
        if nv[-1] > self.truth.cells.size:
            raise ValueError("more conditioning points than grid cells")
        if self.realizations_per_n < 1 or self.unconditional_count < 1:
            raise ValueError("ensemble sizes must be >= 1")
        object.__setattr__(self, "n_values", nv)


# stream tags for derive_seed
_STREAM_WELLS = 1
_STREAM_COND = 2
_STREAM_UNCOND = 3


def unconditional_ensemble(gen, cfg: ExperimentConfig) -> tuple:
    """Baseline realizations and their latent seeds."""
    seeds = [derive_seed(cfg.master_seed, _STREAM_UNCOND, i)
             for i in range(cfg.unconditional_count)]
    members = [threshold_grid(gen.generate(sample_latent(s, gen.info.latent_dim)),
                              cfg.conditioning.threshold) for s in seeds]
    return Ensemble(tuple(members), "unconditional"), seeds


def conditional_ensemble(gen, disc, data: ConditioningSet, cfg: ExperimentConfig,
                         n: int) -> tuple:
    """Conditional realizations for one N, plus their seeds."""
    shape = (gen.info.n_rows, gen.info.n_cols)
    seeds = [derive_seed(cfg.master_seed, _STREAM_COND, n, i)
             for i in range(cfg.realizations_per_n)]
    run_one = lambda s: condition(gen, disc, data, shape, cfg.conditioning, seed=s)
    if isinstance(gen, ExternalGenerator):
        # an external session allows one request in flight; stay serial
        runs = [run_one(s) for s in seeds]
    else:
        runs = map_ordered(run_one, seeds)
    ensemble = Ensemble(tuple(r.grid for r in runs), f"conditional({n})")
    return ensemble, runs, seeds


def wells_for_n(cfg: ExperimentConfig, n: int) -> tuple:
    seed = derive_seed(cfg.master_seed, _STREAM_WELLS, n)
    return sample_well_points(cfg.truth, n, seed), seed
