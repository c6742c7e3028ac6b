"""Derivative-free local minimization with seeded multi-restart.

A thin deterministic wrapper around scipy's adaptive Nelder-Mead simplex,
keeping the contract downstream conditioning relies on: best-evaluated-point
bookkeeping, box bounds via clipping, non-finite objective abort, and
restart-from-perturbed-start with deterministic tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sp_optimize

__all__ = ["OptOptions", "OptResult", "NonFiniteObjectiveError", "minimize"]


class NonFiniteObjectiveError(RuntimeError):
    """Objective returned NaN or infinity; the run is aborted."""


@dataclass(frozen=True)
class OptOptions:
    max_evaluations: int | None = None  # default 500*d, resolved per run
    initial_step: float = 0.5
    tolerance: float = 1e-6
    bounds: tuple | None = None  # per-coordinate (lo, hi)
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class OptResult:
    x_opt: np.ndarray
    f_opt: float
    evaluations: int
    converged: bool
    restart_index: int


class _Tracker:
    """Counts evaluations, clips into bounds, tracks the best point and
    aborts on non-finite values or exhausted budget."""

    class Budget(Exception):
        pass

    def __init__(self, f, lo, hi, budget):
        self.f = f
        self.lo, self.hi = lo, hi
        self.budget = budget
        self.evals = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        if self.evals >= self.budget:
            raise _Tracker.Budget
        x = np.asarray(x, dtype=np.float64)
        if self.lo is not None:
            x = np.clip(x, self.lo, self.hi)
        val = float(self.f(x))
        if not np.isfinite(val):
            raise NonFiniteObjectiveError(
                f"objective returned {val} at x={x.tolist()}"
            )
        self.evals += 1
        if val < self.best_f:
            self.best_f = val
            self.best_x = x.copy()
        return val


def minimize(f, x0, opts: OptOptions = OptOptions()) -> OptResult:
    """Minimize f from x0; returns the best point ever evaluated across
    `opts.restarts` COBYLA runs (run 0 from x0, later runs from seeded
    Gaussian perturbations of x0). Deterministic for fixed inputs and seed."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1 or x0.size == 0:
        raise ValueError("x0 must be a non-empty 1D vector")
    d = x0.size
    budget = opts.max_evaluations if opts.max_evaluations is not None else 500 * d
    if budget < d + 2:
        raise ValueError(f"max_evaluations must be >= d+2 = {d + 2}")

    lo = hi = None
    if opts.bounds is not None:
        b = np.asarray(opts.bounds, dtype=np.float64)
        if b.shape != (d, 2):
            raise ValueError("bounds must give one (lo, hi) pair per coordinate")
        lo, hi = b[:, 0], b[:, 1]
        x0 = np.clip(x0, lo, hi)

    rng = np.random.default_rng(opts.seed)
    best: OptResult | None = None
    total_evals = 0
    for k in range(opts.restarts):
        start = x0 if k == 0 else x0 + opts.initial_step * rng.standard_normal(d)
        if lo is not None:
            start = np.clip(start, lo, hi)
        tracker = _Tracker(f, lo, hi, budget)
        simplex = np.tile(start, (d + 1, 1))
        for i in range(d):
            simplex[i + 1, i] += opts.initial_step
        if lo is not None:
            simplex = np.clip(simplex, lo, hi)
            for i in range(d):  # step inward when the vertex hit a bound
                if simplex[i + 1, i] == start[i]:
                    simplex[i + 1, i] = max(lo[i], start[i] - opts.initial_step)
        converged = False
        try:
            res = sp_optimize.minimize(
                tracker, start, method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "xatol": opts.tolerance,
                    "fatol": opts.tolerance,
                    "maxfev": budget,
                    "adaptive": True,
                },
            )
            converged = bool(res.success)
        except _Tracker.Budget:
            pass
        total_evals += tracker.evals
        if tracker.best_x is None:
            continue
        if best is None or tracker.best_f < best.f_opt:
            best = OptResult(tracker.best_x, tracker.best_f, 0, converged, k)
    if best is None:
        raise RuntimeError("no successful objective evaluation")
    return OptResult(best.x_opt, best.f_opt, total_evals, best.converged,
                     best.restart_index)
