"""Ensemble acceptance checks for categorical facies models.

Covers local accuracy (confusion counts / F1 at well locations), local
uncertainty (binary Shannon entropy maps), facies proportions and their
histograms, by-pixel average and dispersion maps, moving-window multiscale
proportions, directional indicator semivariograms with percentile envelopes,
and connected-geobody counting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grids import CategoricalGrid, ConditioningSet, Ensemble, RealGrid

__all__ = [
    "ConfusionCounts",
    "Semivariogram",
    "Envelope",
    "GeobodyLabeling",
    "Histogram",
    "confusion_at_points",
    "f1_score",
    "accuracy",
    "entropy_map",
    "entropy_at_points",
    "facies_proportion",
    "proportion_histogram",
    "pixel_average_map",
    "pixel_dispersion_map",
    "moving_window_proportions",
    "window_scatter",
    "directional_semivariogram",
    "ensemble_semivariogram_envelope",
    "count_geobodies",
    "percentile",
]

# TI channel proportion reported for the original (unavailable) training image;
# kept as a reference constant only.
REFERENCE_TI_PROPORTION = 0.282


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Semivariogram:
    """Experimental indicator semivariogram along one lag direction.

    `lags` is a tuple of (h, gamma, n_pairs); lags with no in-bounds pairs
    are omitted.
    """

    direction: tuple
    lags: tuple

    @property
    def h(self) -> tuple:
        return tuple(l[0] for l in self.lags)

    @property
    def gamma(self) -> tuple:
        return tuple(l[1] for l in self.lags)


@dataclass(frozen=True)
class Envelope:
    """Per-lag/bin percentile band across an ensemble."""

    index: tuple
    lower: tuple
    upper: tuple
    p_lo: float
    p_hi: float

    def __post_init__(self):
        for lo, hi in zip(self.lower, self.upper):
            if lo > hi:
                raise ValueError("envelope lower bound exceeds upper bound")


@dataclass(frozen=True)
class GeobodyLabeling:
    labels: np.ndarray
    count: int
    connectivity: int


@dataclass(frozen=True)
class Histogram:
    edges: tuple
    counts: tuple


def confusion_at_points(realization: CategoricalGrid, data: ConditioningSet,
                        positive: int = 1) -> ConfusionCounts:
    """Confusion counts of the realization against well data.

    Binary treatment: cells equal to `positive` are the positive class,
    everything else negative.
    """
    if len(data) == 0:
        raise ValueError("conditioning set is empty")
    data.check_bounds(realization.n_rows, realization.n_cols)
    tp = fp = fn = tn = 0
    for r, c, v in data.points:
        truth_pos = v == positive
        pred_pos = int(realization.cells[r, c]) == positive
        if pred_pos and truth_pos:
            tp += 1
        elif pred_pos and not truth_pos:
            fp += 1
        elif not pred_pos and truth_pos:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def f1_score(c: ConfusionCounts) -> float:
    """F1 = 2pr/(p+r).

    Degenerate cases: no true positives with any fp/fn present -> 0.0;
    all evaluated points true negatives -> 1.0 (vacuous agreement).
    """
    if c.total == 0:
        raise ValueError("no points evaluated")
    if c.tp == 0:
        return 1.0 if c.fp == 0 and c.fn == 0 else 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    return 2.0 * precision * recall / (precision + recall)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ValueError("no points evaluated")
    return (c.tp + c.tn) / c.total


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    h = np.zeros_like(p)
    for q in (p, 1.0 - p):
        mask = q > 0.0
        h[mask] -= q[mask] * np.log2(q[mask])
    return h


def entropy_map(e: Ensemble, positive: int = 1) -> RealGrid:
    """Per-pixel binary Shannon entropy (base 2) of the positive-facies
    probability across the ensemble; values in [0, 1]."""
    p = e.stack(positive).mean(axis=0)
    return RealGrid(_binary_entropy(p))


def entropy_at_points(h: RealGrid, data: ConditioningSet) -> list:
    """Entropy values sampled at well locations, in point order."""
    data.check_bounds(h.n_rows, h.n_cols)
    return [float(h.cells[r, c]) for r, c, _ in data.points]


def facies_proportion(g: CategoricalGrid, code: int = 1) -> float:
    return float(np.count_nonzero(g.cells == code)) / g.cells.size


def proportion_histogram(e: Ensemble, code: int = 1, bin_width: float = 0.05) -> Histogram:
    """Histogram of per-member facies proportions.

    Bins start at 0 with half-open intervals [lo, hi); the last bin is
    closed so the maximum proportion is always counted.
    """
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    props = [facies_proportion(m, code) for m in e.members]
    # small tolerance so proportions sitting on a bin edge land in the
    # upper bin despite float division noise
    idx = [int(np.floor(p / bin_width + 1e-9)) for p in props]
    n_bins = max(idx) + 1
    counts = [0] * n_bins
    for i in idx:
        counts[i] += 1
    edges = tuple(k * bin_width for k in range(n_bins + 1))
    return Histogram(edges, tuple(counts))


def pixel_average_map(e: Ensemble, positive: int = 1) -> RealGrid:
    """By-pixel mean of the positive-facies indicator over the ensemble."""
    return RealGrid(e.stack(positive).mean(axis=0))


def pixel_dispersion_map(e: Ensemble, positive: int = 1) -> RealGrid:
    """By-pixel population variance of the indicator; equals m(1-m)."""
    stack = e.stack(positive)
    m = stack.mean(axis=0)
    return RealGrid((stack * stack).mean(axis=0) - m * m)


def moving_window_proportions(g: CategoricalGrid, code: int = 1,
                              window: int = 3, stride: int = 1) -> RealGrid:
    """Facies proportion of `code` in every fully-interior window."""
    if window < 1 or window > min(g.n_rows, g.n_cols):
        raise ValueError(f"window {window} does not fit grid {g.shape}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    ind = g.indicator(code)
    views = np.lib.stride_tricks.sliding_window_view(ind, (window, window))
    means = views.mean(axis=(2, 3))
    return RealGrid(means[::stride, ::stride])


def window_scatter(ti: CategoricalGrid, realization: CategoricalGrid,
                   code: int = 1, window: int = 3, stride: int = 1) -> list:
    """(TI proportion, realization proportion) pairs from identical window
    positions, row-major order."""
    if ti.shape != realization.shape:
        raise ValueError("TI and realization shapes differ")
    a = moving_window_proportions(ti, code, window, stride).cells.ravel()
    b = moving_window_proportions(realization, code, window, stride).cells.ravel()
    return list(zip(a.tolist(), b.tolist()))


def directional_semivariogram(g: CategoricalGrid, positive: int = 1,
                              direction: tuple = (0, 1),
                              max_lag: int = 10) -> Semivariogram:
    """Experimental indicator semivariogram: gamma(h) = sum of squared
    indicator differences over all in-bounds pairs at lag h*direction,
    divided by 2*N(h)."""
    d_row, d_col = direction
    if d_row == 0 and d_col == 0:
        raise ValueError("direction vector must be nonzero")
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    z = g.indicator(positive)
    nr, nc = z.shape
    lags = []
    for h in range(1, max_lag + 1):
        dr, dc = h * d_row, h * d_col
        if abs(dr) >= nr or abs(dc) >= nc:
            continue
        a = z[max(0, -dr):nr - max(0, dr), max(0, -dc):nc - max(0, dc)]
        b = z[max(0, dr):nr - max(0, -dr), max(0, dc):nc - max(0, -dc)]
        n_pairs = a.size
        if n_pairs == 0:
            continue
        diff = a - b
        gamma = float(np.dot(diff.ravel(), diff.ravel())) / (2.0 * n_pairs)
        lags.append((h, gamma, n_pairs))
    return Semivariogram((d_row, d_col), tuple(lags))


def ensemble_semivariogram_envelope(e: Ensemble, positive: int = 1,
                                    direction: tuple = (0, 1), max_lag: int = 10,
                                    p_lo: float = 10.0, p_hi: float = 90.0) -> Envelope:
    """Per-lag (p_lo, p_hi) percentile band of gamma across members."""
    if not (0 <= p_lo < p_hi <= 100):
        raise ValueError("require 0 <= p_lo < p_hi <= 100")
    gammas = [directional_semivariogram(m, positive, direction, max_lag)
              for m in e.members]
    hs = gammas[0].h  # members share shape, hence identical lag support
    lower, upper = [], []
    for i, _h in enumerate(hs):
        vals = [sv.lags[i][1] for sv in gammas]
        lower.append(percentile(vals, p_lo))
        upper.append(percentile(vals, p_hi))
    return Envelope(hs, tuple(lower), tuple(upper), p_lo, p_hi)


_STRUCTURE = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


def count_geobodies(g: CategoricalGrid, code: int = 1,
                    connectivity: int = 8) -> GeobodyLabeling:
    """Label connected components of cells equal to `code`."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    labels, count = ndimage.label(g.cells == code, structure=_STRUCTURE[connectivity])
    labels = labels.astype(np.int64)
    labels.setflags(write=False)
    return GeobodyLabeling(labels, int(count), connectivity)


def percentile(values, p: float) -> float:
    """Percentile with linear interpolation between closest ranks:
    rank r = (p/100)*(n-1), interpolated between floor(r) and ceil(r)."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("percentile of empty list")
    if not (0 <= p <= 100):
        raise ValueError("percentile must be in [0, 100]")
    return float(np.percentile(arr, p, method="linear"))
