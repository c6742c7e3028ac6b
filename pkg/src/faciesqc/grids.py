"""Grid, ensemble and well-data containers plus Geo-EAS/CSV ingestion.

Conventions used throughout the toolkit:

* row 0 is the top row, (row, col) indexing everywhere;
* serialization is row-major;
* the default facies alphabet is binary, 0 = mud, 1 = channel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridFormatError",
    "CategoricalGrid",
    "RealGrid",
    "Ensemble",
    "ConditioningSet",
    "parse_gslib_grid",
    "write_gslib_grid",
    "parse_points_csv",
    "write_points_csv",
    "threshold_grid",
]


class GridFormatError(ValueError):
    """Malformed grid or point-data input."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CategoricalGrid:
    """2D raster of integer facies codes."""

    cells: np.ndarray
    alphabet: frozenset = frozenset((0, 1))

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.ndim != 2 or cells.size == 0:
            raise GridFormatError("grid must be 2D and non-empty")
        codes = set(np.unique(cells).tolist())
        if not codes <= set(self.alphabet):
            raise GridFormatError(
                f"cell codes {sorted(codes - set(self.alphabet))} outside alphabet"
            )
        if any(c < 0 for c in self.alphabet):
            raise GridFormatError("facies codes must be non-negative")
        object.__setattr__(self, "cells", _freeze(cells))
        object.__setattr__(self, "alphabet", frozenset(int(c) for c in self.alphabet))

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> tuple:
        return self.cells.shape

    def indicator(self, code: int) -> np.ndarray:
        """0/1 float array marking cells equal to `code`."""
        return (self.cells == code).astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, CategoricalGrid):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )


@dataclass(frozen=True)
class RealGrid:
    """2D raster of finite real values."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.ndim != 2 or cells.size == 0:
            raise GridFormatError("grid must be 2D and non-empty")
        if not np.all(np.isfinite(cells)):
            raise GridFormatError("grid contains non-finite values")
        object.__setattr__(self, "cells", _freeze(cells))

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> tuple:
        return self.cells.shape

    def __eq__(self, other):
        if not isinstance(other, RealGrid):
            return NotImplemented
        return self.cells.shape == other.cells.shape and bool(
            np.array_equal(self.cells, other.cells)
        )


@dataclass(frozen=True)
class Ensemble:
    """Ordered collection of same-shaped categorical realizations."""

    members: tuple
    provenance: str = "external"

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble must be non-empty")
        first = members[0]
        for m in members:
            if not isinstance(m, CategoricalGrid):
                raise TypeError("ensemble members must be CategoricalGrid")
            if m.shape != first.shape or m.alphabet != first.alphabet:
                raise ValueError("ensemble members must share shape and alphabet")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def shape(self) -> tuple:
        return self.members[0].shape

    def stack(self, code: int) -> np.ndarray:
        """(n_members, n_rows, n_cols) indicator stack for `code`."""
        return np.stack([m.indicator(code) for m in self.members])


@dataclass(frozen=True)
class ConditioningSet:
    """Well data: (row, col, facies) observations at distinct locations."""

    points: tuple

    def __post_init__(self):
        pts = tuple((int(r), int(c), int(v)) for r, c, v in self.points)
        seen = set()
        for r, c, v in pts:
            if (r, c) in seen:
                raise GridFormatError(f"duplicate conditioning location ({r}, {c})")
            seen.add((r, c))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def check_bounds(self, n_rows: int, n_cols: int) -> "ConditioningSet":
        for r, c, _ in self.points:
            if not (0 <= r < n_rows and 0 <= c < n_cols):
                raise GridFormatError(
                    f"conditioning point ({r}, {c}) outside grid {n_rows}x{n_cols}"
                )
        return self


def parse_gslib_grid(text: str, kind: str = "categorical",
                     n_rows: int | None = None, n_cols: int | None = None,
                     alphabet=None):
    """Parse a Geo-EAS/GSLIB ASCII grid.

    Layout: title line (carrying "nx ny" as its first two integer tokens,
    unless dims are passed explicitly); variable count line; that many
    variable-name lines; whitespace-separated values in row-major order.
    """
    if kind not in ("categorical", "real"):
        raise ValueError(f"unknown grid kind {kind!r}")
    lines = text.splitlines()
    if len(lines) < 3:
        raise GridFormatError("truncated Geo-EAS file: header incomplete")
    title = lines[0]
    if n_rows is None or n_cols is None:
        ints = []
        for tok in title.split():
            try:
                ints.append(int(tok))
            except ValueError:
                continue
        if len(ints) < 2:
            raise GridFormatError(
                "grid dimensions not found in title line; pass them explicitly"
            )
        n_cols, n_rows = ints[0], ints[1]
    if n_rows < 1 or n_cols < 1:
        raise GridFormatError("grid dimensions must be positive")
    try:
        n_vars = int(lines[1].split()[0])
    except (ValueError, IndexError):
        raise GridFormatError(f"bad variable count line: {lines[1]!r}") from None
    if n_vars < 1 or len(lines) < 2 + n_vars:
        raise GridFormatError("variable-name lines missing")
    tokens = " ".join(lines[2 + n_vars:]).split()
    expected = n_rows * n_cols
    if len(tokens) != expected:
        raise GridFormatError(
            f"value count mismatch: expected {expected}, got {len(tokens)}"
        )
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        raise GridFormatError(f"unparseable value: {e}") from None
    if not np.all(np.isfinite(values)):
        raise GridFormatError("non-finite value in grid file")
    values = values.reshape(n_rows, n_cols)
    if kind == "real":
        return RealGrid(values)
    if not np.all(values == np.round(values)):
        raise GridFormatError("non-integer value in categorical grid file")
    cells = values.astype(np.int64)
    if alphabet is None:
        alphabet = frozenset(np.unique(cells).tolist()) | {0, 1}
    return CategoricalGrid(cells, frozenset(alphabet))


def write_gslib_grid(grid, title: str | None = None, var_name: str = "facies") -> str:
    """Serialize a grid to Geo-EAS ASCII; parse_gslib_grid round-trips it."""
    if title is None:
        title = f"{grid.n_cols} {grid.n_rows} grid"
    out = io.StringIO()
    out.write(f"{title}\n1\n{var_name}\n")
    if isinstance(grid, CategoricalGrid):
        for row in grid.cells:
            out.write(" ".join(str(int(v)) for v in row))
            out.write("\n")
    else:
        # 17 significant digits: bit-faithful float round trip
        for row in grid.cells:
            out.write(" ".join(f"{v:.17g}" for v in row))
            out.write("\n")
    return out.getvalue()


def parse_points_csv(text: str, bounds: tuple) -> ConditioningSet:
    """Parse well points from CSV with header row,col,facies."""
    n_rows, n_cols = bounds
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise GridFormatError("empty points file") from None
    if [h.strip().lower() for h in header] != ["row", "col", "facies"]:
        raise GridFormatError(f"expected header 'row,col,facies', got {header!r}")
    pts = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != 3:
            raise GridFormatError(f"line {lineno}: expected 3 fields, got {len(rec)}")
        try:
            r, c, v = (int(x.strip()) for x in rec)
        except ValueError:
            raise GridFormatError(f"line {lineno}: unparseable field in {rec!r}") from None
        pts.append((r, c, v))
    return ConditioningSet(pts).check_bounds(n_rows, n_cols)


def write_points_csv(data: ConditioningSet) -> str:
    out = io.StringIO()
    out.write("row,col,facies\n")
    for r, c, v in data.points:
        out.write(f"{r},{c},{v}\n")
    return out.getvalue()


def threshold_grid(g: RealGrid, cutoff: float = 0.5) -> CategoricalGrid:
    """Binary facies from a real grid: 1 where value >= cutoff, else 0."""
    return CategoricalGrid((g.cells >= cutoff).astype(np.int64), frozenset((0, 1)))
