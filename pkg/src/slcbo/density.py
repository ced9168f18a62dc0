"""Histogram reconstruction of one-dimensional (marginal) densities.

The estimator is a box-kernel histogram with bandwidth equal to one bin
width on a staggered mesh: the bin count is odd, so the symmetry point of
a symmetric box is a bin center and never a grid node.  Values carry units
of mass per unit length and sum (times the bin width) to the represented
mass times the in-domain fraction; coordinates outside the box contribute
zero density.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "StaggeredGrid",
    "DensityGrid",
    "make_grid",
    "build_histogram",
    "eval_density",
    "density_to_csv",
    "MarginalDensities",
    "build_marginal_histograms",
]


@dataclass(frozen=True)
class StaggeredGrid:
    """Uniform 1-d mesh with an odd number of bins on [lo, hi]."""

    lo: float
    hi: float
    n_bins: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.n_bins < 3 or self.n_bins % 2 == 0:
            raise ValueError(
                f"n_bins must be an odd integer >= 3 (staggered mesh), got {self.n_bins}"
            )

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n_bins) + 0.5) * self.bin_width

    @property
    def edges(self) -> np.ndarray:
        return self.lo + np.arange(self.n_bins + 1) * self.bin_width


def make_grid(lo: float, hi: float, n_bins: int) -> StaggeredGrid:
    """Build a staggered grid; rejects even bin counts."""
    return StaggeredGrid(float(lo), float(hi), int(n_bins))


def _bin_indices(grid: StaggeredGrid, coords: np.ndarray):
    """Half-open bin membership [edge_k, edge_{k+1}); the last bin is closed.

    Returns clipped integer indices plus the in-domain mask.
    """
    x = np.asarray(coords, dtype=float)
    inside = (x >= grid.lo) & (x <= grid.hi)
    t = (x - grid.lo) / (grid.hi - grid.lo) * grid.n_bins
    idx = np.floor(t).astype(np.int64)
    np.clip(idx, 0, grid.n_bins - 1, out=idx)
    return idx, inside


@dataclass(frozen=True)
class DensityGrid:
    """Piecewise-constant density estimate (mass per unit length) on a grid."""

    grid: StaggeredGrid
    values: np.ndarray
    mass: float

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_bins,):
            raise ValueError("values must have one entry per bin")
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mass", float(self.mass))


def build_histogram(coords, grid: StaggeredGrid, mass: float) -> DensityGrid:
    """Histogram of 1-d coordinates: value_k = mass * count_k / (N * bin_width).

    Coordinates outside [lo, hi] are dropped (zero density contribution);
    the divisor N is the total coordinate count, so the histogram mass is
    ``mass`` times the in-domain fraction.
    """
    x = np.asarray(coords, dtype=float).ravel()
    if x.size < 1:
        raise ValueError("need at least one coordinate")
    idx, inside = _bin_indices(grid, x)
    counts = np.bincount(idx[inside], minlength=grid.n_bins)
    values = mass * counts / (x.size * grid.bin_width)
    return DensityGrid(grid, values, mass)


def eval_density(dg: DensityGrid, x) -> Union[float, np.ndarray]:
    """Value of the bin containing x; 0 outside [lo, hi].  Array-friendly."""
    arr = np.asarray(x, dtype=float)
    idx, inside = _bin_indices(dg.grid, arr)
    out = np.where(inside, dg.values[idx], 0.0)
    if arr.ndim == 0:
        return float(out)
    return out


def density_to_csv(dg: DensityGrid, path) -> None:
    """Write (bin_center, value) rows for plotting."""
    centers = dg.grid.centers
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_center", "value"])
        for c, v in zip(centers, dg.values):
            writer.writerow([repr(float(c)), repr(float(v))])


@dataclass(frozen=True)
class MarginalDensities:
    """Per-coordinate marginal histograms sharing one bin count.

    ``values`` has shape (dim, n_bins); row j is the histogram of coordinate
    j of the ensemble on its own box.  Built in one fused pass so the
    multi-dimensional steppers avoid a Python loop over coordinates.
    """

    lo: np.ndarray
    hi: np.ndarray
    n_bins: int
    values: np.ndarray
    mass: float

    def grid(self, j: int) -> StaggeredGrid:
        return StaggeredGrid(float(self.lo[j]), float(self.hi[j]), self.n_bins)

    def values_at(self, positions: np.ndarray) -> np.ndarray:
        """Density of marginal j at positions[:, j]; 0 outside the box."""
        t = (positions - self.lo) / (self.hi - self.lo) * self.n_bins
        idx = np.floor(t).astype(np.int64)
        np.clip(idx, 0, self.n_bins - 1, out=idx)
        inside = (positions >= self.lo) & (positions <= self.hi)
        cols = np.arange(positions.shape[1])
        return np.where(inside, self.values[cols, idx], 0.0)


def build_marginal_histograms(
    positions: np.ndarray, lo, hi, n_bins: int, mass: float
) -> MarginalDensities:
    """Fused per-coordinate histograms of an (N, d) position array."""
    pos = np.asarray(positions, dtype=float)
    n, d = pos.shape
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))
    if not np.all(lo < hi):
        raise ValueError("degenerate box")
    if n_bins < 3 or n_bins % 2 == 0:
        raise ValueError(f"n_bins must be an odd integer >= 3, got {n_bins}")

    t = (pos - lo) / (hi - lo) * n_bins
    idx = np.floor(t).astype(np.int64)
    np.clip(idx, 0, n_bins - 1, out=idx)
    inside = (pos >= lo) & (pos <= hi)
    flat = idx + n_bins * np.arange(d)
    counts = np.bincount(flat.ravel()[inside.ravel()], minlength=n_bins * d)
    widths = (hi - lo) / n_bins
    values = mass * counts.reshape(d, n_bins) / (n * widths[:, None])
    return MarginalDensities(lo.copy(), hi.copy(), int(n_bins), values, float(mass))
