"""Particle-system state, initialization and moment estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .params import SimParams

__all__ = ["Ensemble", "init_ensemble", "ensemble_variance", "weighted_moment"]

RngLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def as_generator(rng: RngLike, fallback_seed: int = 0) -> np.random.Generator:
    """Normalize seeds, seed sequences and generators to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng(fallback_seed)
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Ensemble:
    """Immutable particle ensemble: ``positions`` has shape (count, dim).

    ``mass`` is the total mass the particles represent; histograms and
    moment estimators scale with it, so it feeds directly into the
    superlinear drift term.  Particle count and mass are conserved by the
    dynamics.
    """

    positions: np.ndarray
    mass: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValueError(f"positions must be a (count, dim) array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        pos = np.ascontiguousarray(pos)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "mass", float(self.mass))

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def init_ensemble(
    params: SimParams,
    dim: int,
    count: int,
    mass: float,
    init: str = "uniform",
    *,
    box: Optional[tuple] = None,
    center=None,
    spread: Optional[float] = None,
    rng: RngLike = None,
) -> Ensemble:
    """Sample an initial ensemble from the requested distribution.

    ``init`` is either ``"uniform"`` (over the search box) or
    ``"truncated_gaussian"`` (independent normals with ``center``/``spread``,
    resampled until inside the box).  ``box`` overrides the symmetric
    default ``[-L, L]`` per coordinate; pass ``(lo, hi)`` arrays or scalars.
    Identical seeds produce bit-identical ensembles.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")

    if box is None:
        lo = np.full(dim, -params.domain_halfwidth)
        hi = np.full(dim, params.domain_halfwidth)
    else:
        lo = np.broadcast_to(np.asarray(box[0], dtype=float), (dim,)).copy()
        hi = np.broadcast_to(np.asarray(box[1], dtype=float), (dim,)).copy()
    if not np.all(lo < hi):
        raise ValueError(f"degenerate box: lo={lo}, hi={hi}")

    gen = as_generator(rng, params.seed)
    if init == "uniform":
        positions = gen.uniform(lo, hi, size=(count, dim))
    elif init == "truncated_gaussian":
        if center is None or spread is None:
            raise ValueError("truncated_gaussian needs center and spread")
        ctr = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
        if not spread > 0:
            raise ValueError("spread must be positive")
        positions = gen.normal(ctr, spread, size=(count, dim))
        for _ in range(10_000):
            outside = np.any((positions < lo) | (positions > hi), axis=1)
            if not outside.any():
                break
            positions[outside] = gen.normal(ctr, spread, size=(int(outside.sum()), dim))
        else:
            raise ValueError("truncated_gaussian: resampling failed to land inside the box")
    else:
        raise ValueError(f"unknown init distribution {init!r}")

    return Ensemble(positions, mass)


def ensemble_variance(e: Ensemble) -> float:
    """Trace of the empirical covariance: (1/N) * sum_i |X_i - Xbar|^2.

    This single scalar is the stopping statistic used by the optimizers.
    """
    return float(e.positions.var(axis=0).sum())


def weighted_moment(e: Ensemble, center, power: float, coordinate: Optional[int] = None) -> float:
    """Mass-weighted moment estimator (rho/N) * sum_i |X_{i,j} - c_j|^power.

    With ``coordinate=None`` the per-coordinate moments are summed.  With
    ``power=2`` and the global minimizer as center this estimates the
    second-moment energy V(t); ``power = 2*eta + 2`` gives the weighted
    energy U(t), and U/rho the normalized form.
    """
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    ctr = np.broadcast_to(np.asarray(center, dtype=float), (e.dim,))
    diffs = np.abs(e.positions - ctr)
    if coordinate is not None:
        diffs = diffs[:, coordinate]
    moments = diffs**power
    return float(e.mass / e.count * moments.sum(axis=0).sum())
