"""Parameter containers shared by the particle dynamics and analysis tools."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "HKind",
    "KKind",
    "CoefficientProfile",
    "SimParams",
    "classical_profile",
    "power_to_min_profile",
]


class HKind(Enum):
    """Shape of the diffusion coefficient H."""

    UNIT = "unit"
    POWER_TO_MIN = "power_to_min"
    DIST_TO_CONSENSUS = "dist_to_consensus"


class KKind(Enum):
    """Shape of the drift weight K."""

    UNIT = "unit"
    H_POW_2ALPHA = "h_pow_2alpha"


@dataclass(frozen=True)
class CoefficientProfile:
    """Choice of the H (noise) and K (drift weight) coefficient functions.

    ``POWER_TO_MIN`` uses H(x) = |x - x_ref|**eta about a fixed reference
    point, ``DIST_TO_CONSENSUS`` uses the per-coordinate distance to the
    current consensus point, ``UNIT`` is the constant 1.  ``H_POW_2ALPHA``
    sets K = H**(2*alpha).
    """

    h_kind: HKind = HKind.DIST_TO_CONSENSUS
    k_kind: KKind = KKind.UNIT
    x_ref: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.h_kind is HKind.POWER_TO_MIN:
            if self.x_ref is None:
                raise ValueError("POWER_TO_MIN profile requires a reference point")
            ref = np.atleast_1d(np.asarray(self.x_ref, dtype=float))
            if ref.ndim != 1 or not np.all(np.isfinite(ref)):
                raise ValueError("reference point must be a finite 1-d point")
            ref = ref.copy()
            ref.setflags(write=False)
            object.__setattr__(self, "x_ref", ref)


def classical_profile() -> CoefficientProfile:
    """Anisotropic profile of classical CBO: H = |x - x_gamma|, K = 1."""
    return CoefficientProfile(HKind.DIST_TO_CONSENSUS, KKind.UNIT)


def power_to_min_profile(x_ref) -> CoefficientProfile:
    """H = |x - x_ref|**eta with K = H**(2*alpha), about a known minimizer."""
    return CoefficientProfile(HKind.POWER_TO_MIN, KKind.H_POW_2ALPHA, np.asarray(x_ref, dtype=float))


@dataclass(frozen=True)
class SimParams:
    """Model and numerical parameters for one simulation or optimization run.

    Attributes
    ----------
    lam : drift rate (> 0).
    sigma : diffusion strength (>= 0); ``sigma2`` exposes its square.
    beta : superlinear coupling strength (>= 0); 0 recovers classical CBO.
    alpha : exponent applied to the reconstructed density (>= 0).
    gamma : sharpness of the weighted consensus point (> 0).
    eta : coefficient exponent in [0, 1/2); 0 means H == 1 for the
        POWER_TO_MIN profile.
    domain_halfwidth : half-width L of the default symmetric search box.
    dt_max : time-step cap (> 0); the adaptive rule never exceeds it.
    n_bins : odd histogram bin count (>= 3); odd so that the center of a
        symmetric box is a bin center and never a grid node.
    seed : master RNG seed.
    profile : coefficient profile, see :class:`CoefficientProfile`.
    """

    lam: float = 1.0
    sigma: float = 0.5
    beta: float = 0.0
    alpha: float = 0.0
    gamma: float = 50.0
    eta: float = 0.0
    domain_halfwidth: float = 3.0
    dt_max: float = 0.05
    n_bins: int = 201
    seed: int = 0
    profile: CoefficientProfile = field(default_factory=classical_profile)

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {self.eta}")
        if not self.domain_halfwidth > 0:
            raise ValueError("domain_halfwidth must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.n_bins < 3 or self.n_bins % 2 == 0:
            raise ValueError(f"n_bins must be an odd integer >= 3, got {self.n_bins}")

    @property
    def sigma2(self) -> float:
        return self.sigma * self.sigma
