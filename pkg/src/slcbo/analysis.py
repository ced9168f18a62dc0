"""Closed-form steady states, critical mass and blow-up time predictors.

These are the analytic oracles the particle runs are validated against.
The stationary profile solves the zero-flux balance of the drift term
lam*(x - x_star)*(1 + beta*K*f^alpha)*f against the diffusion flux
(sigma^2/2) * d/dx (H^2 f) for H(x) = |x - x_star|**eta, K = H**(2*alpha).
Writing g = H^2 f and integrating g' / (g*(1 + beta*g^alpha)) gives

    g_inf / (1 + beta*g_inf^alpha)^(1/alpha) = C * exp(-q * |x - x_star|^(2(1-eta)))

with q = lam / (sigma^2 * (1 - eta)), hence

    f_inf(x) = |x - x_star|^(-2*eta) * C * exp(-q*s)
               / (1 - beta * C^alpha * exp(-q*alpha*s))^(1/alpha),

s = |x - x_star|^(2(1-eta)).  Positivity of the denominator caps the
integration constant at C_M = beta^(-1/alpha); at C = C_M the profile
diverges at x_star with order 2*eta + 2*(1-eta)/alpha and its total mass
(the critical mass rho_c) is finite exactly when that order is < 1
(alpha > 2 in the eta = 0 case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad

__all__ = [
    "SteadyStateSpec",
    "steady_state_density",
    "critical_constant",
    "singularity_order",
    "steady_state_mass",
    "CriticalMassResult",
    "critical_mass",
    "solve_constant_for_mass",
    "blowup_constants",
    "blowup_time_v",
    "theta_xi",
    "blowup_time_u",
    "supercritical_mass_check",
]

# exp(-q*s) below this is negligible against every tolerance used here
_TAIL_LOG = 69.0775527898  # -log(1e-30)


def critical_constant(beta: float, alpha: float) -> float:
    """Largest admissible integration constant C_M = (1/beta)**(1/alpha).

    beta = 0 removes the constraint entirely and returns +inf.
    """
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if beta == 0:
        return math.inf
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (1.0 / beta) ** (1.0 / alpha)


@dataclass(frozen=True)
class SteadyStateSpec:
    """Parameters of the stationary profile.

    ``constant=None`` selects the critical constant C_M.  For beta > 0 the
    constant must satisfy 0 < C <= C_M; beta = 0 admits any C > 0 (the
    profile degenerates to the weighted Gaussian-type envelope).
    """

    lam: float
    sigma: float
    beta: float
    alpha: float
    eta: float = 0.0
    x_star: float = 0.0
    constant: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive for a stationary profile")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 <= self.eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {self.eta}")
        if self.beta > 0 and not self.alpha > 0:
            raise ValueError("alpha must be positive when beta > 0")
        if self.constant is not None:
            cm = critical_constant(self.beta, self.alpha) if self.beta > 0 else math.inf
            if not 0 < self.constant <= cm * (1.0 + 1e-12):
                raise ValueError(
                    f"constant must lie in (0, C_M]; got {self.constant} with C_M = {cm}"
                )
        elif self.beta == 0:
            raise ValueError("constant=None (critical) requires beta > 0")

    @property
    def sigma2(self) -> float:
        return self.sigma * self.sigma

    @property
    def decay_rate(self) -> float:
        """q in exp(-q * |x - x_star|^(2(1-eta)))."""
        return self.lam / (self.sigma2 * (1.0 - self.eta))

    @property
    def resolved_constant(self) -> float:
        if self.constant is None:
            return critical_constant(self.beta, self.alpha)
        return float(self.constant)

    @property
    def is_critical(self) -> bool:
        if self.beta == 0:
            return False
        return self.constant is None or self.constant == critical_constant(self.beta, self.alpha)


def singularity_order(spec: SteadyStateSpec) -> float:
    """Divergence order of the critical profile at x_star.

    f_inf(x) ~ |x - x_star|**(-order); the critical mass is finite iff
    order < 1.  For eta = 0 this is 2/alpha.
    """
    if not spec.beta > 0:
        raise ValueError("singularity requires beta > 0")
    return 2.0 * spec.eta + 2.0 * (1.0 - spec.eta) / spec.alpha


def _density_of_offset(u, spec: SteadyStateSpec):
    """f_inf at |x - x_star| = u, vectorized over u >= 0."""
    u = np.asarray(u, dtype=float)
    c = spec.resolved_constant
    q = spec.decay_rate
    s = u ** (2.0 * (1.0 - spec.eta))
    envelope = c * np.exp(-q * s)
    with np.errstate(divide="ignore"):
        if spec.beta > 0:
            base = 1.0 - spec.beta * c**spec.alpha * np.exp(-q * spec.alpha * s)
            base = np.maximum(base, 0.0)  # guards rounding at C == C_M
            denom = base ** (1.0 / spec.alpha)
        else:
            denom = np.ones_like(envelope)
        if spec.eta > 0:
            prefactor = u ** (-2.0 * spec.eta)
        else:
            prefactor = np.ones_like(u, dtype=float)
        out = prefactor * envelope / denom
    return out


def steady_state_density(x, spec: SteadyStateSpec):
    """Stationary density at x (scalar or array); +inf at an actual pole."""
    x = np.asarray(x, dtype=float)
    out = _density_of_offset(np.abs(x - spec.x_star), spec)
    if x.ndim == 0:
        return float(out)
    return out


def _truncation_radius(spec: SteadyStateSpec) -> float:
    """Offset beyond which exp(-q*s) < 1e-30; super-Gaussian decay makes the
    remaining tail mass negligible and easy to bound."""
    return (_TAIL_LOG / spec.decay_rate) ** (1.0 / (2.0 * (1.0 - spec.eta)))


def steady_state_mass(spec: SteadyStateSpec) -> float:
    """Total mass of a subcritical profile by adaptive quadrature."""
    if spec.is_critical:
        raise ValueError("use critical_mass for the critical constant")
    radius = _truncation_radius(spec)
    value, _ = quad(
        lambda u: _density_of_offset(u, spec),
        0.0,
        radius,
        epsabs=1e-12,
        epsrel=1e-10,
        limit=500,
    )
    return 2.0 * value


@dataclass(frozen=True)
class CriticalMassResult:
    """Critical mass with a quadrature-error estimate.

    ``diverged=True`` (value +inf) reports that the refinement levels grow
    without bound, which happens whenever the singularity order is >= 1;
    ``levels`` holds the raw window integrals for inspection.
    """

    value: float
    error: float
    diverged: bool
    levels: Tuple[float, ...]


def critical_mass(spec: SteadyStateSpec, rel_tol: float = 1e-6, max_levels: int = 40) -> CriticalMassResult:
    """Mass of the critical profile f_inf with C = C_M.

    The integrable singularity at x_star defeats fixed grids, so the mass
    is computed on windows excluding |x - x_star| < delta_k with delta_k
    shrunk geometrically (factor 1/4 per level) and Richardson-extrapolated
    using the known singularity order; iteration stops when two successive
    extrapolants agree to ``rel_tol`` relative.
    """
    if not spec.beta > 0:
        raise ValueError("critical mass requires beta > 0")
    crit = replace(spec, constant=None)
    order = singularity_order(crit)
    radius = _truncation_radius(crit)
    q = crit.decay_rate
    delta0 = min((0.25 / q) ** (1.0 / (2.0 * (1.0 - crit.eta))), radius / 8.0)

    def window(delta: float) -> Tuple[float, float]:
        val, err = quad(
            lambda u: _density_of_offset(u, crit),
            delta,
            radius,
            epsabs=1e-11,
            epsrel=1e-10,
            limit=500,
        )
        return 2.0 * val, 2.0 * err

    if order >= 1.0:
        levels = []
        for k in range(6):
            val, _ = window(delta0 * 0.25**k)
            levels.append(val)
        return CriticalMassResult(math.inf, math.inf, True, tuple(levels))

    # Excluded tail scales like delta**(1-order); one Richardson step with
    # the known exponent cancels it to the next order.
    ratio = 0.25 ** (1.0 - order)
    levels = []
    quad_err = 0.0
    prev_extrap = None
    val, err = window(delta0)
    levels.append(val)
    quad_err += err
    for k in range(1, max_levels):
        val_next, err = window(delta0 * 0.25**k)
        levels.append(val_next)
        quad_err += err
        extrap = val_next + (val_next - val) * ratio / (1.0 - ratio)
        if prev_extrap is not None:
            diff = abs(extrap - prev_extrap)
            if diff <= rel_tol * abs(extrap):
                error = diff + quad_err + 1e-15 * abs(extrap)
                return CriticalMassResult(extrap, error, False, tuple(levels))
        prev_extrap = extrap
        val = val_next
    raise RuntimeError("critical_mass failed to converge; check parameters")


def solve_constant_for_mass(rho: float, spec: SteadyStateSpec, rel_tol: float = 1e-8) -> float:
    """Invert mass(C) = rho by bisection on C in (0, C_M).

    mass(C) is strictly increasing and continuous, so bisection converges;
    requires subcritical rho when the critical mass is finite.  The
    ``constant`` field of ``spec`` is ignored.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")

    def mass_at(c: float) -> float:
        return steady_state_mass(replace(spec, constant=c))

    if spec.beta == 0:
        # mass is exactly linear in C
        return rho / mass_at(1.0)

    cm = critical_constant(spec.beta, spec.alpha)
    if singularity_order(replace(spec, constant=None)) < 1.0:
        rho_c = critical_mass(spec)
        if rho >= rho_c.value:
            raise ValueError(
                f"supercritical mass: rho = {rho} >= rho_c = {rho_c.value:.6g}; "
                "no steady profile carries that much mass"
            )

    hi = 0.5 * cm
    for _ in range(200):
        if mass_at(hi) >= rho:
            break
        hi = cm - 0.5 * (cm - hi)
    else:
        raise RuntimeError("failed to bracket the mass equation near C_M")

    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m = mass_at(mid)
        if abs(m - rho) < rel_tol * rho:
            return mid
        if m < rho:
            lo = mid
        else:
            hi = mid
    raise RuntimeError("bisection for the mass constant did not reach tolerance")


def blowup_constants(alpha: float) -> Tuple[float, float]:
    """(c_alpha, d_alpha) with c = 2a/(a-2), d = (2(a+1)/(c(a-2)))^(1/3); alpha > 2."""
    if not alpha > 2:
        raise ValueError(f"blow-up constants are defined only for alpha > 2, got {alpha}")
    c = 2.0 * alpha / (alpha - 2.0)
    d = (2.0 * (alpha + 1.0) / (c * (alpha - 2.0))) ** (1.0 / 3.0)
    return c, d


def blowup_time_v(alpha: float, lam: float, beta: float, rho: float, v0: float) -> float:
    """Upper bound on the vanishing time of the second-moment energy:

        t_bar = (c_a*d_a + d_a^-2)^(3a/2) * V(0)^(a/2) / (2*lam*beta*rho^(3a/2)).
    """
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if not (lam > 0 and beta > 0 and rho > 0):
        raise ValueError("lam, beta and rho must be positive")
    if v0 < 0:
        raise ValueError(f"v0 must be nonnegative, got {v0}")
    c, d = blowup_constants(alpha)
    return (c * d + d**-2) ** (1.5 * alpha) * v0 ** (alpha / 2.0) / (
        2.0 * lam * beta * rho ** (1.5 * alpha)
    )


def theta_xi(
    alpha: float, eta: float, lam: float, beta: float, sigma: float, m2: float, m4: float
) -> Tuple[float, float]:
    """Coefficients of the weighted-energy inequality dU/dt <= -Theta/U^((a-2)/2) + Xi.

    ``m2`` and ``m4`` are the initial weighted moments of H^2 and H^4 against
    the starting density.
    """
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    c, d = blowup_constants(alpha)
    theta = (2.0 * lam * (eta + 1.0) * beta / (c + d**-2) * m2) ** (1.5 * alpha)
    xi = sigma * sigma * (eta + 1.0) * (2.0 * eta + 1.0) * m4
    return theta, xi


def blowup_time_u(
    alpha: float,
    eta: float,
    lam: float,
    beta: float,
    sigma: float,
    u0: float,
    m2: float,
    m4: float,
) -> Optional[float]:
    """Vanishing time of the weighted energy U, or None when no prediction holds.

        t_star = 2*U(0)^(a/2) / (a * [Theta - Xi * U(0)^((a-2)/2)])

    The prediction requires Theta - Xi*U(0)^((a-2)/2) > 0, i.e.
    U(0) < (Theta/Xi)^(2/(a-2)); at or beyond that threshold the bound is
    vacuous and None is returned.  Valid for alpha > 2 and eta < 1/4.
    """
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if not 0.0 <= eta < 0.25:
        raise ValueError(f"eta must lie in [0, 1/4) for the decay bound, got {eta}")
    if u0 < 0:
        raise ValueError(f"u0 must be nonnegative, got {u0}")
    theta, xi = theta_xi(alpha, eta, lam, beta, sigma, m2, m4)
    denominator = alpha * (theta - xi * u0 ** ((alpha - 2.0) / 2.0))
    if denominator <= 0:
        return None
    return 2.0 * u0 ** (alpha / 2.0) / denominator


def supercritical_mass_check(
    rho: float, t0: float, alpha: float, eta: float, theta: float, xi: float
) -> bool:
    """True when the mass strictly exceeds the condensation threshold

        rho > (T(0)^((a-2)/2) * Xi / Theta)^(2/a),

    where T = U/rho is the normalized weighted energy."""
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if t0 < 0 or theta <= 0 or xi < 0:
        raise ValueError("need t0 >= 0, theta > 0 and xi >= 0")
    threshold = (t0 ** ((alpha - 2.0) / 2.0) * xi / theta) ** (2.0 / alpha)
    return rho > threshold
