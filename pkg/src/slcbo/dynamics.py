"""Euler-Maruyama steppers for the superlinear consensus dynamics.

One step advances every particle simultaneously by

    X <- X + lam*dt*(x_gamma - X) * (1 + beta*K(X)*f(X)**alpha)
           + sigma*sqrt(dt) * H(X) * xi,      xi ~ N(0, 1),

where f is the per-coordinate histogram density (mass-weighted, rebuilt
each step from the pre-step positions) and x_gamma the consensus point.
The time step obeys dt <= min(dt_max, 1/max(beta*K*f**alpha)): the
superlinear drift factor may grow without bound in condensation regimes
and the product dt * max-factor must never exceed 1 or particles overshoot
the consensus point.

Each step draws exactly one (count, dim) standard-normal array from the
supplied generator, so trajectories with paired seeds stay comparable
across parameter choices and the classical baseline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .consensus import ConsensusPoint, consensus_point, consensus_point_from_density
from .density import DensityGrid, StaggeredGrid, build_marginal_histograms
from .ensemble import Ensemble, as_generator, ensemble_variance, weighted_moment
from .params import CoefficientProfile, HKind, KKind, SimParams

__all__ = [
    "Termination",
    "StepReport",
    "StoppingRule",
    "RunRecord",
    "adaptive_dt",
    "step_1d",
    "step_marginal",
    "step_classical",
    "run_until",
    "series_to_csv",
]


class Termination(Enum):
    VARIANCE = "variance"
    MAX_ITERS = "max_iters"
    MAX_TIME = "max_time"


@dataclass(frozen=True)
class StepReport:
    """What one accepted step did: the dt taken, which constraint bound it
    ("cap" or "density"), and the largest superlinear drift factor seen."""

    dt_used: float
    dt_binding: str
    max_drift_factor: float


@dataclass(frozen=True)
class StoppingRule:
    """First satisfied rule terminates a run; checks happen before each step.

    ``variance_threshold=None`` disables the variance stop entirely.
    """

    t_max: float = math.inf
    n_max: int = 10_000_000
    variance_threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        if math.isinf(self.t_max) and self.n_max >= 10_000_000 and self.variance_threshold is None:
            raise ValueError("stopping rule never triggers; give a finite t_max, n_max or threshold")


@dataclass
class RunRecord:
    """Full outcome of one simulation or optimization run."""

    params: SimParams
    termination: Termination
    iterations: int
    final_time: float
    final_ensemble: Ensemble
    final_consensus: Optional[np.ndarray]
    cfl_max_product: float
    objective_name: Optional[str] = None
    seed: Optional[int] = None
    max_coord_error: Optional[float] = None
    l2_error: Optional[float] = None
    f_at_consensus: Optional[float] = None
    series: Optional[dict] = None


def adaptive_dt(drift_factors, dt_max: float) -> float:
    """Time step min(dt_max, 1/max(factors)); dt_max alone when all factors
    vanish (classical dynamics have no density constraint)."""
    if not dt_max > 0:
        raise ValueError("dt_max must be positive")
    factors = np.asarray(drift_factors, dtype=float)
    if factors.size and np.any(factors < 0):
        raise ValueError("drift factors must be nonnegative")
    fmax = float(factors.max()) if factors.size else 0.0
    if fmax > 0.0:
        return min(dt_max, 1.0 / fmax)
    return dt_max


def _coordinate_boxes(params: SimParams, objective, dim: int):
    if objective is not None:
        return objective.lo, objective.hi
    half = params.domain_halfwidth
    return np.full(dim, -half), np.full(dim, half)


def _h_values(positions, xg, profile: CoefficientProfile, eta: float):
    if profile.h_kind is HKind.UNIT:
        return np.ones_like(positions)
    if profile.h_kind is HKind.POWER_TO_MIN:
        base = np.abs(positions - profile.x_ref)
        if eta == 0.0:
            return np.ones_like(positions)
        return base**eta
    return np.abs(positions - xg)


def _k_values(positions, xg, profile: CoefficientProfile, eta: float, alpha: float):
    if profile.k_kind is KKind.UNIT:
        return 1.0
    if profile.h_kind is HKind.POWER_TO_MIN:
        base = np.abs(positions - profile.x_ref)
    elif profile.h_kind is HKind.DIST_TO_CONSENSUS:
        base = np.abs(positions - xg)
    else:
        return 1.0
    exponent = 2.0 * eta * alpha if profile.h_kind is HKind.POWER_TO_MIN else 2.0 * alpha
    if exponent == 0.0:
        return 1.0
    return base**exponent


def _step_core(
    e: Ensemble,
    params: SimParams,
    rng: np.random.Generator,
    objective,
    fixed_consensus,
    consensus_source: str,
    use_cfl: bool,
):
    positions = e.positions
    n, d = positions.shape
    lo, hi = _coordinate_boxes(params, objective, d)

    need_density = params.beta > 0 or consensus_source == "histogram"
    marginals = None
    if need_density:
        marginals = build_marginal_histograms(positions, lo, hi, params.n_bins, e.mass)

    if consensus_source == "fixed":
        xg = np.broadcast_to(np.asarray(fixed_consensus, dtype=float), (d,))
        floor_hit = False
    elif consensus_source == "particles":
        cp = consensus_point(e, objective, params.gamma)
        xg, floor_hit = cp.coords, cp.weight_floor_hit
    elif consensus_source == "histogram":
        if d != 1:
            raise ValueError("histogram consensus is only defined for one-dimensional runs")
        dg = DensityGrid(marginals.grid(0), marginals.values[0], e.mass)
        cp = consensus_point_from_density(dg, objective, params.gamma)
        xg, floor_hit = cp.coords, cp.weight_floor_hit
    else:
        raise ValueError(f"unknown consensus source {consensus_source!r}")

    if params.beta > 0:
        f_at = marginals.values_at(positions)
        k = _k_values(positions, xg, params.profile, params.eta, params.alpha)
        # f**0 == 1 by convention, including where f == 0
        drift_aux = params.beta * k * f_at**params.alpha
        max_factor = float(drift_aux.max())
    else:
        drift_aux = 0.0
        max_factor = 0.0

    if use_cfl:
        dt = adaptive_dt(np.array([max_factor]), params.dt_max)
    else:
        dt = params.dt_max
    binding = "density" if dt < params.dt_max else "cap"

    h = _h_values(positions, xg, params.profile, params.eta)
    xi = rng.standard_normal((n, d))
    new_positions = (
        positions
        + (params.lam * dt) * (xg - positions) * (1.0 + drift_aux)
        + (params.sigma * math.sqrt(dt)) * h * xi
    )

    if not np.all(np.isfinite(new_positions)):
        bad = np.argwhere(~np.isfinite(new_positions))[0]
        i, j = int(bad[0]), int(bad[1])
        raise RuntimeError(
            "non-finite position after update: particle "
            f"{i}, coordinate {j}; x={positions[i, j]!r}, consensus={xg[j]!r}, "
            f"dt={dt!r}, max drift factor={max_factor!r} "
            "(time-step logic failed to confine the dynamics)"
        )

    report = StepReport(dt_used=dt, dt_binding=binding, max_drift_factor=max_factor)
    consensus = ConsensusPoint(np.array(xg, dtype=float), floor_hit)
    return Ensemble(new_positions, e.mass), report, consensus


def step_marginal(
    e: Ensemble,
    params: SimParams,
    rng,
    *,
    objective=None,
    fixed_consensus=None,
    consensus_source: str = "particles",
    use_cfl: bool = True,
):
    """One marginal-coupled step in d >= 1 dimensions.

    The consensus point is computed once, each coordinate gets its own 1-d
    marginal histogram, the time step is the smallest admissible one over
    all coordinates and particles, and every coordinate receives an
    independent normal increment (anisotropic noise).  Returns the new
    ensemble and a :class:`StepReport`.
    """
    if fixed_consensus is not None:
        consensus_source = "fixed"
    elif consensus_source in ("particles", "histogram") and objective is None:
        raise ValueError("consensus from particles/histogram requires an objective")
    new_e, report, _ = _step_core(
        e, params, as_generator(rng, params.seed), objective, fixed_consensus, consensus_source, use_cfl
    )
    return new_e, report


def step_1d(
    e: Ensemble,
    params: SimParams,
    rng,
    *,
    objective=None,
    fixed_consensus=None,
    consensus_source: str = "particles",
    use_cfl: bool = True,
):
    """One-dimensional step; supports the density-integral consensus form
    (``consensus_source="histogram"``) in addition to the particle form.
    With d = 1 this is exactly :func:`step_marginal`."""
    if e.dim != 1:
        raise ValueError(f"step_1d requires a one-dimensional ensemble, got dim={e.dim}")
    return step_marginal(
        e,
        params,
        rng,
        objective=objective,
        fixed_consensus=fixed_consensus,
        consensus_source=consensus_source,
        use_cfl=use_cfl,
    )


def step_classical(e: Ensemble, params: SimParams, rng, *, objective=None, fixed_consensus=None):
    """Classical CBO update: beta = 0, anisotropic |x - x_gamma| noise,
    fixed time step.  Identical trajectories to the superlinear stepper with
    beta = 0 under the same seed."""
    classical = replace(params, beta=0.0, profile=CoefficientProfile(HKind.DIST_TO_CONSENSUS, KKind.UNIT))
    return step_marginal(
        e,
        classical,
        rng,
        objective=objective,
        fixed_consensus=fixed_consensus,
    )


def run_until(
    e: Ensemble,
    params: SimParams,
    stop: StoppingRule,
    *,
    objective=None,
    fixed_consensus=None,
    consensus_source: str = "particles",
    use_cfl: bool = True,
    method: str = "slcbo",
    seed: Optional[int] = None,
    rng=None,
    record_series: bool = True,
    reference_point=None,
) -> RunRecord:
    """Iterate the stepper until a stopping rule fires.

    Stopping is checked before each step in the order VARIANCE (variance
    below threshold), MAX_ITERS, MAX_TIME; a run may therefore terminate
    after zero steps.  ``method="cbo"`` forces the classical baseline
    (beta = 0, distance-to-consensus noise).  ``reference_point`` centers
    the V/U energy series; it defaults to the objective minimizer or the
    fixed consensus point.  Accumulated time uses compensated summation so
    fixed-cap runs hit t_max in an exact number of steps.
    """
    if method == "cbo":
        params = replace(
            params, beta=0.0, profile=CoefficientProfile(HKind.DIST_TO_CONSENSUS, KKind.UNIT)
        )
    elif method != "slcbo":
        raise ValueError(f"unknown method {method!r}")
    if fixed_consensus is not None:
        consensus_source = "fixed"
        fixed_consensus = np.broadcast_to(
            np.asarray(fixed_consensus, dtype=float), (e.dim,)
        ).copy()
    elif objective is None:
        raise ValueError("need an objective or a fixed consensus point")

    if rng is None:
        seed = params.seed if seed is None else int(seed)
        gen = np.random.default_rng(seed)
    else:
        gen = as_generator(rng)

    if reference_point is None:
        if objective is not None and objective.minimizer is not None:
            reference_point = objective.minimizer
        elif fixed_consensus is not None:
            reference_point = fixed_consensus
    u_power = 2.0 * params.eta + 2.0

    rows = {"t": [], "dt": [], "variance": [], "V": [], "U": []} if record_series else None
    consensus_rows = [] if record_series else None

    def stats(ens):
        var = ensemble_variance(ens)
        if reference_point is not None:
            v = weighted_moment(ens, reference_point, 2.0)
            u = weighted_moment(ens, reference_point, u_power)
        else:
            v = u = math.nan
        return var, v, u

    t = 0.0
    t_comp = 0.0  # Kahan compensation
    n = 0
    cfl_max = 0.0
    termination = None
    last_consensus = None

    while True:
        var, v, u = stats(e)
        if stop.variance_threshold is not None and var <= stop.variance_threshold:
            termination = Termination.VARIANCE
            break
        if n >= stop.n_max:
            termination = Termination.MAX_ITERS
            break
        if t >= stop.t_max * (1.0 - 1e-12):
            termination = Termination.MAX_TIME
            break

        e, report, cp = _step_core(
            e, params, gen, objective, fixed_consensus, consensus_source, use_cfl
        )
        last_consensus = cp.coords
        cfl_max = max(cfl_max, report.dt_used * report.max_drift_factor)
        if record_series:
            rows["t"].append(t)
            rows["dt"].append(report.dt_used)
            rows["variance"].append(var)
            rows["V"].append(v)
            rows["U"].append(u)
            consensus_rows.append(cp.coords)
        y = report.dt_used - t_comp
        t_new = t + y
        t_comp = (t_new - t) - y
        t = t_new
        n += 1

    if consensus_source == "fixed":
        final_consensus = np.array(fixed_consensus, dtype=float)
    elif consensus_source == "histogram":
        final_consensus = _final_histogram_consensus(e, params, objective)
    else:
        final_consensus = consensus_point(e, objective, params.gamma).coords

    record = RunRecord(
        params=params,
        termination=termination,
        iterations=n,
        final_time=t,
        final_ensemble=e,
        final_consensus=final_consensus,
        cfl_max_product=cfl_max,
        objective_name=getattr(objective, "name", None),
        seed=seed,
    )
    if record_series:
        var, v, u = stats(e)
        rows["t"].append(t)
        rows["dt"].append(math.nan)
        rows["variance"].append(var)
        rows["V"].append(v)
        rows["U"].append(u)
        consensus_rows.append(
            final_consensus if final_consensus is not None else np.full(e.dim, math.nan)
        )
        record.series = {key: np.array(vals) for key, vals in rows.items()}
        record.series["consensus"] = np.array(consensus_rows)

    if objective is not None:
        diff = final_consensus - objective.minimizer
        record.max_coord_error = float(np.abs(diff).max())
        record.l2_error = float(np.sqrt((diff**2).sum()))
        record.f_at_consensus = float(objective.evaluate(final_consensus))
    return record


def _final_histogram_consensus(e: Ensemble, params: SimParams, objective):
    lo, hi = _coordinate_boxes(params, objective, e.dim)
    marginals = build_marginal_histograms(e.positions, lo, hi, params.n_bins, e.mass)
    dg = DensityGrid(marginals.grid(0), marginals.values[0], e.mass)
    return consensus_point_from_density(dg, objective, params.gamma).coords


def series_to_csv(record: RunRecord, path) -> None:
    """Write the recorded time series: t, dt, variance, V, U and the
    consensus coordinates, one row per step plus the final state."""
    if record.series is None:
        raise ValueError("run was executed with record_series=False")
    series = record.series
    dim = series["consensus"].shape[1]
    header = ["t", "dt", "variance", "V", "U"] + [f"xg_{j}" for j in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(series["t"])):
            row = [series[key][i] for key in ("t", "dt", "variance", "V", "U")]
            row += list(series["consensus"][i])
            writer.writerow([repr(float(x)) for x in row])
