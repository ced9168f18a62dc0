"""Replicated experiment runner: success rates, error statistics and
method comparisons, with deterministic seed derivation per replica."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import RunRecord, StoppingRule, Termination, run_until
from .ensemble import init_ensemble
from .objectives import SUITE_VERSION, Objective, objective_by_name, standard_suite
from .params import SimParams

__all__ = [
    "success_check",
    "derive_seed",
    "run_optimization",
    "BenchRow",
    "BenchReport",
    "run_replicated",
    "flag_saves_iterations",
    "compare_methods",
    "report_to_json",
    "DEFAULT_DELTA",
    "DEFAULT_BENCH_STOP",
]

DEFAULT_DELTA = 0.25
DEFAULT_BENCH_STOP = StoppingRule(t_max=math.inf, n_max=10_000, variance_threshold=1e-2)
METHODS = ("slcbo", "cbo")


def success_check(x_gamma, x_star, delta: float) -> bool:
    """Strict max-norm success test: max_j |x_gamma_j - x_star_j| < delta."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    a = np.asarray(x_gamma, dtype=float)
    b = np.asarray(x_star, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.abs(a - b).max() < delta)


def derive_seed(base_seed: int, run_index: int) -> int:
    """Per-replica seed: run index folded into the base seed by XOR."""
    return int(base_seed) ^ int(run_index)


def run_optimization(
    objective: Objective,
    method: str,
    params: SimParams,
    n_particles: int,
    stop: StoppingRule,
    seed: int,
    rho: float = 1.0,
    record_series: bool = False,
) -> RunRecord:
    """One seeded optimization run: uniform start over the objective box."""
    ens = init_ensemble(
        params, objective.dim, n_particles, rho, "uniform", box=objective.box, rng=seed
    )
    return run_until(
        ens,
        params,
        stop,
        objective=objective,
        method=method,
        seed=seed,
        record_series=record_series,
    )


def _replica(args) -> Tuple[int, RunRecord]:
    (objective_name, dim, method, params, n_particles, stop, rho, base_seed, run_index) = args
    objective = objective_by_name(objective_name, dim)
    seed = derive_seed(base_seed, run_index)
    try:
        record = run_optimization(objective, method, params, n_particles, stop, seed, rho)
    except Exception as exc:
        raise RuntimeError(
            f"replica {run_index} (seed {seed}) of {objective_name}/{method} failed: {exc}"
        ) from exc
    return run_index, record


@dataclass(frozen=True)
class BenchRow:
    """Aggregated statistics of one (objective, method, particle count) cell."""

    objective: str
    method: str
    n_particles: int
    n_sim: int
    success_rate: float
    avg_l2_error: float
    avg_f_value: float
    n_avg: float
    n_avg_success: Optional[float]
    cfl_max_product: float
    flagged: bool = False


@dataclass(frozen=True)
class BenchReport:
    rows: Tuple[BenchRow, ...]
    meta: dict


def run_replicated(
    objective: Objective,
    method: str,
    params: SimParams,
    n_sim: int,
    base_seed: int,
    n_particles: int,
    stop: StoppingRule = DEFAULT_BENCH_STOP,
    rho: float = 1.0,
    delta: float = DEFAULT_DELTA,
    jobs: int = 1,
) -> BenchRow:
    """n_sim independent runs with derived seeds, reduced to one row.

    Replicas may execute in parallel; results are sorted by run index before
    aggregation so the report does not depend on scheduling.  Any replica
    failure aborts the row with the failing seed in the error message.
    """
    if n_sim < 1:
        raise ValueError("n_sim must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choices: {METHODS}")
    tasks = [
        (objective.name, objective.dim, method, params, n_particles, stop, rho, base_seed, i)
        for i in range(n_sim)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replica, tasks))
    else:
        results = [_replica(t) for t in tasks]
    results.sort(key=lambda pair: pair[0])
    records = [rec for _, rec in results]

    successes = [success_check(r.final_consensus, objective.minimizer, delta) for r in records]
    iters = np.array([r.iterations for r in records], dtype=float)
    success_iters = iters[np.array(successes, dtype=bool)]
    return BenchRow(
        objective=objective.name,
        method=method,
        n_particles=n_particles,
        n_sim=n_sim,
        success_rate=float(np.mean(successes)),
        avg_l2_error=float(np.mean([r.l2_error for r in records])),
        avg_f_value=float(np.mean([r.f_at_consensus for r in records])),
        n_avg=float(iters.mean()),
        n_avg_success=float(success_iters.mean()) if success_iters.size else None,
        cfl_max_product=float(max(r.cfl_max_product for r in records)),
    )


def flag_saves_iterations(sl_row: BenchRow, cbo_row: BenchRow) -> bool:
    """Highlight rule: the superlinear method matches the baseline success
    rate to within half a percentage point (or beats it) while needing
    strictly fewer iterations on its successful runs."""
    if sl_row.n_avg_success is None or cbo_row.n_avg_success is None:
        return False
    return (
        sl_row.success_rate >= cbo_row.success_rate - 0.005
        and sl_row.n_avg_success < cbo_row.n_avg_success
    )


def compare_methods(
    objectives: Sequence[Objective],
    params: SimParams,
    n_particles_list: Sequence[int],
    n_sim: int,
    base_seed: int,
    methods: Sequence[str] = METHODS,
    stop: StoppingRule = DEFAULT_BENCH_STOP,
    rho: float = 1.0,
    delta: float = DEFAULT_DELTA,
    jobs: int = 1,
) -> BenchReport:
    """Paired-seed comparison over a suite: one row per (objective, N, method).

    For each (objective, N) cell all methods share the same derived seeds,
    so the comparison is paired.  Rows where the superlinear method keeps
    the baseline's accuracy with fewer iterations are flagged.
    """
    rows: List[BenchRow] = []
    for objective in objectives:
        for n_particles in n_particles_list:
            cell = {
                m: run_replicated(
                    objective, m, params, n_sim, base_seed, n_particles, stop, rho, delta, jobs
                )
                for m in methods
            }
            if "slcbo" in cell and "cbo" in cell:
                flagged = flag_saves_iterations(cell["slcbo"], cell["cbo"])
                cell["slcbo"] = replace(cell["slcbo"], flagged=flagged)
            rows.extend(cell[m] for m in methods)
    meta = {
        "suite_version": SUITE_VERSION,
        "base_seed": base_seed,
        "n_sim": n_sim,
        "delta_threshold": delta,
        "rho": rho,
        "stop": {
            "t_max": None if math.isinf(stop.t_max) else stop.t_max,
            "n_max": stop.n_max,
            "variance_threshold": stop.variance_threshold,
        },
        "params": _params_dict(params),
    }
    return BenchReport(rows=tuple(rows), meta=meta)


def _params_dict(params: SimParams) -> dict:
    out = asdict(params)
    profile = out.pop("profile")
    out["profile"] = {
        "h_kind": profile["h_kind"].value,
        "k_kind": profile["k_kind"].value,
        "x_ref": None if profile["x_ref"] is None else list(np.asarray(profile["x_ref"])),
    }
    return out


def report_to_json(report: BenchReport, path=None) -> str:
    """Serialize a report ({"meta": ..., "rows": [...]}); optionally write it."""
    payload = {"meta": report.meta, "rows": [asdict(row) for row in report.rows]}

    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        raise TypeError(f"not JSON serializable: {type(obj)}")

    text = json.dumps(payload, indent=2, sort_keys=True, default=default)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
