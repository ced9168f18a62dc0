"""Benchmark objective functions with affine rescaling to common boxes.

Every objective knows its exact global minimizer and minimum value (0 for
the whole suite), so success rates and F(x_gamma) reports are comparable
across functions.  ``standard_suite`` returns the functions rescaled to
[-3, 3]^d, except Rosenbrock which is used unrescaled on [-1.5, 3]^d (that
box already contains its minimizer at (1, ..., 1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

__all__ = [
    "Objective",
    "rescale_to_box",
    "standard_suite",
    "objective_by_name",
    "SUITE_VERSION",
    "sphere",
    "rastrigin",
    "ackley",
    "griewank",
    "rosenbrock",
    "salomon",
    "schwefel220",
    "parabola",
]

SUITE_VERSION = "standard-v1"


@dataclass(frozen=True)
class Objective:
    """A benchmark function with exact minimizer metadata.

    ``fn`` maps an (..., dim) array to (...) values; ``lo``/``hi`` bound the
    per-coordinate search box and the minimizer lies strictly inside it.
    """

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    minimizer: np.ndarray
    min_value: float
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        for field in ("minimizer", "lo", "hi"):
            arr = np.broadcast_to(np.asarray(getattr(self, field), dtype=float), (self.dim,)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)
        if not np.all(self.lo < self.hi):
            raise ValueError(f"{self.name}: degenerate box")
        if not np.all((self.minimizer > self.lo) & (self.minimizer < self.hi)):
            raise ValueError(f"{self.name}: minimizer must lie strictly inside the box")

    def evaluate(self, x) -> np.ndarray:
        """Evaluate at a single point (dim,) or a batch (..., dim)."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise ValueError(
                f"{self.name}: expected points of dimension {self.dim}, got shape {arr.shape}"
            )
        return self.fn(arr)

    @property
    def box(self) -> tuple:
        return self.lo, self.hi


def _make(name, dim, fn, minimizer, lo, hi) -> Objective:
    return Objective(name, dim, fn, minimizer, 0.0, lo, hi)


def sphere(dim: int) -> Objective:
    return _make("sphere", dim, lambda x: (x**2).sum(axis=-1), 0.0, -5.12, 5.12)


def parabola(dim: int = 1) -> Objective:
    """Plain sum of squares on [-3, 3]^d, used unrescaled by the 1-d studies."""
    return _make("parabola", dim, lambda x: (x**2).sum(axis=-1), 0.0, -3.0, 3.0)


def rastrigin(dim: int) -> Objective:
    def fn(x):
        return 10.0 * x.shape[-1] + (x**2 - 10.0 * np.cos(2.0 * np.pi * x)).sum(axis=-1)

    return _make("rastrigin", dim, fn, 0.0, -5.12, 5.12)


def ackley(dim: int) -> Objective:
    def fn(x):
        d = x.shape[-1]
        rms = np.sqrt((x**2).sum(axis=-1) / d)
        return (
            -20.0 * np.exp(-0.2 * rms)
            - np.exp(np.cos(2.0 * np.pi * x).sum(axis=-1) / d)
            + 20.0
            + np.e
        )

    return _make("ackley", dim, fn, 0.0, -32.768, 32.768)


def griewank(dim: int) -> Objective:
    roots = np.sqrt(np.arange(1, dim + 1, dtype=float))

    def fn(x):
        return 1.0 + (x**2).sum(axis=-1) / 4000.0 - np.cos(x / roots).prod(axis=-1)

    return _make("griewank", dim, fn, 0.0, -600.0, 600.0)


def rosenbrock(dim: int, lo: float = -2.048, hi: float = 2.048) -> Objective:
    if dim < 2:
        raise ValueError("rosenbrock needs dim >= 2")

    def fn(x):
        a, b = x[..., :-1], x[..., 1:]
        return (100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2).sum(axis=-1)

    return _make("rosenbrock", dim, fn, 1.0, lo, hi)


def salomon(dim: int) -> Objective:
    def fn(x):
        r = np.sqrt((x**2).sum(axis=-1))
        return 1.0 - np.cos(2.0 * np.pi * r) + 0.1 * r

    return _make("salomon", dim, fn, 0.0, -100.0, 100.0)


def schwefel220(dim: int) -> Objective:
    return _make("schwefel220", dim, lambda x: np.abs(x).sum(axis=-1), 0.0, -100.0, 100.0)


def rescale_to_box(obj: Objective, lo, hi) -> Objective:
    """Pull back an objective onto a new box via the per-coordinate affine map.

    Values are preserved: the rescaled function at x equals the natural
    function at A(x), where A maps the target box onto the natural one.
    The minimizer metadata is transformed by the inverse map and the
    minimum value is unchanged.
    """
    dim = obj.dim
    new_lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    new_hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    if not np.all(new_lo < new_hi):
        raise ValueError("degenerate target box")
    scale = (obj.hi - obj.lo) / (new_hi - new_lo)
    nat_lo, nat_fn = obj.lo, obj.fn

    def fn(x):
        return nat_fn(nat_lo + (x - new_lo) * scale)

    minimizer = new_lo + (obj.minimizer - obj.lo) / scale
    return Objective(obj.name, dim, fn, minimizer, obj.min_value, new_lo, new_hi)


def standard_suite(dim: int) -> List[Objective]:
    """Sphere, Rastrigin, Ackley, Griewank, Rosenbrock, Salomon and
    Schwefel 2.20, all on [-3, 3]^d except Rosenbrock on [-1.5, 3]^d."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    suite = [
        rescale_to_box(sphere(dim), -3.0, 3.0),
        rescale_to_box(rastrigin(dim), -3.0, 3.0),
        rescale_to_box(ackley(dim), -3.0, 3.0),
        rescale_to_box(griewank(dim), -3.0, 3.0),
    ]
    if dim >= 2:
        suite.append(rosenbrock(dim, lo=-1.5, hi=3.0))
    suite += [
        rescale_to_box(salomon(dim), -3.0, 3.0),
        rescale_to_box(schwefel220(dim), -3.0, 3.0),
    ]
    return suite


_REGISTRY = {
    "sphere": lambda d: rescale_to_box(sphere(d), -3.0, 3.0),
    "rastrigin": lambda d: rescale_to_box(rastrigin(d), -3.0, 3.0),
    "ackley": lambda d: rescale_to_box(ackley(d), -3.0, 3.0),
    "griewank": lambda d: rescale_to_box(griewank(d), -3.0, 3.0),
    "rosenbrock": lambda d: rosenbrock(d, lo=-1.5, hi=3.0),
    "salomon": lambda d: rescale_to_box(salomon(d), -3.0, 3.0),
    "schwefel220": lambda d: rescale_to_box(schwefel220(d), -3.0, 3.0),
    "parabola": parabola,
}


def objective_by_name(name: str, dim: int) -> Objective:
    """Look up a suite objective (already rescaled to its benchmark box)."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; choices: {sorted(_REGISTRY)}") from None
    return factory(dim)
