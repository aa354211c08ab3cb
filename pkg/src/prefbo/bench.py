"""Benchmark objective functions with native domains and unit-cube mapping.

All learning happens in [0,1]^d; native coordinates only appear when a
benchmark is evaluated or displayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class Benchmark:
    name: str
    d: int
    native_bounds: tuple  # ((lo, hi), ...) per dimension
    _fn: Callable = field(repr=False)

    def __post_init__(self):
        for lo, hi in self.native_bounds:
            if not lo < hi:
                raise DomainError(f"bad bounds ({lo}, {hi}) in {self.name}")

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.d:
            raise DomainError(f"{self.name} expects {self.d} coordinates, got {x.size}")
        for xi, (lo, hi) in zip(x, self.native_bounds):
            if xi < lo - _BOUND_TOL or xi > hi + _BOUND_TOL:
                raise DomainError(f"{xi} outside [{lo}, {hi}] for {self.name}")
        return float(self._fn(x))

    def evaluate_unit(self, u) -> float:
        return self.evaluate(to_native(self, u))


def to_native(b: Benchmark, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64).ravel()
    if u.size != b.d:
        raise DomainError(f"{b.name} expects {b.d} coordinates, got {u.size}")
    if np.any(u < -_BOUND_TOL) or np.any(u > 1 + _BOUND_TOL):
        raise DomainError("unit-cube point outside [0, 1]")
    lo = np.array([bb[0] for bb in b.native_bounds])
    hi = np.array([bb[1] for bb in b.native_bounds])
    return lo + u * (hi - lo)


def from_native(b: Benchmark, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    lo = np.array([bb[0] for bb in b.native_bounds])
    hi = np.array([bb[1] for bb in b.native_bounds])
    return (x - lo) / (hi - lo)


def forrester(x: float) -> float:
    """(6x-2)^2 sin(12x-4) on [0, 1]."""
    return (6 * x - 2) ** 2 * math.sin(12 * x - 4)


def branin(x1: float, x2: float) -> float:
    a, b, c = 1.0, 5.1 / (4 * math.pi**2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * math.cos(x1) + s


def six_hump_camel(x1: float, x2: float) -> float:
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


def three_hump_camel(x1: float, x2: float) -> float:
    return 2 * x1**2 - 1.05 * x1**4 + x1**6 / 6 + x1 * x2 + x2**2


def levy(x) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    w = 1 + (x - 1) / 4
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(math.pi * w[:-1] + 1) ** 2))
    tail = (w[-1] - 1) ** 2 * (1 + math.sin(2 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


def make_levy(d: int) -> Benchmark:
    return Benchmark(
        name=f"levy{d}d",
        d=d,
        native_bounds=tuple(((-2.0, 2.0),) * d),
        _fn=levy,
    )


_REGISTRY: dict[str, Benchmark] = {
    "forrester1d": Benchmark("forrester1d", 1, ((0.0, 1.0),), lambda x: forrester(x[0])),
    "branin2d": Benchmark(
        "branin2d", 2, ((-5.0, 10.0), (0.0, 15.0)), lambda x: branin(x[0], x[1])
    ),
    "camel6_2d": Benchmark(
        "camel6_2d", 2, ((-3.0, 3.0), (-2.0, 2.0)), lambda x: six_hump_camel(x[0], x[1])
    ),
    "camel6_human_2d": Benchmark(
        "camel6_human_2d", 2, ((-2.0, 2.0), (-1.0, 1.0)), lambda x: six_hump_camel(x[0], x[1])
    ),
    "camel3_2d": Benchmark(
        "camel3_2d", 2, ((-2.0, 2.0), (-2.0, 2.0)), lambda x: three_hump_camel(x[0], x[1])
    ),
    "levy10d": make_levy(10),
}


def get_benchmark(name: str, d: int | None = None) -> Benchmark:
    if name.startswith("levy") and d is not None:
        return make_levy(d)
    if name not in _REGISTRY:
        raise KeyError(f"unknown benchmark {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name]


def benchmark_names() -> list[str]:
    return sorted(_REGISTRY)


def grid_minimum(b: Benchmark, n: int = 2000, seed: int = 0) -> tuple[np.ndarray, float]:
    """Approximate global minimum by dense grid (1d) or random search, then
    local refinement. Used as an independent oracle in tests and reporting."""
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    if b.d == 1:
        lo, hi = b.native_bounds[0]
        xs = np.linspace(lo, hi, n)
        vals = np.array([b.evaluate([x]) for x in xs])
        x0 = np.array([xs[int(np.argmin(vals))]])
    else:
        U = rng.uniform(0, 1, size=(n, b.d))
        vals = np.array([b.evaluate_unit(u) for u in U])
        x0 = to_native(b, U[int(np.argmin(vals))])
    res = minimize(
        lambda x: b.evaluate(np.clip(x, [bb[0] for bb in b.native_bounds], [bb[1] for bb in b.native_bounds])),
        x0,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12},
    )
    return res.x, float(res.fun)
