"""Simulated expert: the true objective perturbed by a GP draw.

The expert's utility is g = f + delta, where delta is a zero-mean GP draw
with squared-exponential kernel (lengthscale on the unit cube) scaled by
sigma_delta. The draw is realized jointly over a pool's anchor points, so
every query hits an anchor. Bisection over sigma_delta calibrates the
expert's pairwise accuracy against the true objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bench import Benchmark, to_native
from .errors import CalibrationError, ConditioningError, DomainError, InputShapeError

DEFAULT_LENGTHSCALE = 0.1
BASE_JITTER = 1e-8
MAX_JITTER = 1e-4
CALIBRATION_TOL = 0.02


def se_kernel(points: np.ndarray, lengthscale: float) -> np.ndarray:
    """Unit-variance squared-exponential kernel matrix over the rows of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    sq = np.sum(pts**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * pts @ pts.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * lengthscale**2))


@dataclass
class GpDraw:
    anchor_points: np.ndarray
    values: np.ndarray
    lengthscale: float
    sigma_delta: float


def gp_draw(
    points: np.ndarray, lengthscale: float, sigma_delta: float, seed: int
) -> GpDraw:
    """Joint zero-mean draw with covariance sigma_delta^2 K + jitter I."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if lengthscale <= 0:
        raise InputShapeError("lengthscale must be positive")
    if sigma_delta < 0:
        raise InputShapeError("sigma_delta must be non-negative")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(len(pts))
    if sigma_delta == 0.0:
        return GpDraw(pts, np.zeros(len(pts)), lengthscale, 0.0)
    cov = sigma_delta**2 * se_kernel(pts, lengthscale)
    jitter = BASE_JITTER
    while True:
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(len(pts)))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > MAX_JITTER:
                raise ConditioningError(
                    f"covariance not positive definite up to jitter {MAX_JITTER}"
                )
    return GpDraw(pts, L @ z, lengthscale, sigma_delta)


@dataclass
class SimulatedExpert:
    """Answers pairwise queries with g = f + delta over pool anchors."""

    benchmark: Benchmark
    draw: GpDraw
    _g: np.ndarray = field(init=False)
    _index: dict = field(init=False)

    def __post_init__(self):
        f_vals = np.array(
            [self.benchmark.evaluate(to_native(self.benchmark, u)) for u in self.draw.anchor_points]
        )
        self._g = f_vals + self.draw.values
        self._index = {
            self._key(u): k for k, u in enumerate(self.draw.anchor_points)
        }

    @staticmethod
    def _key(u: np.ndarray) -> bytes:
        return np.asarray(u, dtype=np.float64).tobytes()

    @property
    def metadata(self) -> dict:
        return {
            "kind": "simulated",
            "sigma_delta": self.draw.sigma_delta,
            "lengthscale": self.draw.lengthscale,
        }

    def utility(self, x) -> float:
        key = self._key(np.asarray(x, dtype=np.float64))
        if key not in self._index:
            raise DomainError("query point is not a pool anchor")
        return float(self._g[self._index[key]])

    def answer(self, x, x_prime) -> int:
        """Label 1 iff g(x) >= g(x')."""
        return int(self.utility(x) >= self.utility(x_prime))


def make_expert(
    benchmark: Benchmark,
    anchor_points: np.ndarray,
    sigma_delta: float,
    seed: int,
    lengthscale: float = DEFAULT_LENGTHSCALE,
) -> SimulatedExpert:
    return SimulatedExpert(benchmark, gp_draw(anchor_points, lengthscale, sigma_delta, seed))


def _accuracy_table(
    f_vals: np.ndarray,
    eig_vecs: np.ndarray,
    eig_vals: np.ndarray,
    zs: np.ndarray,
    pair_i: np.ndarray,
    pair_j: np.ndarray,
    sigma: float,
) -> float:
    """Mean agreement between g-ordering and f-ordering over draws and pairs.

    Draws reuse fixed standard normals zs (one row per draw) through the
    eigendecomposition of K, so accuracy is deterministic and smooth in sigma.
    """
    f_diff = f_vals[pair_i] - f_vals[pair_j]
    scale = sigma * np.sqrt(np.maximum(eig_vals, 0.0))
    acc = 0.0
    for z in zs:
        delta = eig_vecs @ (scale * z)
        g_diff = f_diff + delta[pair_i] - delta[pair_j]
        acc += np.mean((g_diff >= 0) == (f_diff >= 0))
    return acc / len(zs)


def calibrate_sigma(
    benchmark: Benchmark,
    pool_points: np.ndarray,
    target_accuracy: float,
    lengthscale: float = DEFAULT_LENGTHSCALE,
    n_draws: int = 20,
    n_pairs: int = 100_000,
    seed: int = 0,
    tol: float = CALIBRATION_TOL,
    max_iters: int = 60,
) -> float:
    """Bisection over sigma_delta so the expert's measured pairwise accuracy
    (averaged over n_draws GP draws and n_pairs random pool pairs) hits the
    target within +/- tol."""
    if not 0.5 <= target_accuracy < 1.0:
        raise CalibrationError(f"target accuracy {target_accuracy} outside [0.5, 1)")
    pts = np.atleast_2d(np.asarray(pool_points, dtype=np.float64))
    rng = np.random.default_rng(seed)
    f_vals = np.array([benchmark.evaluate(to_native(benchmark, u)) for u in pts])
    K = se_kernel(pts, lengthscale)
    eig_vals, eig_vecs = np.linalg.eigh(K)
    eig_vals = np.maximum(eig_vals, 0.0)
    zs = rng.standard_normal((n_draws, len(pts)))
    n = len(pts)
    pair_i = rng.integers(0, n, size=n_pairs)
    pair_j = rng.integers(0, n, size=n_pairs)
    keep = pair_i != pair_j
    pair_i, pair_j = pair_i[keep], pair_j[keep]

    def acc(sigma: float) -> float:
        return _accuracy_table(f_vals, eig_vecs, eig_vals, zs, pair_i, pair_j, sigma)

    f_scale = max(np.std(f_vals), 1e-12)
    lo, hi = 1e-6 * f_scale, 4.0 * f_scale
    # accuracy decreases in sigma: grow hi until it reaches the target band.
    # targets near 0.5 are approached from above and never undershot, so the
    # stop condition accepts anything inside a quarter tolerance
    expansions = 0
    while acc(hi) > target_accuracy + 0.25 * tol and expansions < 30:
        hi *= 2.0
        expansions += 1
    if acc(hi) > target_accuracy + tol:
        raise CalibrationError(
            f"target {target_accuracy} unreachable", bracket=(lo, hi)
        )
    if acc(lo) < target_accuracy - tol:
        raise CalibrationError(
            f"target {target_accuracy} above achievable accuracy", bracket=(lo, hi)
        )
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        a = acc(mid)
        if abs(a - target_accuracy) <= 0.25 * tol:
            return mid
        if a > target_accuracy:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(acc(mid) - target_accuracy) <= tol:
        return mid
    raise CalibrationError(
        f"bisection failed to reach {target_accuracy} within tolerance",
        bracket=(lo, hi),
    )


def measure_accuracy(
    benchmark: Benchmark,
    pool_points: np.ndarray,
    sigma_delta: float,
    lengthscale: float = DEFAULT_LENGTHSCALE,
    n_draws: int = 20,
    n_pairs: int = 100_000,
    seed: int = 0,
) -> float:
    """Measured expert accuracy for a given sigma_delta (same estimator as
    calibrate_sigma)."""
    pts = np.atleast_2d(np.asarray(pool_points, dtype=np.float64))
    rng = np.random.default_rng(seed)
    f_vals = np.array([benchmark.evaluate(to_native(benchmark, u)) for u in pts])
    K = se_kernel(pts, lengthscale)
    eig_vals, eig_vecs = np.linalg.eigh(K)
    eig_vals = np.maximum(eig_vals, 0.0)
    zs = rng.standard_normal((n_draws, len(pts)))
    n = len(pts)
    pair_i = rng.integers(0, n, size=n_pairs)
    pair_j = rng.integers(0, n, size=n_pairs)
    keep = pair_i != pair_j
    return _accuracy_table(
        f_vals, eig_vecs, eig_vals, zs, pair_i[keep], pair_j[keep], sigma_delta
    )
