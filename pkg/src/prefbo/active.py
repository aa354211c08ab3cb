"""Candidate pools and PBALD query selection.

PBALD scores a candidate pair by the mutual information between its
preference label and the network weights, estimated with T shared weight
samples: h(mean_t p_t) - mean_t h(p_t).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import netcore, varnet
from .errors import CapacityError, DomainError, InputShapeError, PoolExhaustedError

DEFAULT_POOL_POINTS = 2000
DEFAULT_POOL_PAIRS = 2000
DEFAULT_T_BALD = 100


@dataclass
class CandidatePool:
    points: np.ndarray  # (n, d) in the unit cube
    pairs: list[tuple[int, int]]
    rng_seed: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        n = len(self.points)
        seen = set()
        for i, j in self.pairs:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise InputShapeError(f"invalid pair ({i}, {j}) for {n} points")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InputShapeError(f"duplicate pair {key}")
            seen.add(key)

    def pair_points(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        i, j = self.pairs[k]
        return self.points[i], self.points[j]

    def save_csv(self, points_path, pairs_path) -> None:
        np.savetxt(points_path, self.points, delimiter=",")
        with open(pairs_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j"])
            w.writerows(self.pairs)


def build_pool(d: int, n_points: int, n_pairs: int, seed: int) -> CandidatePool:
    """Uniform points in [0,1]^d with unordered index pairs sampled without replacement."""
    if n_points < 2 or n_pairs < 1:
        raise InputShapeError("need n_points >= 2 and n_pairs >= 1")
    max_pairs = n_points * (n_points - 1) // 2
    if n_pairs > max_pairs:
        raise CapacityError(
            f"requested {n_pairs} pairs but only {max_pairs} unordered pairs exist"
        )
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(n_points, d))
    # sample flat indices into the strict upper triangle without replacement
    flat = rng.choice(max_pairs, size=n_pairs, replace=False)
    pairs = []
    # invert the row-major upper-triangle enumeration
    for f in sorted(flat.tolist()):
        i = int(n_points - 2 - np.floor((np.sqrt(4 * n_points * (n_points - 1) - 8 * f - 7) - 1) / 2))
        offset = f - (i * (2 * n_points - i - 1)) // 2
        j = i + 1 + int(offset)
        pairs.append((i, j))
    return CandidatePool(points=points, pairs=pairs, rng_seed=seed)


def binary_entropy(p: float | np.ndarray) -> float | np.ndarray:
    """Binary entropy in nats, with h(0) = h(1) = 0 by continuity."""
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("binary_entropy needs p in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(arr > 0, arr * np.log(arr), 0.0) - np.where(
            arr < 1, (1 - arr) * np.log(1 - arr), 0.0
        )
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def pbald_from_probs(P: np.ndarray) -> np.ndarray:
    """PBALD scores from a (T, n_pairs) matrix of sampled preference probabilities."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    scores = binary_entropy(P.mean(axis=0)) - np.asarray(
        [binary_entropy(P[:, k]).mean() for k in range(P.shape[1])]
    )
    # mutual information is non-negative; rounding residue below 1e-12 is
    # snapped to zero so exact ties (e.g. a collapsed posterior) break by index
    return np.where(np.abs(scores) < 1e-12, 0.0, scores)


def pbald_score(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    pair: tuple[np.ndarray, np.ndarray],
    T: int,
    rng: np.random.Generator,
) -> float:
    """Mutual-information score of one pair using T fresh weight samples."""
    if T < 2:
        raise InputShapeError("pbald_score needs T >= 2")
    W = varnet.sample_weight_matrix(vp, T, rng)
    x, xp = pair
    X = np.vstack([np.asarray(x, dtype=np.float64), np.asarray(xp, dtype=np.float64)])
    Z = netcore.forward_many(spec, W, X)
    P = varnet.sigmoid(Z[:, 0] - Z[:, 1])
    score = float(binary_entropy(P.mean()) - binary_entropy(P).mean())
    return 0.0 if abs(score) < 1e-12 else score


def score_pool_from_samples(
    W: np.ndarray, spec: list[netcore.LayerSpec], pool: CandidatePool
) -> np.ndarray:
    """PBALD scores for every pool pair from already-drawn weight samples."""
    Z = netcore.forward_many(spec, W, pool.points)  # (T, n_points)
    ii = np.fromiter((p[0] for p in pool.pairs), dtype=np.intp)
    jj = np.fromiter((p[1] for p in pool.pairs), dtype=np.intp)
    P = varnet.sigmoid(Z[:, ii] - Z[:, jj])  # (T, n_pairs)
    h_mean = binary_entropy(P.mean(axis=0))
    mean_h = binary_entropy(P).mean(axis=0)
    scores = h_mean - mean_h
    return np.where(np.abs(scores) < 1e-12, 0.0, scores)


def score_pool(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    pool: CandidatePool,
    T: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """PBALD scores for every pair in the pool, sharing T fresh weight samples."""
    return score_pool_from_samples(varnet.sample_weight_matrix(vp, T, rng), spec, pool)


def select_query(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    pool: CandidatePool,
    asked: set[int],
    rng: np.random.Generator,
    T: int = DEFAULT_T_BALD,
) -> int:
    """Index of the unasked pool pair with the highest PBALD score.

    Ties break to the lowest index. Raises when every pair was asked.
    """
    unasked = [k for k in range(len(pool.pairs)) if k not in asked]
    if not unasked:
        raise PoolExhaustedError("all pool pairs have been asked")
    scores = score_pool(vp, spec, pool, T, rng)
    best = unasked[0]
    best_score = scores[best]
    for k in unasked[1:]:
        if scores[k] > best_score:
            best, best_score = k, scores[k]
    return best
