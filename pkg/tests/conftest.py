"""Shared fixtures and numerical helpers for the test suite."""

import numpy as np
import pytest

from prefbo import netcore


def central_fd(fn, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return g


def rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def random_tiny_spec(rng):
    """A random network spec with widths <= 5 and depth <= 3 hidden layers."""
    d = int(rng.integers(1, 4))
    depth = int(rng.integers(0, 3))
    hidden = [int(rng.integers(1, 6)) for _ in range(depth)]
    return netcore.mlp_spec(d, hidden)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
