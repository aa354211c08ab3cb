"""Minimal feed-forward network with exact reverse-mode gradients.

All parameters of a network live in one flat float64 vector ("flat params"),
laid out layer by layer: the weight matrix row-major (out_width x in_width)
followed by the bias vector. The multi-task model relies on this layout to
slice trunk and head parameters out of a concatenated vector, so it must not
change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputShapeError

TANH = "tanh"
IDENTITY = "identity"
_ACTIVATIONS = (TANH, IDENTITY)


@dataclass(frozen=True)
class LayerSpec:
    in_width: int
    out_width: int
    activation: str = TANH

    def __post_init__(self):
        if self.in_width < 1 or self.out_width < 1:
            raise InputShapeError(f"layer widths must be positive, got {self}")
        if self.activation not in _ACTIVATIONS:
            raise InputShapeError(f"unknown activation {self.activation!r}")

    @property
    def size(self) -> int:
        return (self.in_width + 1) * self.out_width


def mlp_spec(d: int, hidden: list[int]) -> list[LayerSpec]:
    """Tanh hidden layers followed by a scalar identity head."""
    layers = []
    widths = [d] + list(hidden)
    for a, b in zip(widths[:-1], widths[1:]):
        layers.append(LayerSpec(a, b, TANH))
    layers.append(LayerSpec(widths[-1], 1, IDENTITY))
    return layers


def validate_spec(spec: list[LayerSpec]) -> None:
    if not spec:
        raise InputShapeError("empty layer spec")
    for prev, cur in zip(spec[:-1], spec[1:]):
        if prev.out_width != cur.in_width:
            raise InputShapeError(
                f"layer width mismatch: {prev.out_width} -> {cur.in_width}"
            )


def n_params(spec: list[LayerSpec]) -> int:
    return sum(layer.size for layer in spec)


def unpack(spec: list[LayerSpec], params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat parameter vector into per-layer (W, b) views."""
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.size != n_params(spec):
        raise InputShapeError(
            f"flat params length {params.size}, spec needs {n_params(spec)}"
        )
    out = []
    off = 0
    for layer in spec:
        nw = layer.out_width * layer.in_width
        W = params[off : off + nw].reshape(layer.out_width, layer.in_width)
        b = params[off + nw : off + nw + layer.out_width]
        out.append((W, b))
        off += layer.size
    return out


def forward_batch(
    spec: list[LayerSpec], params: np.ndarray, X: np.ndarray, dtype=np.float64
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass over a batch. Returns (outputs (N, out_last), activation cache).

    The cache holds the input to every layer (post-activation of the previous
    one) plus the final output, as needed by backward_batch. Training loops
    pass dtype=float32 (single precision is far faster through tanh); the
    default keeps float64 for gradient checks.
    """
    X = np.atleast_2d(np.asarray(X, dtype=dtype))
    if X.shape[1] != spec[0].in_width:
        raise InputShapeError(
            f"input dimension {X.shape[1]} != first layer in_width {spec[0].in_width}"
        )
    layers = unpack(spec, params)
    cache = [X]
    H = X
    for layer, (W, b) in zip(spec, layers):
        A = H @ W.T.astype(dtype, copy=False) + b.astype(dtype, copy=False)
        H = np.tanh(A) if layer.activation == TANH else A
        cache.append(H)
    return H, cache


def backward_batch(
    spec: list[LayerSpec],
    params: np.ndarray,
    cache: list[np.ndarray],
    upstream: np.ndarray,
) -> np.ndarray:
    """Gradient of sum_n upstream_n * output_n w.r.t. the flat params.

    upstream has shape (N, out_last). Returns a flat float64 vector matching
    params; intermediates run in the cache's dtype.
    """
    dtype = cache[0].dtype
    layers = unpack(spec, params)
    grad = np.empty(n_params(spec))
    delta = np.atleast_2d(np.asarray(upstream, dtype=dtype))
    off = n_params(spec)
    for i in range(len(spec) - 1, -1, -1):
        layer = spec[i]
        W, _ = layers[i]
        H_out = cache[i + 1]
        H_in = cache[i]
        if layer.activation == TANH:
            delta = delta * (1.0 - H_out * H_out)
        nw = layer.out_width * layer.in_width
        off -= layer.size
        grad[off : off + nw] = (delta.T @ H_in).ravel()
        grad[off + nw : off + layer.size] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ W.astype(dtype, copy=False)
    return grad


def forward(spec: list[LayerSpec], params: np.ndarray, x: np.ndarray) -> float:
    """Scalar network output at one point (last layer must have width 1)."""
    out, _ = forward_batch(spec, params, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return float(out[0, 0])


def backward(
    spec: list[LayerSpec], params: np.ndarray, x: np.ndarray, upstream: float = 1.0
) -> np.ndarray:
    """d(output)/d(params) * upstream at one point."""
    x2 = np.asarray(x, dtype=np.float64).reshape(1, -1)
    _, cache = forward_batch(spec, params, x2)
    return backward_batch(spec, params, cache, np.array([[upstream]]))


def forward_many(
    spec: list[LayerSpec], weight_samples: np.ndarray, X: np.ndarray
) -> np.ndarray:
    """Scalar outputs for T weight samples at N points; returns (T, N).

    Prediction-only path (no gradients); used by acquisition scoring where
    the same points are pushed through many sampled weight vectors at once.
    Internally runs in float32 — these outputs only ever feed Monte Carlo
    estimates, and single precision is ~20x faster through tanh.
    """
    W_all = np.atleast_2d(np.asarray(weight_samples, dtype=np.float32))
    X = np.atleast_2d(np.asarray(X, dtype=np.float32))
    T = W_all.shape[0]
    if W_all.shape[1] != n_params(spec):
        raise InputShapeError("weight sample length does not match spec")
    if X.shape[1] != spec[0].in_width:
        raise InputShapeError("input dimension does not match spec")
    H = np.broadcast_to(X, (T,) + X.shape)
    off = 0
    for layer in spec:
        nw = layer.out_width * layer.in_width
        W = W_all[:, off : off + nw].reshape(T, layer.out_width, layer.in_width)
        b = W_all[:, off + nw : off + layer.size]
        A = H @ W.transpose(0, 2, 1) + b[:, None, :]
        H = np.tanh(A) if layer.activation == TANH else A
        off += layer.size
    return H[:, :, 0].astype(np.float64)
