"""Diagonal-Gaussian variational posteriors over network weights.

Implements reparameterized weight sampling, the closed-form KL to an
isotropic Gaussian prior, the Gaussian-likelihood regression NLL, and a
single Bayes-by-Backprop ADAM step driven by a caller-supplied likelihood
gradient. The KL of a minibatch step is scaled by batch_size/dataset_size so
the KL summed over one epoch equals the full KL exactly once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import netcore
from .errors import EmptyDatasetError, InputShapeError, TrainingDivergenceError

CHECKPOINT_VERSION = 1

DEFAULT_PRIOR_SIGMA = 0.1
INIT_MU_STD = 0.05
INIT_SIGMA = 0.05


def softplus(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.logaddexp(0.0, x)


def softplus_inv(y: float) -> float:
    # inverse of log(1 + e^x); valid for y > 0
    return float(np.log(np.expm1(y)))


def sigmoid(x) -> np.ndarray:
    return expit(np.asarray(x, dtype=np.float64))


@dataclass
class VariationalParams:
    """Posterior means and pre-softplus scales for one flat weight vector."""

    mu: np.ndarray
    rho: np.ndarray
    prior_sigma: float = DEFAULT_PRIOR_SIGMA

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.mu.shape != self.rho.shape or self.mu.ndim != 1:
            raise InputShapeError("mu and rho must be 1-d vectors of equal length")
        if self.prior_sigma <= 0:
            raise InputShapeError("prior_sigma must be positive")

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def sigma(self) -> np.ndarray:
        return softplus(self.rho)

    def copy(self) -> "VariationalParams":
        return VariationalParams(self.mu.copy(), self.rho.copy(), self.prior_sigma)


def init_variational(
    n: int,
    rng: np.random.Generator,
    prior_sigma: float = DEFAULT_PRIOR_SIGMA,
    init_mu_std: float = INIT_MU_STD,
    init_sigma: float = INIT_SIGMA,
) -> VariationalParams:
    mu = rng.normal(0.0, init_mu_std, size=n)
    rho = np.full(n, softplus_inv(init_sigma))
    return VariationalParams(mu, rho, prior_sigma)


def init_variational_mlp(
    spec: list[netcore.LayerSpec],
    rng: np.random.Generator,
    prior_sigma: float = DEFAULT_PRIOR_SIGMA,
    init_sigma: float = INIT_SIGMA,
) -> VariationalParams:
    """Layer-aware posterior init: mu ~ U(±1/sqrt(fan_in)) per layer.

    Fan-in scaling keeps early latents from vanishing through tanh stacks;
    a flat small-variance mu start reliably underfits preference data.
    """
    n = netcore.n_params(spec)
    mu = np.empty(n)
    off = 0
    for ls in spec:
        k = ls.in_width * ls.out_width + ls.out_width
        bound = 1.0 / math.sqrt(ls.in_width)
        mu[off : off + k] = rng.uniform(-bound, bound, size=k)
        off += k
    rho = np.full(n, softplus_inv(init_sigma))
    return VariationalParams(mu, rho, prior_sigma)


def sample_weights(vp: VariationalParams, noise: np.ndarray) -> np.ndarray:
    """Reparameterized sample mu + softplus(rho) * noise."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != vp.mu.shape:
        raise InputShapeError("noise length must match mu length")
    return vp.mu + vp.sigma * noise


def kl_to_prior(vp: VariationalParams) -> float:
    """KL( N(mu, sigma^2) || N(0, prior_sigma^2) ), summed over weights."""
    sigma = vp.sigma
    ps = vp.prior_sigma
    terms = np.log(ps / sigma) + (sigma**2 + vp.mu**2) / (2.0 * ps**2) - 0.5
    return float(terms.sum())


def kl_gradients(vp: VariationalParams) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of kl_to_prior w.r.t. (mu, rho)."""
    sigma = vp.sigma
    ps2 = vp.prior_sigma**2
    dmu = vp.mu / ps2
    dsigma = sigma / ps2 - 1.0 / sigma
    drho = dsigma * sigmoid(vp.rho)
    return dmu, drho


def kl_value_and_gradients(
    vp: VariationalParams, sigma: np.ndarray, sp_grad: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """kl_to_prior and its (mu, rho) gradients, reusing precomputed
    sigma = softplus(rho) and sp_grad = sigmoid(rho). Hot path for trainers."""
    ps = vp.prior_sigma
    ps2 = ps * ps
    kl = float(
        np.sum(np.log(ps / sigma) + (sigma * sigma + vp.mu * vp.mu) / (2.0 * ps2) - 0.5)
    )
    dmu = vp.mu / ps2
    drho = (sigma / ps2 - 1.0 / sigma) * sp_grad
    return kl, dmu, drho


@dataclass
class RegressionLikelihood:
    noise_sigma: float = 0.1

    def __post_init__(self):
        if self.noise_sigma <= 0:
            raise InputShapeError("noise_sigma must be positive")


def regression_nll(
    params: np.ndarray,
    spec: list[netcore.LayerSpec],
    X: np.ndarray,
    y: np.ndarray,
    lik: RegressionLikelihood,
) -> float:
    """Gaussian negative log-likelihood of (X, y) under the network."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise EmptyDatasetError("regression_nll needs a non-empty dataset")
    out, _ = netcore.forward_batch(spec, params, X)
    r = (y - out[:, 0]) / lik.noise_sigma
    return float(
        0.5 * np.sum(r * r) + y.size * (math.log(lik.noise_sigma) + 0.5 * math.log(2 * math.pi))
    )


def regression_nll_grad(
    params: np.ndarray,
    spec: list[netcore.LayerSpec],
    X: np.ndarray,
    y: np.ndarray,
    lik: RegressionLikelihood,
    dtype=np.float64,
) -> tuple[float, np.ndarray]:
    """NLL and its gradient w.r.t. the flat weights."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise EmptyDatasetError("regression_nll needs a non-empty dataset")
    out, cache = netcore.forward_batch(spec, params, X, dtype)
    resid = out[:, 0] - y
    nll = float(
        0.5 * np.sum((resid / lik.noise_sigma) ** 2)
        + y.size * (math.log(lik.noise_sigma) + 0.5 * math.log(2 * math.pi))
    )
    upstream = (resid / lik.noise_sigma**2)[:, None]
    grad = netcore.backward_batch(spec, params, cache, upstream)
    return nll, grad


class Adam:
    """Plain ADAM over one flat vector."""

    def __init__(self, n: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(n)
        self.v = np.zeros(n)

    def step(self, x: np.ndarray, grad: np.ndarray, lr: float | None = None) -> np.ndarray:
        lr = self.lr if lr is None else lr
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mh = self.m / (1 - self.beta1**self.t)
        vh = self.v / (1 - self.beta2**self.t)
        return x - lr * mh / (np.sqrt(vh) + self.eps)


def cosine_lr(base_lr: float, epoch: int, t_max: int = 20, eta_min: float = 1e-4) -> float:
    """Cosine-annealed learning rate, restarting every t_max epochs."""
    phase = (epoch % t_max) / t_max
    return eta_min + 0.5 * (base_lr - eta_min) * (1.0 + math.cos(math.pi * phase))


@dataclass
class BbbState:
    """Optimizer state for one variational posterior (mu and rho jointly)."""

    opt: Adam

    @classmethod
    def create(cls, vp: VariationalParams, lr: float) -> "BbbState":
        return cls(Adam(2 * vp.n, lr=lr))


def bbb_step(
    vp: VariationalParams,
    nll_grad_fn,
    state: BbbState,
    rng: np.random.Generator,
    mc_samples: int = 1,
    kl_scale: float = 1.0,
    lr: float | None = None,
    step_index: int = 0,
) -> float:
    """One ADAM update of (mu, rho) on the MC negative ELBO. Returns the loss.

    nll_grad_fn(weights) must return (nll, d nll / d weights) for one weight
    sample. The KL term uses the closed form, weighted by kl_scale.
    """
    if mc_samples < 1:
        raise InputShapeError("mc_samples must be >= 1")
    sigma = vp.sigma
    sp_grad = sigmoid(vp.rho)
    g_mu = np.zeros(vp.n)
    g_rho = np.zeros(vp.n)
    nll_acc = 0.0
    for _ in range(mc_samples):
        eps = rng.standard_normal(vp.n)
        w = vp.mu + sigma * eps
        nll, gw = nll_grad_fn(w)
        nll_acc += nll
        g_mu += gw
        g_rho += gw * eps * sp_grad
    g_mu /= mc_samples
    g_rho /= mc_samples
    nll_acc /= mc_samples
    kl, kmu, krho = kl_value_and_gradients(vp, sigma, sp_grad)
    g_mu += kl_scale * kmu
    g_rho += kl_scale * krho
    loss = kl_scale * kl + nll_acc
    if not (np.isfinite(loss) and np.all(np.isfinite(g_mu)) and np.all(np.isfinite(g_rho))):
        raise TrainingDivergenceError(
            f"non-finite loss or gradient at step {step_index}", step=step_index
        )
    packed = np.concatenate([vp.mu, vp.rho])
    packed = state.opt.step(packed, np.concatenate([g_mu, g_rho]), lr=lr)
    vp.mu = packed[: vp.n]
    vp.rho = packed[vp.n :]
    return loss


def sample_weight_matrix(
    vp: VariationalParams, T: int, rng: np.random.Generator
) -> np.ndarray:
    """T reparameterized weight samples stacked as rows."""
    eps = rng.standard_normal((T, vp.n))
    return vp.mu[None, :] + vp.sigma[None, :] * eps


def predictive_samples(
    vp: VariationalParams,
    spec: list[netcore.LayerSpec],
    x: np.ndarray,
    T: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """T i.i.d. scalar predictions at x, each through fresh weight samples."""
    if T < 1:
        raise InputShapeError("T must be >= 1")
    W = sample_weight_matrix(vp, T, rng)
    x2 = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return netcore.forward_many(spec, W, x2)[:, 0]


def save_checkpoint(path, spec: list[netcore.LayerSpec], vps: dict[str, VariationalParams]) -> None:
    blob = {
        "version": CHECKPOINT_VERSION,
        "layers": [
            {"in_width": l.in_width, "out_width": l.out_width, "activation": l.activation}
            for l in spec
        ],
        "posteriors": {
            name: {
                "mu": vp.mu.tolist(),
                "rho": vp.rho.tolist(),
                "prior_sigma": vp.prior_sigma,
            }
            for name, vp in vps.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path) -> tuple[list[netcore.LayerSpec], dict[str, VariationalParams]]:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise InputShapeError(f"unsupported checkpoint version {blob.get('version')}")
    spec = [
        netcore.LayerSpec(l["in_width"], l["out_width"], l["activation"])
        for l in blob["layers"]
    ]
    vps = {
        name: VariationalParams(
            np.array(p["mu"]), np.array(p["rho"]), p["prior_sigma"]
        )
        for name, p in blob["posteriors"].items()
    }
    return spec, vps
