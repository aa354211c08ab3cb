"""Siamese preferential Bayesian neural network.

Two weight-shared forward passes produce scalar latents; a sigmoid of their
difference gives the probability that the first point is preferred. Training
minimizes KL-to-prior plus the expected binary cross-entropy via
Bayes-by-Backprop.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import netcore, varnet
from .errors import EmptyDatasetError, InputShapeError

PROB_EPS = 1e-12
# minibatch SGD runs single precision; float64 stays the default for
# gradient verification
TRAIN_DTYPE = np.float32

# Appendix-style defaults: small-batch short runs for dataset elicitation,
# longer runs for the BO-stage expert model.
TABLE_STYLE = {"epochs": 20, "batch_size": 2}
BO_STYLE = {"epochs": 100, "batch_size": 10}
DEFAULT_HIDDEN = [100, 10]


@dataclass(frozen=True)
class PreferencePair:
    x: tuple
    x_prime: tuple
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise InputShapeError(f"label must be 0 or 1, got {self.label}")
        if len(self.x) != len(self.x_prime):
            raise InputShapeError("pair members must share dimension")


@dataclass
class PreferenceDataset:
    """Ordered collection of labelled pairs in the unit cube."""

    d: int
    X: np.ndarray = None
    Xp: np.ndarray = None
    y: np.ndarray = None

    def __post_init__(self):
        if self.X is None:
            self.X = np.empty((0, self.d))
            self.Xp = np.empty((0, self.d))
            self.y = np.empty((0,))
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, self.d)
        self.Xp = np.asarray(self.Xp, dtype=np.float64).reshape(-1, self.d)
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if not (len(self.X) == len(self.Xp) == len(self.y)):
            raise InputShapeError("X, Xp, y must have equal length")

    def __len__(self) -> int:
        return len(self.y)

    def add(self, x, x_prime, label: int) -> None:
        self.X = np.vstack([self.X, np.asarray(x, dtype=np.float64).reshape(1, -1)])
        self.Xp = np.vstack([self.Xp, np.asarray(x_prime, dtype=np.float64).reshape(1, -1)])
        self.y = np.append(self.y, float(label))

    def pairs(self) -> list[PreferencePair]:
        return [
            PreferencePair(tuple(self.X[i]), tuple(self.Xp[i]), int(self.y[i]))
            for i in range(len(self))
        ]

    def save_csv(self, path) -> None:
        header = [f"x{k}" for k in range(self.d)] + [f"xp{k}" for k in range(self.d)] + ["label"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                w.writerow(list(self.X[i]) + list(self.Xp[i]) + [int(self.y[i])])

    @classmethod
    def load_csv(cls, path) -> "PreferenceDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise EmptyDatasetError(f"no rows in {path}")
        header = rows[0]
        if "label" not in header:
            raise InputShapeError("preference CSV must have a header with a label column")
        d = (len(header) - 1) // 2
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
        if data.size == 0:
            return cls(d=d)
        return cls(d=d, X=data[:, :d], Xp=data[:, d : 2 * d], y=data[:, 2 * d])


def connection(latent_a: float, latent_b: float) -> float:
    """Probability that the first latent wins: sigmoid of the difference."""
    return float(varnet.sigmoid(np.asarray(latent_a) - np.asarray(latent_b)))


def _pair_probs(params, spec, X, Xp, dtype=np.float64) -> tuple[np.ndarray, list, int]:
    # both twins share weights, so one stacked pass covers the pair
    n = len(X)
    out, cache = netcore.forward_batch(spec, params, np.vstack([X, Xp]), dtype)
    p = varnet.sigmoid(out[:n, 0] - out[n:, 0])
    return p, cache, n


def preference_nll(
    params: np.ndarray, spec: list[netcore.LayerSpec], data: PreferenceDataset
) -> float:
    """Binary cross-entropy of the dataset under one weight realization."""
    if len(data) == 0:
        raise EmptyDatasetError("preference_nll needs a non-empty dataset")
    p, _, _ = _pair_probs(params, spec, data.X, data.Xp)
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.sum(data.y * np.log(p) + (1.0 - data.y) * np.log(1.0 - p)))


def preference_nll_grad(
    params: np.ndarray,
    spec: list[netcore.LayerSpec],
    X: np.ndarray,
    Xp: np.ndarray,
    y: np.ndarray,
    dtype=np.float64,
) -> tuple[float, np.ndarray]:
    """BCE and its gradient w.r.t. the shared flat weights."""
    if len(y) == 0:
        raise EmptyDatasetError("preference_nll needs a non-empty dataset")
    p, cache, n = _pair_probs(params, spec, X, Xp, dtype)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    nll = float(-np.sum(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
    # d BCE / d latent_a = p - y, Siamese twin gets the opposite sign
    up = np.concatenate([p - y, y - p])[:, None]
    grad = netcore.backward_batch(spec, params, cache, up)
    return nll, grad


def elicit_elbo_loss(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    dataset_size: int,
    rng: np.random.Generator,
    mc_samples: int = 1,
) -> float:
    """Scaled-KL + MC-averaged preference NLL on one minibatch."""
    X, Xp, y = batch
    kl_scale = len(y) / dataset_size
    acc = 0.0
    for _ in range(mc_samples):
        w = varnet.sample_weights(vp, rng.standard_normal(vp.n))
        nll, _ = preference_nll_grad(w, spec, X, Xp, y)
        acc += nll
    return kl_scale * varnet.kl_to_prior(vp) + acc / mc_samples


@dataclass
class ElicitTrainConfig:
    epochs: int = 200
    batch_size: int = 10
    lr: float = 1e-2
    mc_samples: int = 1
    cosine_t_max: int = 20
    cosine_eta_min: float = 1e-4
    use_scheduler: bool = True
    # KL tempering: per-step KL coefficient is kl_weight * batch / n_weights
    # (per-parameter-mean convention). The exact ELBO scale (batch / n_pairs)
    # lets the KL of these wide posteriors swamp a handful of comparisons and
    # collapses the fit to the prior.
    kl_weight: float = 0.005
    # trains against targets y(1-2e)+e; bounds the optimal latent margin so
    # separable comparison sets cannot blow the scale up
    label_smoothing: float = 0.05


def train_elicitation(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    data: PreferenceDataset,
    config: ElicitTrainConfig,
    rng: np.random.Generator,
    state: varnet.BbbState | None = None,
) -> list[float]:
    """BBB training on preference data; returns per-epoch mean losses."""
    if len(data) == 0:
        raise EmptyDatasetError("cannot train on an empty preference dataset")
    if state is None:
        state = varnet.BbbState.create(vp, config.lr)
    n = len(data)
    e = config.label_smoothing
    y_soft = data.y * (1.0 - 2.0 * e) + e
    losses = []
    for epoch in range(config.epochs):
        lr = (
            varnet.cosine_lr(config.lr, epoch, config.cosine_t_max, config.cosine_eta_min)
            if config.use_scheduler
            else config.lr
        )
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, Xpb, yb = data.X[idx], data.Xp[idx], y_soft[idx]
            loss = varnet.bbb_step(
                vp,
                lambda w: preference_nll_grad(w, spec, Xb, Xpb, yb, TRAIN_DTYPE),
                state,
                rng,
                mc_samples=config.mc_samples,
                kl_scale=config.kl_weight * len(yb) / vp.n,
                lr=lr,
                step_index=epoch,
            )
            epoch_loss += loss
        losses.append(epoch_loss / math.ceil(n / config.batch_size))
    return losses


def latent_curve(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    grid: np.ndarray,
    T: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point MC mean and std of the latent over T weight samples."""
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if grid.shape[0] == 0:
        raise EmptyDatasetError("latent_curve needs a non-empty grid")
    W = varnet.sample_weight_matrix(vp, T, rng)
    Z = netcore.forward_many(spec, W, grid)
    return Z.mean(axis=0), Z.std(axis=0)
