"""Joint surrogate with a shared hidden trunk and two scalar heads.

The trunk's variational posterior is the same object for both tasks; head g
serves the preference (expert) task, head f the regression (objective) task.
The two task losses are combined with exponentially decaying weights that
shift emphasis toward the objective as acquisitions accumulate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import netcore, pbnn, varnet
from .errors import EmptyDatasetError, InputShapeError, TrainingDivergenceError

DEFAULT_TRUNK_HIDDEN = [100, 30, 15]
DEFAULT_ALPHA = 0.95


def combined_weights(j: int, alpha: float) -> tuple[float, float]:
    """Loss weights (expert task, objective task) after the j-th acquisition."""
    if j < 1:
        raise InputShapeError("acquisition index j must be >= 1")
    if not 0.0 < alpha <= 1.0:
        raise InputShapeError("alpha must be in (0, 1]")
    a = alpha ** (j - 1)
    return a / (a + 1.0), 1.0 / (a + 1.0)


@dataclass
class MtlModel:
    trunk_spec: list[netcore.LayerSpec]  # tanh layers ending at the feature width
    trunk_vp: varnet.VariationalParams
    head_g_vp: varnet.VariationalParams
    head_f_vp: varnet.VariationalParams
    y_mean: float = 0.0
    y_std: float = 1.0
    _states: dict = field(default_factory=dict)

    @property
    def feature_width(self) -> int:
        return self.trunk_spec[-1].out_width

    @property
    def head_spec(self) -> netcore.LayerSpec:
        return netcore.LayerSpec(self.feature_width, 1, netcore.IDENTITY)

    def task_spec(self) -> list[netcore.LayerSpec]:
        return list(self.trunk_spec) + [self.head_spec]

    def _head_vp(self, head: str) -> varnet.VariationalParams:
        return self.head_g_vp if head == "g" else self.head_f_vp

    def sample_task_weights(self, head: str, T: int, rng: np.random.Generator) -> np.ndarray:
        """T flat weight vectors for trunk + the chosen head, as rows."""
        Wt = varnet.sample_weight_matrix(self.trunk_vp, T, rng)
        Wh = varnet.sample_weight_matrix(self._head_vp(head), T, rng)
        return np.hstack([Wt, Wh])

    def mean_task_weights(self, head: str) -> np.ndarray:
        return np.concatenate([self.trunk_vp.mu, self._head_vp(head).mu])

    def optimizer_state(self, part: str, lr: float) -> varnet.BbbState:
        if part not in self._states:
            vp = {"trunk": self.trunk_vp, "g": self.head_g_vp, "f": self.head_f_vp}[part]
            self._states[part] = varnet.BbbState.create(vp, lr)
        return self._states[part]

    def reset_optimizers(self) -> None:
        self._states.clear()


def create_model(
    d: int,
    rng: np.random.Generator,
    hidden: list[int] | None = None,
    prior_sigma: float = varnet.DEFAULT_PRIOR_SIGMA,
) -> MtlModel:
    hidden = DEFAULT_TRUNK_HIDDEN if hidden is None else hidden
    widths = [d] + list(hidden)
    trunk = [netcore.LayerSpec(a, b, netcore.TANH) for a, b in zip(widths[:-1], widths[1:])]
    head_spec = [netcore.LayerSpec(hidden[-1], 1, netcore.IDENTITY)]
    return MtlModel(
        trunk_spec=trunk,
        trunk_vp=varnet.init_variational_mlp(trunk, rng, prior_sigma),
        head_g_vp=varnet.init_variational_mlp(head_spec, rng, prior_sigma),
        head_f_vp=varnet.init_variational_mlp(head_spec, rng, prior_sigma),
    )


def init_head_f_from_g(model: MtlModel) -> None:
    """Start the objective head as a copy of the trained expert head."""
    model.head_f_vp.mu = model.head_g_vp.mu.copy()
    model.head_f_vp.rho = model.head_g_vp.rho.copy()


def predict_g(model: MtlModel, X: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """(T, N) latent samples of the expert surrogate."""
    W = model.sample_task_weights("g", T, rng)
    return netcore.forward_many(model.task_spec(), W, X)


def predict_f(model: MtlModel, X: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """(T, N) objective samples in native y-scale."""
    W = model.sample_task_weights("f", T, rng)
    Z = netcore.forward_many(model.task_spec(), W, X)
    return model.y_mean + model.y_std * Z


def predict_f_mean(model: MtlModel, X: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    return predict_f(model, X, T, rng).mean(axis=0)


@dataclass
class MtlTrainConfig:
    epochs: int = 200
    pref_batch: int = 10
    reg_batch: int = 5
    lr: float = 0.01
    mc_samples: int = 1
    alpha: float = DEFAULT_ALPHA
    noise_sigma: float = 0.1
    # KL tempering: each posterior's KL enters a step scaled by
    # kl_weight * batch / n_weights (per-parameter-mean KL convention).
    # The untempered ELBO collapses these over-parameterized posteriors to
    # the prior before the likelihood can shape them.
    kl_weight: float = 0.005
    # comparison targets trained as y(1-2e)+e, capping the latent margin
    label_smoothing: float = 0.05


def standardize_targets(model: MtlModel, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    model.y_mean = float(y.mean())
    model.y_std = float(y.std()) if y.size > 1 and y.std() > 0 else 1.0
    return (y - model.y_mean) / model.y_std


def mtl_train_round(
    model: MtlModel,
    pref_data: pbnn.PreferenceDataset | None,
    Xf: np.ndarray,
    yf: np.ndarray,
    j: int,
    config: MtlTrainConfig,
    rng: np.random.Generator,
    g_weight_override: float | None = None,
) -> list[float]:
    """One BO-round training pass on the combined decaying loss.

    Returns per-epoch combined losses. Per-task minibatch NLLs are rescaled
    so each epoch's summed likelihood term estimates the full-dataset NLL;
    KLs are tempered (see MtlTrainConfig.kl_weight), heads carrying their
    task weights.
    """
    Xf = np.atleast_2d(np.asarray(Xf, dtype=np.float64))
    yf = np.asarray(yf, dtype=np.float64).ravel()
    if yf.size == 0:
        raise EmptyDatasetError("mtl_train_round needs at least one objective observation")
    w_g, w_f = combined_weights(j, config.alpha)
    if g_weight_override is not None:
        w_g = g_weight_override
        w_f = 1.0 - g_weight_override if g_weight_override <= 1.0 else 1.0
    have_pref = pref_data is not None and len(pref_data) > 0 and w_g > 0.0
    if have_pref:
        e = config.label_smoothing
        y_soft = pref_data.y * (1.0 - 2.0 * e) + e
    y_std = standardize_targets(model, yf)
    lik = varnet.RegressionLikelihood(config.noise_sigma)

    spec_g = model.task_spec()
    spec_f = model.task_spec()
    P_t = netcore.n_params(model.trunk_spec)
    n_reg = yf.size
    nb_reg = math.ceil(n_reg / config.reg_batch)
    n_pref = len(pref_data) if have_pref else 0
    nb_pref = math.ceil(n_pref / config.pref_batch) if have_pref else 0
    steps = max(nb_reg, nb_pref)

    tvp, gvp, fvp = model.trunk_vp, model.head_g_vp, model.head_f_vp
    # one packed posterior [trunk | head g | head f]; Adam and the KL are
    # elementwise, so packed steps match per-part steps exactly
    joint = varnet.VariationalParams(
        np.concatenate([tvp.mu, gvp.mu, fvp.mu]),
        np.concatenate([tvp.rho, gvp.rho, fvp.rho]),
        tvp.prior_sigma,
    )
    n_t, n_g, n_f = tvp.n, gvp.n, fvp.n
    sl_t = slice(0, n_t)
    sl_g = slice(n_t, n_t + n_g)
    sl_f = slice(n_t + n_g, n_t + n_g + n_f)
    if "bo" not in model._states:
        model._states["bo"] = varnet.BbbState.create(joint, config.lr)
    st = model._states["bo"]
    ps2 = joint.prior_sigma * joint.prior_sigma

    losses = []
    for epoch in range(config.epochs):
        reg_order = rng.permutation(n_reg)
        pref_order = rng.permutation(n_pref) if have_pref else None
        epoch_loss = 0.0
        for s in range(steps):
            sp = varnet.sigmoid(joint.rho)
            sigma = np.logaddexp(0.0, joint.rho)
            eps = rng.standard_normal(joint.n)
            w = joint.mu + sigma * eps

            grad = np.zeros(joint.n)
            loss = 0.0

            # objective (regression) branch
            ridx = reg_order[(s % nb_reg) * config.reg_batch : (s % nb_reg) * config.reg_batch + config.reg_batch]
            reg_scale = w_f * n_reg / (len(ridx) * steps)
            nll_f, grad_f = varnet.regression_nll_grad(
                np.concatenate([w[sl_t], w[sl_f]]), spec_f, Xf[ridx], y_std[ridx], lik,
                pbnn.TRAIN_DTYPE,
            )
            grad[sl_t] += reg_scale * grad_f[:P_t]
            grad[sl_f] += reg_scale * grad_f[P_t:]
            loss += reg_scale * nll_f

            # expert (preference) branch
            n_batch = len(ridx)
            if have_pref:
                pi = pref_order[(s % nb_pref) * config.pref_batch : (s % nb_pref) * config.pref_batch + config.pref_batch]
                pref_scale = w_g * n_pref / (len(pi) * steps)
                nll_g, grad_g = pbnn.preference_nll_grad(
                    w[: n_t + n_g], spec_g,
                    pref_data.X[pi], pref_data.Xp[pi], y_soft[pi],
                    pbnn.TRAIN_DTYPE,
                )
                grad[sl_t] += pref_scale * grad_g[:P_t]
                grad[sl_g] += pref_scale * grad_g[P_t:]
                loss += pref_scale * nll_g
                n_batch += len(pi)

            # tempered KL: trunk once (fed by both batches), heads by task weight
            c = np.empty(joint.n)
            c[sl_t] = config.kl_weight * n_batch / n_t
            c[sl_g] = w_g * config.kl_weight * (len(pi) if have_pref else 0) / n_g
            c[sl_f] = w_f * config.kl_weight * len(ridx) / n_f
            kl_terms = np.log(joint.prior_sigma / sigma) + (sigma * sigma + joint.mu * joint.mu) / (2.0 * ps2) - 0.5
            loss += float(np.dot(c, kl_terms))
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"non-finite combined loss at epoch {epoch}", step=epoch
                )

            gmu = grad + c * (joint.mu / ps2)
            grho = grad * eps * sp + c * ((sigma / ps2 - 1.0 / sigma) * sp)
            packed = st.opt.step(
                np.concatenate([joint.mu, joint.rho]), np.concatenate([gmu, grho])
            )
            joint.mu, joint.rho = packed[: joint.n], packed[joint.n :]

            epoch_loss += loss
        losses.append(epoch_loss / steps)
    tvp.mu, tvp.rho = joint.mu[sl_t].copy(), joint.rho[sl_t].copy()
    gvp.mu, gvp.rho = joint.mu[sl_g].copy(), joint.rho[sl_g].copy()
    fvp.mu, fvp.rho = joint.mu[sl_f].copy(), joint.rho[sl_f].copy()
    return losses


def elicit_model(
    model: MtlModel,
    pref_data: pbnn.PreferenceDataset,
    config: pbnn.ElicitTrainConfig,
    rng: np.random.Generator,
) -> list[float]:
    """Elicitation-stage training of trunk + head g on preference data only."""
    if len(pref_data) == 0:
        raise EmptyDatasetError("cannot elicit on an empty preference dataset")
    spec_g = model.task_spec()
    n = len(pref_data)
    e = config.label_smoothing
    y_soft = pref_data.y * (1.0 - 2.0 * e) + e
    tvp, gvp = model.trunk_vp, model.head_g_vp
    # trunk and head share every step, so train them as one packed posterior;
    # Adam and the KL are elementwise, making this identical to per-part steps
    joint = varnet.VariationalParams(
        np.concatenate([tvp.mu, gvp.mu]),
        np.concatenate([tvp.rho, gvp.rho]),
        tvp.prior_sigma,
    )
    P_t = tvp.n
    if "elicit" not in model._states:
        model._states["elicit"] = varnet.BbbState.create(joint, config.lr)
    st = model._states["elicit"]
    # per-part KL tempering (kl_weight * batch / part size) as a flat vector
    c_unit = np.concatenate(
        [np.full(tvp.n, config.kl_weight / tvp.n), np.full(gvp.n, config.kl_weight / gvp.n)]
    )
    losses = []
    for epoch in range(config.epochs):
        lr = (
            varnet.cosine_lr(config.lr, epoch, config.cosine_t_max, config.cosine_eta_min)
            if config.use_scheduler
            else config.lr
        )
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = math.ceil(n / config.batch_size)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            sp = varnet.sigmoid(joint.rho)
            sigma = np.logaddexp(0.0, joint.rho)
            eps = rng.standard_normal(joint.n)
            w = joint.mu + sigma * eps
            nll, grad = pbnn.preference_nll_grad(
                w, spec_g,
                pref_data.X[idx], pref_data.Xp[idx], y_soft[idx],
                pbnn.TRAIN_DTYPE,
            )
            c = len(idx) * c_unit
            ps2 = joint.prior_sigma * joint.prior_sigma
            kl_terms = np.log(joint.prior_sigma / sigma) + (sigma * sigma + joint.mu * joint.mu) / (2.0 * ps2) - 0.5
            loss = nll + float(np.dot(c, kl_terms))
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"non-finite elicitation loss at epoch {epoch}", step=epoch
                )
            gmu = grad + c * (joint.mu / ps2)
            grho = grad * eps * sp + c * ((sigma / ps2 - 1.0 / sigma) * sp)
            packed = st.opt.step(
                np.concatenate([joint.mu, joint.rho]),
                np.concatenate([gmu, grho]),
                lr=lr,
            )
            joint.mu, joint.rho = packed[: joint.n], packed[joint.n :]
            epoch_loss += loss
        losses.append(epoch_loss / n_batches)
    tvp.mu, tvp.rho = joint.mu[:P_t].copy(), joint.rho[:P_t].copy()
    gvp.mu, gvp.rho = joint.mu[P_t:].copy(), joint.rho[P_t:].copy()
    return losses
