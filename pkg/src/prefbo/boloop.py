"""End-to-end optimization loop: elicitation phase, then BO with MC expected
improvement over fresh candidate sets, incumbent tracking, and history
logging. Every randomness source derives from one seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import norm

from . import active, mtl, netcore, pbnn, varnet
from .bench import Benchmark
from .errors import DomainError, EmptyDatasetError, InputShapeError

DEFAULT_T_EI = 30
DEFAULT_N_CANDIDATES = 2000

KIND_ACQUISITION = "acquisition"
KIND_INCUMBENT = "incumbent-assessment"


@dataclass
class EvalRecord:
    x: tuple
    y: float
    kind: str


@dataclass
class BoConfig:
    hidden: list[int] = field(default_factory=lambda: list(mtl.DEFAULT_TRUNK_HIDDEN))
    pool_points: int = active.DEFAULT_POOL_POINTS
    pool_pairs: int = active.DEFAULT_POOL_PAIRS
    n_candidates: int = DEFAULT_N_CANDIDATES
    t_bald: int = active.DEFAULT_T_BALD
    t_ei: int = DEFAULT_T_EI
    t_incumbent: int = DEFAULT_T_EI
    alpha: float = mtl.DEFAULT_ALPHA
    elicit_epochs: int = 200
    elicit_batch: int = 10
    elicit_lr: float = 1e-2
    bo_epochs: int = 200
    pref_batch: int = 10
    reg_batch: int = 5
    bo_lr: float = 0.01
    noise_sigma: float = 0.1
    from_scratch: bool = False

    def elicit_config(self) -> pbnn.ElicitTrainConfig:
        return pbnn.ElicitTrainConfig(
            epochs=self.elicit_epochs, batch_size=self.elicit_batch, lr=self.elicit_lr
        )

    def mtl_config(self) -> mtl.MtlTrainConfig:
        return mtl.MtlTrainConfig(
            epochs=self.bo_epochs,
            pref_batch=self.pref_batch,
            reg_batch=self.reg_batch,
            lr=self.bo_lr,
            alpha=self.alpha,
            noise_sigma=self.noise_sigma,
        )


@dataclass
class BoHistory:
    seed: int
    config: dict
    iterations: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    pref_queries: int = 0

    @property
    def y_best_curve(self) -> list[float]:
        return [rec["y_best"] for rec in self.iterations]

    def n_evals(self, kind: str | None = None) -> int:
        if kind is None:
            return len(self.evals)
        return sum(1 for e in self.evals if e.kind == kind)

    def save_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"meta": {"seed": self.seed, "config": self.config}}) + "\n")
            for rec in self.iterations:
                fh.write(json.dumps(rec) + "\n")

    def summary_rows(self) -> list[tuple]:
        return [(self.seed, rec["j"], rec["y_best"]) for rec in self.iterations]


def write_summary_csv(path, histories: list[BoHistory]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "j", "y_best"])
        for h in histories:
            w.writerows(h.summary_rows())


def ei_analytic(mu: float, s: float, y_best: float) -> float:
    """Closed-form expected improvement for a Gaussian predictive (minimization).

    Used as a test oracle against the MC estimator."""
    if s <= 0:
        raise DomainError("predictive std must be positive")
    gamma = (y_best - mu) / s
    return float(s * (gamma * norm.cdf(gamma) + norm.pdf(gamma)))


def ei_from_samples(samples: np.ndarray, y_best: float) -> float:
    samples = np.asarray(samples, dtype=np.float64)
    return float(np.maximum(y_best - samples, 0.0).mean())


def ei_mc(
    model: mtl.MtlModel,
    x: np.ndarray,
    y_best: float,
    rng: np.random.Generator,
    T: int = DEFAULT_T_EI,
) -> float:
    """MC expected improvement at one point, native y-scale."""
    if T < 1:
        raise InputShapeError("T must be >= 1")
    samples = mtl.predict_f(model, np.asarray(x, dtype=np.float64).reshape(1, -1), T, rng)[:, 0]
    return ei_from_samples(samples, y_best)


def acquire_next(
    model: mtl.MtlModel,
    candidates: np.ndarray,
    y_best: float,
    rng: np.random.Generator,
    T: int = DEFAULT_T_EI,
) -> tuple[int, float]:
    """Candidate index maximizing MC EI; the T weight samples are shared
    across candidates. With y_best infinite (no data yet) falls back to the
    posterior-mean minimizer. Ties break to the lowest index."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if len(candidates) == 0:
        raise EmptyDatasetError("acquire_next needs candidates")
    Z = mtl.predict_f(model, candidates, T, rng)  # (T, N) native scale
    if not math.isfinite(y_best):
        k = int(np.argmin(Z.mean(axis=0)))
        return k, float("inf")
    ei = np.maximum(y_best - Z, 0.0).mean(axis=0)
    k = int(np.argmax(ei))
    return k, float(ei[k])


def update_incumbent(
    model: mtl.MtlModel,
    candidates: np.ndarray,
    f_unit,
    y_best: float,
    rng: np.random.Generator,
    T: int = DEFAULT_T_EI,
) -> tuple[float, EvalRecord]:
    """Evaluate the true objective at the posterior-mean minimizer."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if len(candidates) == 0:
        raise EmptyDatasetError("update_incumbent needs candidates")
    mean = mtl.predict_f(model, candidates, T, rng).mean(axis=0)
    k = int(np.argmin(mean))
    y = float(f_unit(candidates[k]))
    rec = EvalRecord(x=tuple(candidates[k]), y=y, kind=KIND_INCUMBENT)
    return min(y_best, y), rec


def run_elicitation(
    model: mtl.MtlModel,
    pool: active.CandidatePool,
    expert,
    M: int,
    config: BoConfig,
    rng: np.random.Generator,
) -> tuple[pbnn.PreferenceDataset, set[int]]:
    """Alg. lines 1-8: one random initial pair, then M PBALD acquisitions,
    retraining the expert branch after every answer."""
    d = pool.points.shape[1]
    data = pbnn.PreferenceDataset(d=d)
    asked: set[int] = set()
    k0 = int(rng.integers(0, len(pool.pairs)))
    asked.add(k0)
    x, xp = pool.pair_points(k0)
    data.add(x, xp, expert.answer(x, xp))
    ecfg = config.elicit_config()
    mtl.elicit_model(model, data, ecfg, rng)
    spec_g = model.task_spec()
    for _ in range(M):
        W = model.sample_task_weights("g", config.t_bald, rng)
        scores = active.score_pool_from_samples(W, spec_g, pool)
        k = _argmax_unasked(scores, asked)
        asked.add(k)
        x, xp = pool.pair_points(k)
        data.add(x, xp, expert.answer(x, xp))
        mtl.elicit_model(model, data, ecfg, rng)
    return data, asked


def _argmax_unasked(scores: np.ndarray, asked: set[int]) -> int:
    best = -1
    best_score = -np.inf
    for k in range(len(scores)):
        if k in asked:
            continue
        if scores[k] > best_score:
            best, best_score = k, float(scores[k])
    if best < 0:
        from .errors import PoolExhaustedError

        raise PoolExhaustedError("all pool pairs have been asked")
    return best


def run_algorithm1(
    benchmark: Benchmark,
    expert_factory,
    M: int,
    J: int,
    config: BoConfig,
    seed: int,
    initial_pref_data: pbnn.PreferenceDataset | None = None,
    progress=None,
) -> BoHistory:
    """Full two-stage loop: PBALD elicitation (M queries after one random
    initial pair), then J rounds of MC-EI Bayesian optimization with the
    combined decaying loss. M = 0 with no initial data is the plain BNN
    baseline (expert branch weight forced to zero).

    expert_factory is called with the pool's anchor points and must return an
    object with answer(x, x_prime) -> {0, 1}; pass None when M == 0 and no
    initial preference data is supplied.
    """
    if M < 0 or J < 1:
        raise InputShapeError("need M >= 0 and J >= 1")
    ss = np.random.SeedSequence(seed)
    s_pool, s_model, s_elicit, s_bo, s_cand = ss.spawn(5)
    rng_model = np.random.default_rng(s_model)
    rng_elicit = np.random.default_rng(s_elicit)
    rng_bo = np.random.default_rng(s_bo)
    rng_cand = np.random.default_rng(s_cand)

    d = benchmark.d
    model = mtl.create_model(d, rng_model, hidden=config.hidden)
    history = BoHistory(seed=seed, config=asdict(config))

    pref_data: pbnn.PreferenceDataset | None = None
    if initial_pref_data is not None and len(initial_pref_data) > 0:
        pref_data = initial_pref_data
        mtl.elicit_model(model, pref_data, config.elicit_config(), rng_elicit)
        history.pref_queries = len(pref_data)
    elif M > 0:
        pool_seed = int(np.random.default_rng(s_pool).integers(0, 2**31 - 1))
        pool = active.build_pool(d, config.pool_points, config.pool_pairs, pool_seed)
        expert = expert_factory(pool.points)
        pref_data, _ = run_elicitation(model, pool, expert, M, config, rng_elicit)
        history.pref_queries = len(pref_data)

    elicited = pref_data is not None
    if elicited:
        mtl.init_head_f_from_g(model)
        snapshot = (
            model.trunk_vp.copy(), model.head_g_vp.copy(), model.head_f_vp.copy()
        )
    else:
        snapshot = None
    model.reset_optimizers()

    mtl_cfg = config.mtl_config()
    Xf = np.empty((0, d))
    yf = np.empty((0,))
    y_best = float("inf")
    for j in range(1, J + 1):
        candidates = rng_cand.uniform(0.0, 1.0, size=(config.n_candidates, d))
        k, ei_val = acquire_next(model, candidates, y_best, rng_bo, T=config.t_ei)
        x_new = candidates[k]
        y_new = benchmark.evaluate_unit(x_new)
        history.evals.append(EvalRecord(x=tuple(x_new), y=y_new, kind=KIND_ACQUISITION))
        Xf = np.vstack([Xf, x_new[None, :]])
        yf = np.append(yf, y_new)
        y_best = min(y_best, y_new)

        if config.from_scratch and snapshot is not None:
            model.trunk_vp, model.head_g_vp, model.head_f_vp = (
                snapshot[0].copy(), snapshot[1].copy(), snapshot[2].copy()
            )
            model.reset_optimizers()
        w_g, w_f = mtl.combined_weights(j, config.alpha)
        mtl.mtl_train_round(
            model,
            pref_data,
            Xf,
            yf,
            j,
            mtl_cfg,
            rng_bo,
            g_weight_override=None if elicited else 0.0,
        )
        y_best, inc_rec = update_incumbent(
            model, candidates, benchmark.evaluate_unit, y_best, rng_bo, T=config.t_incumbent
        )
        history.evals.append(inc_rec)
        # incumbent assessments are real evaluations; feeding them back keeps
        # EI from starving once y_best drops below every acquired observation
        Xf = np.vstack([Xf, np.asarray(inc_rec.x)[None, :]])
        yf = np.append(yf, inc_rec.y)
        history.iterations.append(
            {
                "j": j,
                "x_acquired": list(map(float, x_new)),
                "y_acquired": float(y_new),
                "ei": None if math.isinf(ei_val) else float(ei_val),
                "x_incumbent_assessed": list(map(float, inc_rec.x)),
                "y_incumbent_assessed": float(inc_rec.y),
                "y_best": float(y_best),
                "w_g": float(w_g if elicited else 0.0),
                "w_f": float(w_f if elicited else 1.0),
                "n_true_evals": len(history.evals),
            }
        )
        if progress is not None:
            progress(j, y_best)
    return history
