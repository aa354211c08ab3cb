"""Experiment orchestration and data ingestion.

Covers CSV-to-preference conversion, elicitation-accuracy runs over active
learning budgets, BO comparison runs across expert accuracy levels, and
result persistence (manifest + JSON-lines + summary CSV).
"""

from __future__ import annotations

import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import active, boloop, expertsim, mtl, netcore, pbnn, varnet
from .bench import Benchmark, get_benchmark
from .errors import CapacityError, EmptyDatasetError, InputShapeError


@dataclass
class RegressionTable:
    """Feature rows scaled to [0,1] per column, with native targets."""

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    scale_lo: np.ndarray
    scale_hi: np.ndarray

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def unscale(self, X_scaled: np.ndarray) -> np.ndarray:
        span = np.where(self.scale_hi > self.scale_lo, self.scale_hi - self.scale_lo, 1.0)
        return self.scale_lo + np.asarray(X_scaled) * span


def ingest_csv(path, target_column: str) -> RegressionTable:
    """Load a regression CSV, min-max scaling features to the unit cube."""
    df = pd.read_csv(path)
    if target_column not in df.columns:
        raise InputShapeError(
            f"target column {target_column!r} not in {list(df.columns)}"
        )
    bad = df.index[df.isna().any(axis=1)].tolist()
    if bad:
        raise InputShapeError(f"missing values at rows {bad[:10]}")
    y = df[target_column].to_numpy(dtype=np.float64)
    feats = df.drop(columns=[target_column])
    X = feats.to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise InputShapeError("non-finite values in table")
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    const = span == 0
    if np.any(const):
        import warnings

        warnings.warn(
            f"constant feature column(s) {list(np.array(feats.columns)[const])} scaled to 0"
        )
    Xs = np.where(const, 0.0, (X - lo) / np.where(const, 1.0, span))
    return RegressionTable(Xs, y, list(feats.columns), lo, hi)


@dataclass
class PreferenceSplit:
    """Disjoint active-learning pool and labelled hold-out pairs over a table."""

    pool: active.CandidatePool
    pool_labels: np.ndarray
    train: pbnn.PreferenceDataset
    test: pbnn.PreferenceDataset


def to_preferences(
    table: RegressionTable,
    n_pool_pairs: int = 2000,
    n_test_pairs: int = 1000,
    seed: int = 0,
) -> PreferenceSplit:
    """Sample disjoint pool and test pair sets, labelled y_i >= y_j."""
    n = len(table.y)
    if n < 2:
        raise CapacityError("need at least 2 rows to build preference pairs")
    max_pairs = n * (n - 1) // 2
    total = n_pool_pairs + n_test_pairs
    if total > max_pairs:
        raise CapacityError(
            f"requested {total} distinct pairs but only {max_pairs} exist"
        )
    rng = np.random.default_rng(seed)
    flat = rng.choice(max_pairs, size=total, replace=False)
    pairs = []
    for f in flat.tolist():
        i = int(n - 2 - math.floor((math.sqrt(4 * n * (n - 1) - 8 * f - 7) - 1) / 2))
        offset = f - (i * (2 * n - i - 1)) // 2
        pairs.append((i, i + 1 + int(offset)))
    pool_pairs = pairs[:n_pool_pairs]
    test_pairs = pairs[n_pool_pairs:]

    def label(i, j):
        return int(table.y[i] >= table.y[j])

    pool = active.CandidatePool(points=table.X, pairs=pool_pairs, rng_seed=seed)
    pool_labels = np.array([label(i, j) for i, j in pool_pairs], dtype=np.float64)
    train = pbnn.PreferenceDataset(
        d=table.d,
        X=table.X[[i for i, _ in pool_pairs]],
        Xp=table.X[[j for _, j in pool_pairs]],
        y=pool_labels,
    )
    test = pbnn.PreferenceDataset(
        d=table.d,
        X=table.X[[i for i, _ in test_pairs]],
        Xp=table.X[[j for _, j in test_pairs]],
        y=np.array([label(i, j) for i, j in test_pairs], dtype=np.float64),
    )
    return PreferenceSplit(pool, pool_labels, train, test)


def synthetic_table(benchmark: Benchmark, n_rows: int, seed: int) -> RegressionTable:
    """Uniform unit-cube rows labelled by the benchmark (native evaluation)."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n_rows, benchmark.d))
    y = np.array([benchmark.evaluate_unit(u) for u in X])
    return RegressionTable(
        X, y, [f"x{k}" for k in range(benchmark.d)],
        np.zeros(benchmark.d), np.ones(benchmark.d),
    )


@dataclass
class ExperimentConfig:
    benchmark: str | None = None
    dataset: str | None = None
    target_column: str | None = None
    expert_targets: list[float] = field(default_factory=list)
    include_baseline: bool = True
    M: int = 100
    J: int = 50
    n_al_checkpoints: list[int] = field(default_factory=lambda: [50, 100])
    alpha: float = 0.95
    replications: int = 20
    seed: int = 0
    t_bald: int = 100
    t_ei: int = 30
    pool_points: int = 2000
    pool_pairs: int = 2000
    test_pairs: int = 1000
    lengthscale: float = 0.1
    elicit_hidden: list[int] = field(default_factory=lambda: [100, 10])
    elicit_epochs: int = 40
    elicit_batch: int = 2
    elicit_lr: float = 1e-2
    bo_hidden: list[int] = field(default_factory=lambda: list(mtl.DEFAULT_TRUNK_HIDDEN))
    bo_elicit_epochs: int = 100
    bo_elicit_batch: int = 10
    bo_epochs: int = 200
    bo_lr: float = 0.01

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        known = {k: v for k, v in raw.items() if k in cls.__dataclass_fields__}
        unknown = set(raw) - set(known)
        if unknown:
            raise InputShapeError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)

    def bo_config(self) -> boloop.BoConfig:
        return boloop.BoConfig(
            hidden=list(self.bo_hidden),
            pool_points=self.pool_points,
            pool_pairs=self.pool_pairs,
            t_bald=self.t_bald,
            t_ei=self.t_ei,
            alpha=self.alpha,
            elicit_epochs=self.bo_elicit_epochs,
            elicit_batch=self.bo_elicit_batch,
            bo_epochs=self.bo_epochs,
            bo_lr=self.bo_lr,
        )


def holdout_accuracy(
    vp: varnet.VariationalParams,
    spec: list[netcore.LayerSpec],
    test: pbnn.PreferenceDataset,
    rng: np.random.Generator,
    T: int = 100,
) -> float:
    """Fraction of hold-out pairs whose MC mean preference probability sides
    with the label."""
    W = varnet.sample_weight_matrix(vp, T, rng)
    za = netcore.forward_many(spec, W, test.X)
    zb = netcore.forward_many(spec, W, test.Xp)
    p = varnet.sigmoid(za - zb).mean(axis=0)
    pred = (p >= 0.5).astype(np.float64)
    return float(np.mean(pred == test.y))


def run_single_elicitation(
    split: PreferenceSplit,
    config: ExperimentConfig,
    seed: int,
) -> dict[int, float]:
    """One replication of pool-based PBALD elicitation; returns hold-out
    accuracy at each active-learning checkpoint."""
    ss = np.random.SeedSequence(seed)
    s_model, s_train = ss.spawn(2)
    rng_model = np.random.default_rng(s_model)
    rng = np.random.default_rng(s_train)
    d = split.train.d
    spec = netcore.mlp_spec(d, list(config.elicit_hidden))
    vp = varnet.init_variational_mlp(spec, rng_model)
    tcfg = pbnn.ElicitTrainConfig(
        epochs=config.elicit_epochs, batch_size=config.elicit_batch, lr=config.elicit_lr
    )
    data = pbnn.PreferenceDataset(d=d)
    asked: set[int] = set()
    k0 = int(rng.integers(0, len(split.pool.pairs)))
    asked.add(k0)
    x, xp = split.pool.pair_points(k0)
    data.add(x, xp, int(split.pool_labels[k0]))
    state = varnet.BbbState.create(vp, tcfg.lr)
    pbnn.train_elicitation(vp, spec, data, tcfg, rng, state)
    results = {}
    checkpoints = sorted(config.n_al_checkpoints)
    for i in range(1, checkpoints[-1] + 1):
        k = active.select_query(vp, spec, split.pool, asked, rng, T=config.t_bald)
        asked.add(k)
        x, xp = split.pool.pair_points(k)
        data.add(x, xp, int(split.pool_labels[k]))
        pbnn.train_elicitation(vp, spec, data, tcfg, rng, state)
        if i in checkpoints:
            results[i] = holdout_accuracy(vp, spec, split.test, rng)
    return results


def run_elicitation_experiment(
    config: ExperimentConfig, out_dir=None
) -> dict[int, dict]:
    """Replicated elicitation-accuracy runs; returns per-checkpoint mean/std."""
    if config.dataset is not None:
        table = ingest_csv(config.dataset, config.target_column)
    elif config.benchmark is not None:
        table = synthetic_table(
            get_benchmark(config.benchmark), config.pool_points, config.seed
        )
    else:
        raise InputShapeError("config needs a benchmark or a dataset")
    per_rep: dict[int, list[float]] = {n: [] for n in config.n_al_checkpoints}
    rep_seeds = []
    ss = np.random.SeedSequence(config.seed)
    for rep, child in enumerate(ss.spawn(config.replications)):
        rep_seed = int(np.random.default_rng(child).integers(0, 2**31 - 1))
        rep_seeds.append(rep_seed)
        split = to_preferences(
            table, config.pool_pairs, config.test_pairs, seed=rep_seed
        )
        accs = run_single_elicitation(split, config, rep_seed)
        for n, a in accs.items():
            per_rep[n].append(a)
    summary = {
        n: {
            "mean": float(np.mean(v)),
            "std": float(np.std(v)),
            "per_replication": v,
        }
        for n, v in per_rep.items()
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"config": asdict(config), "replication_seeds": rep_seeds}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
        (out / "accuracy.json").write_text(json.dumps(summary, indent=2))
        with open(out / "accuracy.csv", "w") as fh:
            fh.write("n_al,mean,std\n")
            for n, s in sorted(summary.items()):
                fh.write(f"{n},{s['mean']},{s['std']}\n")
    return summary


def run_bo_experiment(config: ExperimentConfig, out_dir=None) -> dict[str, np.ndarray]:
    """BO comparison across expert accuracy levels plus the plain baseline.

    Returns arm name -> (replications, J) array of y_best curves. Baseline
    and expert arms share per-replication seeds (paired comparison)."""
    if config.benchmark is None:
        raise InputShapeError("BO experiments need a benchmark")
    benchmark = get_benchmark(config.benchmark)
    bo_cfg = config.bo_config()
    ss = np.random.SeedSequence(config.seed)
    rep_seeds = [
        int(np.random.default_rng(c).integers(0, 2**31 - 1))
        for c in ss.spawn(config.replications)
    ]
    # calibrate each target once on a reference pool
    calib_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    calib_pool = calib_rng.uniform(0, 1, size=(config.pool_points, benchmark.d))
    sigmas = {}
    for target in config.expert_targets:
        sigmas[target] = expertsim.calibrate_sigma(
            benchmark, calib_pool, target, lengthscale=config.lengthscale,
            seed=config.seed,
        )
    arms: dict[str, np.ndarray] = {}
    histories: dict[str, list[boloop.BoHistory]] = {}
    arm_specs = []
    if config.include_baseline:
        arm_specs.append(("bnn", None))
    for target in config.expert_targets:
        arm_specs.append((f"pbnn-{int(round(target * 100))}", sigmas[target]))
    for name, sigma in arm_specs:
        curves = []
        hs = []
        for rep, rep_seed in enumerate(rep_seeds):
            if sigma is None:
                h = boloop.run_algorithm1(
                    benchmark, None, 0, config.J, bo_cfg, rep_seed
                )
            else:
                draw_seed = rep_seed + 1_000_003
                factory = lambda pts, s=sigma, ds=draw_seed: expertsim.make_expert(
                    benchmark, pts, s, ds, lengthscale=config.lengthscale
                )
                h = boloop.run_algorithm1(
                    benchmark, factory, config.M, config.J, bo_cfg, rep_seed
                )
            curves.append(h.y_best_curve)
            hs.append(h)
        arms[name] = np.array(curves)
        histories[name] = hs
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "config": asdict(config),
            "replication_seeds": rep_seeds,
            "calibrated_sigmas": {str(k): v for k, v in sigmas.items()},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
        for name, hs in histories.items():
            arm_dir = out / name
            arm_dir.mkdir(exist_ok=True)
            for h in hs:
                h.save_jsonl(arm_dir / f"run_{h.seed}.jsonl")
            boloop.write_summary_csv(arm_dir / "summary.csv", hs)
        write_curves_svg(out / "curves.svg", arms)
    return arms


def write_curves_svg(path, arms: dict[str, np.ndarray]) -> None:
    """Minimal SVG line chart of mean y_best per arm."""
    width, height, pad = 640, 400, 48
    all_means = {name: c.mean(axis=0) for name, c in arms.items()}
    if not all_means:
        return
    ymin = min(m.min() for m in all_means.values())
    ymax = max(m.max() for m in all_means.values())
    span = (ymax - ymin) or 1.0
    J = max(len(m) for m in all_means.values())
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for k, (name, m) in enumerate(sorted(all_means.items())):
        pts = " ".join(
            f"{pad + (width - 2 * pad) * i / max(J - 1, 1):.1f},"
            f"{height - pad - (height - 2 * pad) * (v - ymin) / span:.1f}"
            for i, v in enumerate(m)
        )
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        parts.append(
            f'<text x="{pad}" y="{pad + 14 * k}" fill="{color}" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
