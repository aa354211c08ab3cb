"""Tests for data ingestion, preference conversion, and experiment runners."""

import json

import numpy as np
import pytest

from prefbo import bench, harness, netcore, pbnn, varnet
from prefbo.errors import CapacityError, InputShapeError


# ---------------------------------------------------------------- ingest_csv


def _write_csv(path, text):
    path.write_text(text)
    return path


def test_ingest_minmax_scaling(tmp_path):
    p = _write_csv(
        tmp_path / "t.csv",
        "a,b,target\n0.0,10.0,1.0\n2.0,20.0,2.0\n4.0,30.0,3.0\n",
    )
    table = harness.ingest_csv(p, "target")
    assert table.columns == ["a", "b"]
    np.testing.assert_allclose(table.X[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(table.X[:, 1], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(table.y, [1.0, 2.0, 3.0])


def test_ingest_unscale_roundtrip(tmp_path):
    p = _write_csv(
        tmp_path / "t.csv",
        "a,b,target\n-1.0,10.0,1.0\n3.0,20.0,2.0\n1.0,25.0,3.0\n",
    )
    table = harness.ingest_csv(p, "target")
    orig = np.array([[-1.0, 10.0], [3.0, 20.0], [1.0, 25.0]])
    np.testing.assert_allclose(table.unscale(table.X), orig)


def test_ingest_constant_column_warns_and_zeros(tmp_path):
    p = _write_csv(tmp_path / "t.csv", "a,b,target\n5.0,1.0,1.0\n5.0,2.0,2.0\n")
    with pytest.warns(UserWarning, match="constant"):
        table = harness.ingest_csv(p, "target")
    np.testing.assert_allclose(table.X[:, 0], [0.0, 0.0])
    np.testing.assert_allclose(table.X[:, 1], [0.0, 1.0])


def test_ingest_missing_target_column(tmp_path):
    p = _write_csv(tmp_path / "t.csv", "a,b\n1.0,2.0\n")
    with pytest.raises(InputShapeError):
        harness.ingest_csv(p, "target")


def test_ingest_rejects_missing_values(tmp_path):
    p = _write_csv(tmp_path / "t.csv", "a,target\n1.0,1.0\n,2.0\n")
    with pytest.raises(InputShapeError):
        harness.ingest_csv(p, "target")


# ------------------------------------------------------------ to_preferences


def _table(n, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 2))
    y = rng.normal(size=n)
    return harness.RegressionTable(X, y, ["x0", "x1"], np.zeros(2), np.ones(2))


def test_to_preferences_counts_and_disjoint():
    table = _table(80)
    split = harness.to_preferences(table, n_pool_pairs=100, n_test_pairs=60, seed=1)
    assert len(split.pool.pairs) == 100
    assert len(split.train) == 100
    assert len(split.test) == 60
    pool_set = {tuple(sorted(p)) for p in split.pool.pairs}
    assert len(pool_set) == 100
    # test pairs never overlap the pool
    train_rows = {(tuple(a), tuple(b)) for a, b in zip(split.train.X, split.train.Xp)}
    test_rows = {(tuple(a), tuple(b)) for a, b in zip(split.test.X, split.test.Xp)}
    assert not train_rows & test_rows


def test_to_preferences_labels_follow_targets():
    table = _table(40, seed=3)
    split = harness.to_preferences(table, n_pool_pairs=50, n_test_pairs=30, seed=2)
    y_of = {tuple(x): y for x, y in zip(table.X, table.y)}
    for a, b, lab in zip(split.train.X, split.train.Xp, split.train.y):
        assert lab == float(y_of[tuple(a)] >= y_of[tuple(b)])


def test_to_preferences_capacity_error():
    table = _table(5)  # only 10 distinct pairs
    with pytest.raises(CapacityError):
        harness.to_preferences(table, n_pool_pairs=8, n_test_pairs=8)
    with pytest.raises(CapacityError):
        harness.to_preferences(_table(1), 1, 1)


def test_to_preferences_deterministic_in_seed():
    table = _table(60)
    s1 = harness.to_preferences(table, 40, 20, seed=9)
    s2 = harness.to_preferences(table, 40, 20, seed=9)
    assert s1.pool.pairs == s2.pool.pairs
    np.testing.assert_array_equal(s1.test.y, s2.test.y)


def test_synthetic_table_matches_benchmark():
    bm = bench.get_benchmark("forrester1d")
    table = harness.synthetic_table(bm, 20, seed=4)
    assert table.X.shape == (20, 1)
    for x, y in zip(table.X, table.y):
        assert y == pytest.approx(bm.evaluate_unit(x))


# --------------------------------------------------------- holdout_accuracy


def _identity_net():
    # one linear layer: latent(x) = x, with a near-deterministic posterior
    spec = [netcore.LayerSpec(1, 1, "identity")]
    mu = np.array([1.0, 0.0])  # weight 1, bias 0
    rho = np.full(2, varnet.softplus_inv(1e-8))
    return spec, varnet.VariationalParams(mu, rho)


def test_holdout_accuracy_perfect_on_consistent_labels():
    spec, vp = _identity_net()
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(50, 1))
    Xp = rng.uniform(size=(50, 1))
    y = (X[:, 0] >= Xp[:, 0]).astype(np.float64)
    test = pbnn.PreferenceDataset(d=1, X=X, Xp=Xp, y=y)
    assert harness.holdout_accuracy(vp, spec, test, np.random.default_rng(1)) == 1.0


def test_holdout_accuracy_chance_for_uninformative_net():
    # zero weights predict p = 1/2 everywhere, siding with label 1 on every
    # pair; a balanced label set then scores exactly 1/2
    spec = [netcore.LayerSpec(1, 1, "identity")]
    vp = varnet.VariationalParams(np.zeros(2), np.full(2, varnet.softplus_inv(1e-8)))
    X = np.linspace(0, 1, 40)[:, None]
    Xp = np.linspace(1, 0, 40)[:, None]
    y = np.array([1.0, 0.0] * 20)
    test = pbnn.PreferenceDataset(d=1, X=X, Xp=Xp, y=y)
    assert harness.holdout_accuracy(vp, spec, test, np.random.default_rng(0)) == 0.5


# ------------------------------------------------------------ configuration


def test_config_from_toml(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text(
        'benchmark = "forrester1d"\nM = 7\nJ = 3\nreplications = 2\n'
        "expert_targets = [0.8]\nn_al_checkpoints = [5]\n"
    )
    cfg = harness.ExperimentConfig.from_toml(p)
    assert cfg.benchmark == "forrester1d"
    assert (cfg.M, cfg.J, cfg.replications) == (7, 3, 2)
    assert cfg.expert_targets == [0.8]
    assert cfg.alpha == 0.95  # defaults preserved


def test_config_from_toml_rejects_unknown_keys(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text('benchmark = "forrester1d"\nbogus_knob = 1\n')
    with pytest.raises(InputShapeError):
        harness.ExperimentConfig.from_toml(p)


def test_config_requires_data_source():
    cfg = harness.ExperimentConfig()
    with pytest.raises(InputShapeError):
        harness.run_elicitation_experiment(cfg)


# ------------------------------------------------------- experiment runners


def test_elicitation_experiment_smoke(tmp_path):
    cfg = harness.ExperimentConfig(
        benchmark="forrester1d",
        n_al_checkpoints=[2, 4],
        replications=2,
        pool_points=40,
        pool_pairs=30,
        test_pairs=20,
        elicit_hidden=[8],
        elicit_epochs=3,
        elicit_batch=5,
        t_bald=10,
        seed=11,
    )
    out = tmp_path / "runs"
    summary = harness.run_elicitation_experiment(cfg, out_dir=out)
    assert set(summary) == {2, 4}
    for s in summary.values():
        assert len(s["per_replication"]) == 2
        assert 0.0 <= s["mean"] <= 1.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["benchmark"] == "forrester1d"
    assert len(manifest["replication_seeds"]) == 2
    lines = (out / "accuracy.csv").read_text().splitlines()
    assert lines[0] == "n_al,mean,std"
    assert len(lines) == 3


def test_bo_experiment_baseline_smoke(tmp_path):
    cfg = harness.ExperimentConfig(
        benchmark="forrester1d",
        expert_targets=[],
        include_baseline=True,
        M=0,
        J=2,
        replications=2,
        pool_points=30,
        pool_pairs=30,
        bo_hidden=[8],
        bo_elicit_epochs=3,
        bo_epochs=3,
        t_bald=10,
        t_ei=8,
        seed=5,
    )
    out = tmp_path / "bo"
    arms = harness.run_bo_experiment(cfg, out_dir=out)
    assert set(arms) == {"bnn"}
    assert arms["bnn"].shape == (2, 2)
    # y_best curves are monotone non-increasing
    assert np.all(np.diff(arms["bnn"], axis=1) <= 1e-12)
    assert (out / "manifest.json").exists()
    assert (out / "bnn" / "summary.csv").exists()
    assert (out / "curves.svg").read_text().startswith("<svg")
    jsonls = list((out / "bnn").glob("run_*.jsonl"))
    assert len(jsonls) == 2


def test_bo_experiment_requires_benchmark():
    cfg = harness.ExperimentConfig(dataset="whatever.csv", target_column="y")
    with pytest.raises(InputShapeError):
        harness.run_bo_experiment(cfg)


def test_curves_svg_multiple_arms(tmp_path):
    arms = {
        "a": np.array([[3.0, 2.0, 1.0], [2.5, 2.0, 1.5]]),
        "b": np.array([[4.0, 3.0, 2.0], [4.5, 3.5, 2.5]]),
    }
    path = tmp_path / "c.svg"
    harness.write_curves_svg(path, arms)
    text = path.read_text()
    assert text.count("<polyline") == 2
    assert ">a</text>" in text and ">b</text>" in text
