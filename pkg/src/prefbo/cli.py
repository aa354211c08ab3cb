"""Command-line entry points."""

from __future__ import annotations

import json

import click


@click.group()
def main():
    """Preference-elicitation-augmented Bayesian optimization toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
def elicit(config_path, out_dir):
    """Run a replicated elicitation-accuracy experiment from a TOML config."""
    from .harness import ExperimentConfig, run_elicitation_experiment

    cfg = ExperimentConfig.from_toml(config_path)
    summary = run_elicitation_experiment(cfg, out_dir=out_dir)
    for n, s in sorted(summary.items()):
        click.echo(f"N_AL={n}: accuracy {s['mean']:.4f} +/- {s['std']:.4f}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
def bo(config_path, out_dir):
    """Run a BO comparison experiment from a TOML config."""
    from .harness import ExperimentConfig, run_bo_experiment

    cfg = ExperimentConfig.from_toml(config_path)
    arms = run_bo_experiment(cfg, out_dir=out_dir)
    for name, curves in sorted(arms.items()):
        click.echo(f"{name}: final y_best {curves[:, -1].mean():.4f} "
                   f"+/- {curves[:, -1].std():.4f}")


@main.command()
@click.option("--benchmark", required=True)
@click.option("--accuracy", type=float, default=0.9, help="simulated expert accuracy")
@click.option("--m", "M", type=int, default=100, help="elicitation budget")
@click.option("--j", "J", type=int, default=20, help="BO acquisition budget")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", default=None, type=click.Path())
def simulate(benchmark, accuracy, M, J, seed, out_path):
    """One knowledge-augmented BO run against a calibrated simulated expert."""
    import numpy as np

    from . import boloop, expertsim
    from .bench import get_benchmark

    b = get_benchmark(benchmark)
    cfg = boloop.BoConfig()
    rng = np.random.default_rng(seed)
    calib_pool = rng.uniform(0, 1, size=(cfg.pool_points, b.d))
    sigma = expertsim.calibrate_sigma(b, calib_pool, accuracy, seed=seed)
    click.echo(f"calibrated sigma_delta = {sigma:.4f} for target accuracy {accuracy}")
    factory = lambda pts: expertsim.make_expert(b, pts, sigma, seed + 1)
    history = boloop.run_algorithm1(
        b, factory, M, J, cfg, seed,
        progress=lambda j, yb: click.echo(f"  j={j:3d}  y_best={yb:.4f}"),
    )
    click.echo(f"final y_best = {history.y_best_curve[-1]:.4f} "
               f"({history.n_evals()} true evaluations)")
    if out_path:
        history.save_jsonl(out_path)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--target", "target_column", required=True)
@click.option("--pairs", type=int, default=2000)
@click.option("--test-pairs", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--out-prefix", default="preferences")
def ingest(csv_path, target_column, pairs, test_pairs, seed, out_prefix):
    """Convert a regression CSV into train-pool and test preference CSVs."""
    from .harness import ingest_csv, to_preferences

    table = ingest_csv(csv_path, target_column)
    split = to_preferences(table, pairs, test_pairs, seed=seed)
    split.train.save_csv(f"{out_prefix}_train.csv")
    split.test.save_csv(f"{out_prefix}_test.csv")
    click.echo(
        f"{len(table.y)} rows ({table.d} features) -> "
        f"{len(split.train)} train pairs, {len(split.test)} test pairs"
    )


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--data", "data_dir", default="prefbo-sessions", type=click.Path())
def serve(port, host, data_dir):
    """Start the human-elicitation session server."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
