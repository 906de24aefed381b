"""Command-line interface: run experiments, serve sessions, plot, validate data."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import QUERY_STRATEGIES, SELF_TRAINING_METHODS, CLASSIFIER_KINDS, ConfigError, ExperimentConfig
from .data import DatasetError, load_dataset, resolve_dataset
from .engine import aggregate_runs, auc, canonical_json, run_active_learning
from .plotting import render_curves_svg


@click.group()
def cli():
    """Active-learning experiment runner and live-annotation service."""


def _load_config(config_path: str | None, overrides: dict) -> ExperimentConfig:
    base: dict = {}
    if config_path:
        base = json.loads(Path(config_path).read_text())
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_json_dict(base)


def _resolve(dataset: str | None, train: str | None, test: str | None, data_dir: str | None):
    if train:
        return load_dataset(train, test)
    if dataset:
        return resolve_dataset(dataset, data_dir)
    raise click.UsageError("provide --dataset or --train/--test")


@cli.command()
@click.option("--dataset", help="dataset ref: blobs<C>[:k=v,...] or a directory with train/test.jsonl")
@click.option("--train", type=click.Path(exists=True), help="train JSONL (alternative to --dataset)")
@click.option("--test", type=click.Path(exists=True), help="test JSONL")
@click.option("--data-dir", envvar="LABELLOOP_DATA_DIR", help="base directory for dataset refs")
@click.option("--config", "config_path", type=click.Path(exists=True), help="ExperimentConfig JSON file")
@click.option("--strategy", type=click.Choice(QUERY_STRATEGIES), default=None)
@click.option("--self-training", "self_training", type=click.Choice(SELF_TRAINING_METHODS), default=None)
@click.option("--classifier", type=click.Choice(CLASSIFIER_KINDS), default=None)
@click.option("--runs", type=int, default=None, help="number of runs (distinct seeds)")
@click.option("--seed", type=int, default=None, help="base RNG seed")
@click.option("--seed-size", type=int, default=None)
@click.option("--queries", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--subsample", type=int, default=None)
@click.option("--label-noise", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--out", required=True, type=click.Path(), help="output directory")
def run(dataset, train, test, data_dir, config_path, strategy, self_training, classifier,
        runs, seed, seed_size, queries, batch_size, k, beta, subsample, label_noise,
        epochs, learning_rate, out):
    """Run simulated-oracle experiments and write curves, aggregate, and SVG."""
    ds = _resolve(dataset, train, test, data_dir)
    config = _load_config(config_path, {
        "query_strategy": strategy,
        "self_training": self_training,
        "classifier": classifier,
        "num_runs": runs,
        "rng_seed": seed,
        "seed_size": seed_size,
        "num_queries": queries,
        "batch_size": batch_size,
        "k": k,
        "beta": beta,
        "subsample_size": subsample,
        "label_noise": label_noise,
        "epochs": epochs,
        "learning_rate": learning_rate,
    })
    config.validate_for(ds)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    curves = []
    for i in range(config.num_runs):
        run_config = config.replace(rng_seed=config.rng_seed + i)
        curve = run_active_learning(ds, run_config)
        curves.append(curve)
        stem = out_dir / f"curve_seed{run_config.rng_seed}"
        stem.with_suffix(".json").write_text(canonical_json(curve.to_json_dict()))
        with open(stem.with_suffix(".csv"), "w") as handle:
            handle.write("labeled_count,score,pseudo_count\n")
            for p in curve.points:
                handle.write(f"{p.labeled_count},{p.score!r},{p.pseudo_count}\n")
        click.echo(
            f"seed {run_config.rng_seed}: final {curve.final_score():.4f} auc {auc(curve):.4f} "
            f"pseudo {[p.pseudo_count for p in curve.points]}"
        )

    aggregate = aggregate_runs(curves)
    (out_dir / "aggregate.json").write_text(canonical_json(aggregate.to_json_dict()))
    (out_dir / "curves.svg").write_text(render_curves_svg(
        curves, aggregate,
        title=f"{ds.name} · {config.query_strategy} · {config.self_training}",
    ))
    click.echo(
        f"{config.num_runs} runs: final {aggregate.final_score_mean:.4f} ± {aggregate.final_score_std:.4f} "
        f"({aggregate.metric}), auc {aggregate.auc_mean:.4f} ± {aggregate.auc_std:.4f}"
    )
    click.echo(f"wrote {out_dir}/")


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--data-dir", envvar="LABELLOOP_DATA_DIR", help="sessions and dataset directory")
def serve(host, port, data_dir):
    """Serve the live-annotation HTTP API."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")


@cli.command()
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True),
              help="directory produced by `run`")
@click.option("--out", default=None, type=click.Path(), help="output SVG path")
def plot(results_dir, out):
    """Render curve JSON files from a results directory to SVG."""
    from .engine import LearningCurve, RunAggregate

    results = Path(results_dir)
    curve_files = sorted(results.glob("curve_seed*.json"))
    if not curve_files:
        raise click.ClickException(f"no curve_seed*.json files in {results}")
    curves = [LearningCurve.from_json_dict(json.loads(p.read_text())) for p in curve_files]
    aggregate = None
    agg_path = results / "aggregate.json"
    if agg_path.exists():
        payload = json.loads(agg_path.read_text())
        aggregate = RunAggregate(**payload)
    target = Path(out) if out else results / "curves.svg"
    target.write_text(render_curves_svg(curves, aggregate, title=results.name))
    click.echo(f"wrote {target}")


@cli.command("validate-dataset")
@click.option("--train", required=True, type=click.Path(), help="train JSONL path")
@click.option("--test", type=click.Path(), default=None, help="test JSONL path")
def validate_dataset(train, test):
    """Validate JSONL dataset files and print a summary."""
    ds = load_dataset(train, test)
    labels = [inst.true_label for inst in ds.instances]
    per_class = {c: labels.count(c) for c in range(ds.num_classes)}
    click.echo(f"name: {ds.name}")
    click.echo(f"train: {len(ds.instances)}  test: {len(ds.test_instances)}")
    click.echo(f"classes: {ds.num_classes}  dim: {ds.dim}  metric: {ds.metric.value}")
    click.echo(f"per-class train counts: {per_class}")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except (ConfigError, DatasetError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
