"""Command-line interface: ingest, build-dataset, train, recommend, simulate, serve."""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from . import models as mdl
from . import report as rpt
from .ingestion import ApiConfig, ingest
from .pipeline import format_report, load_library, result_to_dict, run_pipeline
from .service import ServiceState, create_app
from .simulator import default_spec, generate_history, spec_from_json


@click.group()
def cli() -> None:
    """Moment-conditioned music recommendations from a single user's history."""


@cli.command("ingest")
@click.option("--mode", type=click.Choice(["live", "offline"]), default="offline")
@click.option("--fixtures", type=click.Path(path_type=Path), default=None)
@click.option("--out", "cache_dir", type=click.Path(path_type=Path), required=True)
@click.option("--since", default=None, help="ISO instant (live mode)")
@click.option("--until", default=None, help="ISO instant (live mode)")
@click.option("--rate-limit", default=5.0, show_default=True)
def ingest_cmd(mode, fixtures, cache_dir, since, until, rate_limit) -> None:
    """Fetch scrobbles, tags and features into the local cache."""
    config = ApiConfig(
        mode=mode,
        fixtures_dir=fixtures,
        cache_dir=cache_dir,
        rate_limit_per_sec=rate_limit,
        lastfm_api_key=os.environ.get("LASTFM_API_KEY", ""),
        lastfm_user=os.environ.get("LASTFM_USER", ""),
        spotify_client_id=os.environ.get("SPOTIFY_CLIENT_ID", ""),
        spotify_client_secret=os.environ.get("SPOTIFY_CLIENT_SECRET", ""),
    )
    kwargs = {}
    if since:
        kwargs["since"] = int(datetime.fromisoformat(since).replace(tzinfo=timezone.utc).timestamp())
    if until:
        kwargs["until"] = int(datetime.fromisoformat(until).replace(tzinfo=timezone.utc).timestamp())
    report = ingest(config, **kwargs)
    click.echo(json.dumps(report.as_dict(), indent=2))


@cli.command("build-dataset")
@click.option("--cache", "cache_dir", type=click.Path(path_type=Path), required=True)
@click.option("--k", default=1000, show_default=True)
@click.option("--tz-offset", default=0, show_default=True, help="minutes")
@click.option("--target", default="danceability", show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def build_dataset_cmd(cache_dir, k, tz_offset, target, out_dir, figures) -> None:
    """Build the musical-moments dataset and write the two CSV files."""
    dataset = ds.build_dataset(cache_dir, k=k, tz_offset_minutes=tz_offset, target_feature=target)
    tags_path, features_path = ds.write_dataset(dataset, out_dir)
    click.echo(f"{len(dataset)} moments, vocabulary {len(dataset.vocabulary)} tags")
    click.echo(f"wrote {tags_path} and {features_path}")
    if figures:
        for path in rpt.render_dataset_figures(dataset, out_dir):
            click.echo(f"wrote {path}")


@cli.command("train")
@click.option("--dataset", "dataset_dir", type=click.Path(path_type=Path), required=True)
@click.option("--model", "kind", type=click.Choice(["baseline", "ridge", "gbt"]), default="gbt")
@click.option("--target", default="danceability", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--train-fraction", default=0.67, show_default=True)
@click.option("--rounds", default=200, show_default=True)
@click.option("--depth", default=4, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--lam", default=1.0, show_default=True)
@click.option("--out", "model_path", type=click.Path(path_type=Path), required=True)
@click.option("--report-dir", type=click.Path(path_type=Path), default=None)
def train_cmd(
    dataset_dir, kind, target, seed, train_fraction, rounds, depth,
    learning_rate, lam, model_path, report_dir,
) -> None:
    """Train a regressor and print its RMSE table row."""
    dataset = ds.read_dataset(dataset_dir, target_feature=target)
    train, test = ds.split_dataset(dataset, train_fraction=train_fraction, seed=seed)
    X_train, y_train = ds.to_matrices(train, target)
    if kind == "baseline":
        model = mdl.train_baseline(y_train, seed=seed, target_feature=target)
    elif kind == "ridge":
        model = mdl.train_ridge(X_train, y_train, lam=lam, target_feature=target)
    else:
        model = mdl.train_gbt(
            X_train, y_train, rounds=rounds, depth=depth,
            learning_rate=learning_rate, seed=seed, target_feature=target,
        )
    mdl.save_model(model, model_path)

    click.echo(f"{'Model':<10} {'RMSE':<8} {'Seconds'}")
    if test:
        X_test, y_test = ds.to_matrices(test, target)
        test_rmse = mdl.evaluate_rmse(model, X_test, y_test)
        click.echo(f"{kind:<10} {test_rmse:<8.4f} {model.train_seconds:.1f}")
        if report_dir is not None:
            predictions = model.predict(X_test)
            for path in rpt.render_training_report(model, y_test, predictions, test_rmse, report_dir):
                click.echo(f"wrote {path}")
    else:
        click.echo(f"{kind:<10} {model.train_rmse:<8.4f} {model.train_seconds:.1f} (train)")
    click.echo(f"saved model to {model_path}")


@cli.command("recommend")
@click.option("--hour", type=int, required=True)
@click.option("--k", default=20, show_default=True)
@click.option("--epsilon", default=0.0, show_default=True)
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True)
@click.option("--dataset", "dataset_dir", type=click.Path(path_type=Path), required=True)
@click.option("--library", "library_dir", type=click.Path(path_type=Path), required=True,
              help="ingested cache directory holding the candidate tracks")
@click.option("--json", "as_json", is_flag=True, default=False)
def recommend_cmd(hour, k, epsilon, model_path, dataset_dir, library_dir, as_json) -> None:
    """Run the four-phase pipeline and print the phase report."""
    dataset = ds.read_dataset(dataset_dir)
    model = mdl.load_model(model_path)
    library = load_library(library_dir)
    result = run_pipeline(dataset, model, library, hour=hour, k=k, epsilon=epsilon)
    if as_json:
        click.echo(json.dumps(result_to_dict(result), indent=2))
    else:
        click.echo(format_report(result))


@cli.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(path_type=Path), default=None,
              help="listener spec JSON; omitted = built-in default spec")
@click.option("--seed", default=7, show_default=True)
@click.option("--plays", default=60000, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def simulate_cmd(spec_path, seed, plays, out_dir) -> None:
    """Generate a synthetic listening history as offline fixtures."""
    spec = spec_from_json(spec_path) if spec_path else default_spec(seed=seed, plays_total=plays)
    stats = generate_history(spec, out_dir)
    click.echo(json.dumps(stats))


@cli.command("serve")
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True)
@click.option("--dataset", "dataset_dir", type=click.Path(path_type=Path), required=True)
@click.option("--library", "library_dir", type=click.Path(path_type=Path), required=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--static", "static_dir", type=click.Path(path_type=Path), default=None)
@click.option("--feedback-log", type=click.Path(path_type=Path), default=Path("feedback.jsonl"))
def serve_cmd(model_path, dataset_dir, library_dir, port, static_dir, feedback_log) -> None:
    """Serve the pipeline over HTTP (plus the web UI if --static is given)."""
    import uvicorn

    state = ServiceState(
        dataset=ds.read_dataset(dataset_dir),
        model=mdl.load_model(model_path),
        library=load_library(library_dir),
        feedback_path=Path(feedback_log),
    )
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host="0.0.0.0", port=port)


if __name__ == "__main__":
    cli()
