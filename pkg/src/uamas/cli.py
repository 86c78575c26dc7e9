"""Batch entry points: data checks, feature cache, training, evaluation, serving."""

from __future__ import annotations

import socket
import sys
from pathlib import Path

import click

from .agents import MonitorConfig, MonitorSystem
from .bnn import load_model, save_model
from .config import ConfigError, Settings, load_settings
from .dataset import (
    ALL_TASKS,
    CHANNELS,
    LABEL_FILE,
    Task,
    load_dataset,
    task_specs_from_cycles,
)
from .errors import UamasError
from .evaluation import (
    make_folds,
    run_experiment,
    train_full_model,
    write_reports,
)
from .features import extract_many, load_feature_cache, save_feature_cache
from .synth import write_dataset
from .training import REFERENCE_EPOCHS, TrainConfig

EXIT_GATE_FAILED = 1
EXIT_MISSING_DATA = 2

TASK_CHOICES = [t.value for t in ALL_TASKS] + ["all"]


def _tasks_from_option(task: str) -> list[Task]:
    return list(ALL_TASKS) if task == "all" else [Task(task)]


def _settings(config: str | None, **flag_overrides) -> Settings:
    try:
        settings = load_settings(config)
    except (ConfigError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    for key, value in flag_overrides.items():
        if value is not None:
            setattr(settings, key, value)
    return settings


def _banner(settings: Settings, command: str, extra: dict | None = None) -> None:
    """Echo the effective configuration; a run is reproducible from this."""
    click.echo(f"# uamas {command} -- effective config", err=True)
    for line in settings.as_banner().splitlines():
        click.echo(f"# {line}", err=True)
    for key, value in (extra or {}).items():
        click.echo(f"# {key}={value}", err=True)


def _load_cycles(settings: Settings):
    try:
        return load_dataset(settings.dataset_root)
    except UamasError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MISSING_DATA)


def _load_or_extract_features(cycles, cache: str | None):
    if cache:
        path = Path(cache)
        if path.is_file():
            matrix = load_feature_cache(path)
            if matrix.shape[0] == len(cycles):
                return matrix
            click.echo("# feature cache size mismatch, re-extracting", err=True)
        matrix = extract_many(cycles)
        save_feature_cache(path, matrix)
        return matrix
    return extract_many(cycles)


@click.group()
def main():
    """Uncertainty-aware condition monitoring for a hydraulic rig."""


@main.command("check-data")
@click.option("--dataset-root", default=None, help="Directory with sensor files + profile.txt.")
@click.option("--config", default=None, type=click.Path(exists=True))
def check_data(dataset_root, config):
    """Validate the dataset layout and print its label profile."""
    settings = _settings(config, dataset_root=dataset_root)
    _banner(settings, "check-data")
    root = Path(settings.dataset_root)
    missing = [f"{c.id}.txt" for c in CHANNELS if not (root / f"{c.id}.txt").is_file()]
    if not (root / LABEL_FILE).is_file():
        missing.append(LABEL_FILE)
    if missing:
        click.echo(f"error: missing files under {root}: {', '.join(missing)}", err=True)
        sys.exit(EXIT_MISSING_DATA)
    cycles = _load_cycles(settings)
    specs = task_specs_from_cycles(cycles)
    click.echo(f"cycles: {len(cycles)}")
    click.echo(f"channels: {len(CHANNELS)} x 60 samples at 1 Hz after resampling")
    for task in ALL_TASKS:
        spec = specs[task]
        counts = {}
        for cycle in cycles:
            counts[cycle.labels[task]] = counts.get(cycle.labels[task], 0) + 1
        dist = ", ".join(f"{v}: {counts[v]}" for v in spec.classes)
        click.echo(f"{task.value}: {spec.num_classes} classes ({dist})")


@main.command("make-data")
@click.option("--out", required=True, type=click.Path())
@click.option("--cycles", default=2205, show_default=True)
@click.option("--seed", default=0, show_default=True)
def make_data(out, cycles, seed):
    """Generate the synthetic surrogate dataset (same file format)."""
    root = write_dataset(out, cycles, seed)
    click.echo(f"wrote {cycles} cycles to {root}")


@main.command("features")
@click.option("--dataset-root", default=None)
@click.option("--out", default="features.npz", show_default=True, type=click.Path())
@click.option("--config", default=None, type=click.Path(exists=True))
def features_cmd(dataset_root, out, config):
    """Extract the per-cycle feature matrix and cache it."""
    settings = _settings(config, dataset_root=dataset_root)
    _banner(settings, "features", {"out": out})
    cycles = _load_cycles(settings)
    matrix = extract_many(cycles)
    save_feature_cache(out, matrix)
    click.echo(f"wrote {matrix.shape[0]}x{matrix.shape[1]} feature matrix to {out}")


@main.command("train")
@click.option("--task", type=click.Choice(TASK_CHOICES), default="all", show_default=True)
@click.option("--dataset-root", default=None)
@click.option("--models-dir", default=None)
@click.option("--epochs", default=None, type=int, help=f"Default {REFERENCE_EPOCHS} (reference).")
@click.option("--seed", default=None, type=int)
@click.option("--features-cache", default=None, type=click.Path())
@click.option("--config", default=None, type=click.Path(exists=True))
def train_cmd(task, dataset_root, models_dir, epochs, seed, features_cache, config):
    """Train deployable per-task models on the full dataset."""
    settings = _settings(config, dataset_root=dataset_root, models_dir=models_dir,
                         epochs=epochs, seed=seed)
    _banner(settings, "train", {"task": task})
    cycles = _load_cycles(settings)
    features = _load_or_extract_features(cycles, features_cache)
    out_dir = Path(settings.models_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_config = TrainConfig(
        epochs=settings.epochs if settings.epochs is not None else REFERENCE_EPOCHS,
        seed=settings.seed,
    )
    for t in _tasks_from_option(task):
        click.echo(f"training {t.value} ({train_config.epochs} epochs)...", err=True)
        bundle = train_full_model(cycles, t, train_config, features=features)
        path = out_dir / f"{t.value}.npz"
        save_model(path, bundle)
        click.echo(f"saved {path}")


@main.command("evaluate")
@click.option("--task", type=click.Choice(TASK_CHOICES), default="all", show_default=True)
@click.option("--dataset-root", default=None)
@click.option("--out", "out_dir", default=None, help="Report output directory.")
@click.option("--seed", default=None, type=int)
@click.option("--epochs", default=None, type=int)
@click.option("--k", default=5, show_default=True)
@click.option("--mc-samples", default=None, type=int)
@click.option("--threshold", default=None, type=float)
@click.option("--stratify", is_flag=True,
              help="Stratify folds on each task's labels (sensitivity run).")
@click.option("--features-cache", default=None, type=click.Path())
@click.option("--config", default=None, type=click.Path(exists=True))
def evaluate(task, dataset_root, out_dir, seed, epochs, k, mc_samples, threshold,
             stratify, features_cache, config):
    """k-fold cross-validated reproduction; exit 0 iff ordering gates pass.

    The gate is the certainty-ordering property P(accurate|certain) >
    P(accurate|uncertain) per task, not the absolute metric values.
    """
    settings = _settings(config, dataset_root=dataset_root, out_dir=out_dir,
                         seed=seed, epochs=epochs, mc_samples=mc_samples,
                         threshold=threshold)
    effective_epochs = settings.epochs if settings.epochs is not None else REFERENCE_EPOCHS
    _banner(settings, "evaluate", {"task": task, "k": k, "stratify": stratify,
                                   "effective_epochs": effective_epochs})
    cycles = _load_cycles(settings)
    features = _load_or_extract_features(cycles, features_cache)
    train_config = TrainConfig(epochs=effective_epochs, seed=settings.seed)
    fold_plan = make_folds(len(cycles), k, settings.seed)

    reports = []
    for t in _tasks_from_option(task):
        task_plan = fold_plan
        if stratify:
            task_plan = make_folds(
                len(cycles), k, settings.seed,
                stratify_labels=[c.labels[t] for c in cycles],
            )
        report, _ = run_experiment(
            cycles, t, train_config, task_plan,
            T=settings.mc_samples, threshold=settings.threshold_for(t),
            features=features,
        )
        reports.append(report)
        flag = "" if report.reference_protocol else "  [non-reproduction config]"
        click.echo(
            f"{t.value}: F1 {report.f1_mean:.4f} +/- {report.f1_std:.4f}  "
            f"P(acc|certain) {_fmt(report.pac_mean)} +/- {_fmt(report.pac_std)}  "
            f"P(acc|uncertain) {_fmt(report.pau_mean)} +/- {_fmt(report.pau_std)}  "
            f"certain {report.n_certain}/{report.n_certain + report.n_uncertain}{flag}"
        )

    json_path, csv_path = write_reports(reports, settings.out_dir)
    click.echo(f"reports: {json_path}, {csv_path}", err=True)

    failed = [r.task.value for r in reports if r.ordering_holds() is False]
    vacuous = [r.task.value for r in reports if r.ordering_holds() is None]
    if vacuous:
        click.echo(f"# ordering gate vacuous (one branch empty): {vacuous}", err=True)
    if failed:
        click.echo(f"ordering gate FAILED for: {failed}", err=True)
        sys.exit(EXIT_GATE_FAILED)
    click.echo("ordering gates passed", err=True)


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _build_monitor(settings: Settings, max_cycles=None) -> MonitorSystem:
    cycles = _load_cycles(settings)
    specs = task_specs_from_cycles(cycles)
    monitor = MonitorSystem(
        cycles,
        specs,
        MonitorConfig(
            speed=settings.speed,
            loop=settings.loop,
            threshold=settings.threshold,
            mc_samples=settings.mc_samples,
            trace_path=settings.trace_path,
        ),
    ).build()
    for task_name, value in settings.task_thresholds.items():
        monitor.set_threshold(Task(task_name), value)
    return monitor


def _deploy_models(monitor: MonitorSystem, settings: Settings, train_first: bool) -> list[Task]:
    models_dir = Path(settings.models_dir)
    deployed = []
    for task in ALL_TASKS:
        path = models_dir / f"{task.value}.npz"
        if path.is_file():
            monitor.deploy(task, load_model(path))
            deployed.append(task)
        elif train_first:
            click.echo(f"training missing model for {task.value}...", err=True)
            epochs = settings.epochs if settings.epochs is not None else 35
            bundle = train_full_model(
                monitor.cycles, task, TrainConfig(epochs=epochs, seed=settings.seed)
            )
            models_dir.mkdir(parents=True, exist_ok=True)
            save_model(path, bundle)
            monitor.deploy(task, bundle)
            deployed.append(task)
    return deployed


def _check_port(host: str, port: int) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        try:
            sock.bind((host, port))
        except OSError as exc:
            raise click.ClickException(f"cannot bind {host}:{port}: {exc}")


def _serve(monitor: MonitorSystem, settings: Settings) -> None:
    import uvicorn

    from .service import create_app

    static_dir = settings.static_dir
    if static_dir is None and Path("frontend/dist").is_dir():
        static_dir = "frontend/dist"  # built dashboard, if present
    if static_dir:
        click.echo(f"serving dashboard from {static_dir}", err=True)
    app = create_app(monitor, static_dir=static_dir)
    _check_port(settings.host, settings.port)
    try:
        uvicorn.run(app, host=settings.host, port=settings.port, log_level="warning")
    finally:
        monitor.shutdown()  # drains agents, ends the trace with its marker


@main.command("serve")
@click.option("--dataset-root", default=None)
@click.option("--models-dir", default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--speed", default=None, type=float)
@click.option("--trace-path", default=None)
@click.option("--static-dir", default=None)
@click.option("--train-first", is_flag=True, help="Train any missing task models first.")
@click.option("--config", default=None, type=click.Path(exists=True))
def serve(dataset_root, models_dir, host, port, speed, trace_path, static_dir,
          train_first, config):
    """Run the control service; replay is started via POST /api/replay."""
    settings = _settings(config, dataset_root=dataset_root, models_dir=models_dir,
                         host=host, port=port, speed=speed, trace_path=trace_path,
                         static_dir=static_dir)
    _banner(settings, "serve")
    monitor = _build_monitor(settings)
    deployed = _deploy_models(monitor, settings, train_first)
    click.echo(f"deployed models: {[t.value for t in deployed]}", err=True)
    _serve(monitor, settings)


@main.command("replay-demo")
@click.option("--dataset-root", default=None)
@click.option("--models-dir", default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--speed", default=None, type=float, help="60 = one cycle per second.")
@click.option("--max-cycles", default=None, type=int)
@click.option("--loop/--no-loop", default=None)
@click.option("--trace-path", default=None)
@click.option("--static-dir", default=None)
@click.option("--train-first", is_flag=True)
@click.option("--config", default=None, type=click.Path(exists=True))
def replay_demo(dataset_root, models_dir, host, port, speed, max_cycles, loop,
                trace_path, static_dir, train_first, config):
    """Wire the full agent graph, deploy models, start replay + service."""
    settings = _settings(config, dataset_root=dataset_root, models_dir=models_dir,
                         host=host, port=port, speed=speed, trace_path=trace_path,
                         static_dir=static_dir, loop=loop)
    _banner(settings, "replay-demo", {"max_cycles": max_cycles})
    monitor = _build_monitor(settings)
    deployed = _deploy_models(monitor, settings, train_first)
    if not deployed:
        raise click.ClickException(
            f"no model files under {settings.models_dir}; run 'uamas train' "
            "or pass --train-first"
        )
    click.echo(f"deployed models: {[t.value for t in deployed]}", err=True)
    monitor.start_replay(max_cycles=max_cycles)
    _serve(monitor, settings)


if __name__ == "__main__":
    main()
