"""Command-line harness around the library."""

import json
import sys
from importlib.resources import files

import click
import numpy as np

from . import bench
from .errors import ConvergenceError, FeederParseError, FeederValidationError
from .feeder_io import emit_feeder, load_feeder, parse_feeder
from .scenario import generate_dataset, save_dataset
from .synthetic import generate_synthetic_feeder

_BUILTINS = {"t123": "data/feeder_123bus.txt"}

_HANDLED = (
    FeederParseError,
    FeederValidationError,
    ConvergenceError,
    ValueError,
    RuntimeError,
    FileNotFoundError,
    np.linalg.LinAlgError,
)


def _fail(exc) -> None:
    click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
    sys.exit(2)


def _builtin_text(name: str) -> str:
    return files("feedergp").joinpath(_BUILTINS[name]).read_text(encoding="utf-8")


def _resolve_source(feeder_path, builtin):
    if (feeder_path is None) == (builtin is None):
        raise click.UsageError("give exactly one of --feeder or --builtin")
    if builtin is not None:
        return parse_feeder(_builtin_text(builtin))
    return load_feeder(feeder_path)


@click.group()
def main():
    """Benchmark a Gaussian-process power-flow surrogate against a neural
    network and a linearized model on synthetic distribution feeders."""


@main.command("gen-feeder")
@click.option("--buses", type=int, default=25, show_default=True)
@click.option("--phase-mix", type=click.Choice(["single", "three", "mixed"]), default="mixed", show_default=True)
@click.option("--ders", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--builtin", type=click.Choice(sorted(_BUILTINS)), default=None,
              help="write a packaged feeder description instead of generating one")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def gen_feeder(buses, phase_mix, ders, seed, builtin, out):
    """Generate a random radial feeder (or dump a packaged one)."""
    try:
        if builtin is not None:
            text = _builtin_text(builtin)
        else:
            text = emit_feeder(generate_synthetic_feeder(buses, phase_mix, ders, seed))
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    except _HANDLED as exc:
        _fail(exc)


@main.command("gen-data")
@click.option("--feeder", "feeder_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--builtin", type=click.Choice(sorted(_BUILTINS)), default=None)
@click.option("--hours", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--variability", type=float, default=0.15, show_default=True)
@click.option("--load-scale", type=float, default=1.0, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), required=True)
def gen_data(feeder_path, builtin, hours, seed, variability, load_scale, out):
    """Simulate hourly net loads and solved voltages to CSV."""
    try:
        feeder = _resolve_source(feeder_path, builtin)
        ds = generate_dataset(feeder, hours, seed=seed, variability=variability, load_scale=load_scale)
        save_dataset(ds, out)
        click.echo(f"wrote {hours} hours ({ds.inputs.shape[1]} input dims) to {out}")
    except _HANDLED as exc:
        _fail(exc)


@main.command("run-case")
@click.option("--feeder", "feeder_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--builtin", type=click.Choice(sorted(_BUILTINS)), default=None)
@click.option("--case", type=int, default=1, show_default=True,
              help="1-4 (24/168/720/2160 training hours) or an explicit row count")
@click.option("--test-hours", type=int, default=144, show_default=True)
@click.option("--models", default="GP,DNN,LDF", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--variability", type=float, default=0.15, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), required=True)
def run_case_cmd(feeder_path, builtin, case, test_hours, models, seed, variability, out):
    """Train the requested models on one split and write the report set."""
    try:
        feeder = _resolve_source(feeder_path, builtin)
        model_list = tuple(m.strip() for m in models.split(",") if m.strip())
        reports = bench.run_case(
            feeder, case, test_hours=test_hours, models=model_list,
            seed=seed, outdir=out, variability=variability,
        )
        for r in reports:
            click.echo(
                f"{r.case_id} {r.model:>3}: mae={r.errors.mae:.3e} "
                f"mse={r.errors.mse:.3e} max={r.errors.max_abs_error:.3e} "
                f"train={r.train_seconds:.2f}s"
            )
        click.echo(f"outputs under {out}")
    except _HANDLED as exc:
        _fail(exc)


@main.command("run-generalization")
@click.option("--feeder", "feeder_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--builtin", type=click.Choice(sorted(_BUILTINS)), default=None)
@click.option("--train-hours", type=int, default=24, show_default=True)
@click.option("--test-hours", type=int, default=144, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--variability", type=float, default=0.15, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), required=True)
def run_generalization_cmd(feeder_path, builtin, train_hours, test_hours, seed, variability, out):
    """Short-window GP training, long held-out test; summary row to CSV."""
    try:
        feeder = _resolve_source(feeder_path, builtin)
        row = bench.run_generalization(
            feeder, train_hours=train_hours, test_hours=test_hours,
            seed=seed, outdir=out, variability=variability,
        )
        click.echo(
            f"avg_mae={row['avg_mae']:.3e} avg_mse={row['avg_mse']:.3e} "
            f"max={row['max_error']:.3e} min={row['min_error']:.3e}"
        )
        click.echo(f"outputs under {out}")
    except _HANDLED as exc:
        _fail(exc)


@main.command("emit-plots")
@click.option("--report-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--kind", type=click.Choice(bench.PLOT_KINDS), required=True)
@click.option("--hour-index", type=int, default=None)
def emit_plots(report_dir, kind, hour_index):
    """Derive tidy plot CSVs and render figures from run-case outputs."""
    try:
        written = bench.emit_plot_data(report_dir, kind, hour_index=hour_index)
        for path in written:
            click.echo(f"wrote {path}")
    except _HANDLED as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
