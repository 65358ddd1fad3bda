"""Benchmark orchestration: datasets, model training, reports, figures.

A "case" trains every requested model on the same chronological split of
one generated dataset and writes a fixed-layout output directory:

    <outdir>/
      manifest.json        timings, seeds, hashes, interpretation notes
      reports.csv          one deterministic row per model (no timings)
      nodes.csv            flattening: index, bus, phase, depth
      truth.csv            test-window voltage magnitudes from the solver
      snapshot.csv         full phasor solution at the first test hour
      predictions/<M>.csv  per-model test-window predictions
      plots/*.png          rendered figures

reports.csv is byte-identical across reruns with the same seed; wall
clock goes to the manifest only.
"""

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .feeder import Feeder
from .feeder_io import load_feeder
from .gp import GpConfig, fit, predict
from .ldf import ldf_voltage_mag, solve_ldf
from .metrics import ErrorReport, compute_errors
from .mlp import MlpConfig, default_widths, predict_mlp, train_mlp
from .pf import solve_nonlinear
from .scenario import (
    CASE_TRAIN_HOURS,
    feeder_hash,
    generate_dataset,
    matrix_hash,
    split_cases,
)
from . import plots

MODELS = ("GP", "DNN", "LDF")


@dataclass
class CaseReport:
    case_id: str
    model: str
    train_size: int
    errors: ErrorReport
    train_seconds: float
    predict_seconds: float
    seed: int
    feeder_hash: str
    train_hash: str
    test_hash: str

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.train_seconds < 0 or self.predict_seconds < 0:
            raise ValueError("timings must be nonnegative")


def _resolve_feeder(source) -> Feeder:
    if isinstance(source, Feeder):
        return source
    return load_feeder(source)


def _train_predict(model_id, feeder, train, test, seed):
    """Returns (predicted test matrix, train seconds, predict seconds)."""
    if model_id == "GP":
        t0 = time.perf_counter()
        gp_model = fit(train.inputs, train.targets, GpConfig(seed=seed))
        t1 = time.perf_counter()
        pred = predict(gp_model, test.inputs).mean
        t2 = time.perf_counter()
        return pred, t1 - t0, t2 - t1
    if model_id == "DNN":
        widths = default_widths(train.inputs.shape[1], train.targets.shape[1])
        t0 = time.perf_counter()
        nn = train_mlp(train.inputs, train.targets, MlpConfig(widths=widths, seed=seed))
        t1 = time.perf_counter()
        pred = predict_mlp(nn, test.inputs)
        t2 = time.perf_counter()
        return pred, t1 - t0, t2 - t1
    if model_id == "LDF":
        # no training exists; the "training" column is cumulative solve
        # time over the training window, flagged in the manifest
        t0 = time.perf_counter()
        for row in train.inputs:
            solve_ldf(feeder, row)
        t1 = time.perf_counter()
        pred = np.empty_like(test.targets)
        for i, row in enumerate(test.inputs):
            pred[i] = ldf_voltage_mag(solve_ldf(feeder, row))
        t2 = time.perf_counter()
        return pred, t1 - t0, t2 - t1
    raise ValueError(f"unknown model {model_id!r}")


def _write_matrix_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_case_outputs(outdir, feeder, reports, train, test, predictions):
    out = Path(outdir)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(exist_ok=True)

    flat = feeder.flatten
    depths = [feeder.depth[b] for b, _ in flat]
    _write_matrix_csv(
        out / "nodes.csv",
        ["index", "bus", "phase", "depth"],
        [(i, b, p, d) for i, ((b, p), d) in enumerate(zip(flat, depths))],
    )

    _write_matrix_csv(
        out / "truth.csv",
        [f"{b}.{p}" for b, p in flat],
        [[_fmt(v) for v in row] for row in test.targets],
    )
    for model, pred in predictions.items():
        _write_matrix_csv(
            out / "predictions" / f"{model}.csv",
            [f"{b}.{p}" for b, p in flat],
            [[_fmt(v) for v in row] for row in pred],
        )

    # full phasor snapshot at the first test hour
    snap = solve_nonlinear(feeder, test.inputs[0])
    _write_matrix_csv(
        out / "snapshot.csv",
        ["bus", "phase", "v_mag", "v_ang"],
        [
            (b, p, _fmt(snap.v_mag[i]), _fmt(snap.v_ang[i]))
            for i, (b, p) in enumerate(flat)
        ],
    )

    with open(out / "reports.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["case_id", "model", "train_hours", "test_hours", "mse", "mae",
             "max_abs_error", "min_abs_error", "seed", "feeder_hash",
             "train_hash", "test_hash"]
        )
        for r in reports:
            w.writerow(
                [r.case_id, r.model, r.train_size, test.targets.shape[0],
                 _fmt(r.errors.mse), _fmt(r.errors.mae),
                 _fmt(r.errors.max_abs_error), _fmt(r.errors.min_abs_error),
                 r.seed, r.feeder_hash, r.train_hash, r.test_hash]
            )

    manifest = {
        "case_id": reports[0].case_id if reports else "",
        "seed": reports[0].seed if reports else None,
        "train_hours": int(train.targets.shape[0]),
        "test_hours": int(test.targets.shape[0]),
        "feeder_hash": feeder_hash(feeder),
        "train_inputs_hash": matrix_hash(train.inputs),
        "train_targets_hash": matrix_hash(train.targets),
        "test_inputs_hash": matrix_hash(test.inputs),
        "test_targets_hash": matrix_hash(test.targets),
        "timings_seconds": {
            r.model: {"train": r.train_seconds, "predict": r.predict_seconds}
            for r in reports
        },
        "notes": {
            "LDF": "train time is cumulative linear-model solve time over the "
                   "training window; the model itself has no training step",
            "timing": "wall clock lives here so reports.csv stays byte-stable",
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    # default figures: profile snapshot and per-model error-by-depth
    hour0 = int(test.timestamps[0])
    series = {"TRUTH": test.targets[0]}
    for model, pred in predictions.items():
        series[model] = pred[0]
    plots.voltage_profile_figure(depths, series, hour0, out / "plots" / "voltage_profile.png")
    for model, pred in predictions.items():
        err = np.abs(pred - test.targets).mean(axis=0)
        plots.per_bus_mae_figure(
            depths, [p for _, p in flat], err, model,
            out / "plots" / f"per_bus_mae_{model}.png",
        )


def run_case(
    feeder_source,
    case,
    test_hours: int = 144,
    models: tuple = MODELS,
    seed: int = 0,
    outdir=None,
    variability: float = 0.15,
) -> list:
    """Train and evaluate the requested models on one chronological split.

    ``case`` is 1-4 (training hours 24/168/720/2160) or an explicit
    training-row count. Returns CaseReports in the given model order; all
    models see identical train/test matrices (hashes recorded per row).
    """
    if not models:
        raise ValueError("models subset must be nonempty")
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise ValueError(f"unknown model ids {bad}; valid: {list(MODELS)}")
    feeder = _resolve_feeder(feeder_source)
    train_n = CASE_TRAIN_HOURS.get(case, int(case))
    if train_n < 1:
        raise ValueError(f"invalid case {case!r}")

    ds = generate_dataset(feeder, train_n + test_hours, seed=seed, variability=variability)
    train, test = split_cases(ds, case, test_hours)
    fh = feeder_hash(feeder)
    train_hash = matrix_hash(train.inputs)
    test_hash = matrix_hash(test.inputs)
    case_id = f"case{case}" if case in CASE_TRAIN_HOURS else f"train{train_n}"

    reports = []
    predictions = {}
    for m in models:
        pred, t_train, t_pred = _train_predict(m, feeder, train, test, seed)
        predictions[m] = pred
        reports.append(
            CaseReport(
                case_id=case_id,
                model=m,
                train_size=train_n,
                errors=compute_errors(pred, test.targets),
                train_seconds=t_train,
                predict_seconds=t_pred,
                seed=seed,
                feeder_hash=fh,
                train_hash=train_hash,
                test_hash=test_hash,
            )
        )

    if outdir is not None:
        _write_case_outputs(outdir, feeder, reports, train, test, predictions)
    return reports


def run_generalization(
    feeder_source,
    train_hours: int = 24,
    test_hours: int = 144,
    seed: int = 0,
    outdir=None,
    variability: float = 0.15,
) -> dict:
    """Train the GP on a short window, test on the following hours.

    Returns the summary row: average MAE/MSE and extreme errors over all
    hourly predictions.
    """
    feeder = _resolve_feeder(feeder_source)
    ds = generate_dataset(feeder, train_hours + test_hours, seed=seed, variability=variability)
    train, test = split_cases(ds, train_hours, test_hours)
    t0 = time.perf_counter()
    model = fit(train.inputs, train.targets, GpConfig(seed=seed))
    t1 = time.perf_counter()
    pred = predict(model, test.inputs).mean
    t2 = time.perf_counter()
    rep = compute_errors(pred, test.targets)
    row = {
        "train_hours": train_hours,
        "test_hours": test_hours,
        "avg_mae": rep.mae,
        "avg_mse": rep.mse,
        "max_error": rep.max_abs_error,
        "min_error": rep.min_abs_error,
        "seed": seed,
        "feeder_hash": feeder_hash(feeder),
    }
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "generalization.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["train_hours", "test_hours", "avg_mae", "avg_mse",
                        "max_error", "min_error", "seed", "feeder_hash"])
            w.writerow([row["train_hours"], row["test_hours"], _fmt(row["avg_mae"]),
                        _fmt(row["avg_mse"]), _fmt(row["max_error"]),
                        _fmt(row["min_error"]), row["seed"], row["feeder_hash"]])
        manifest = {
            "timings_seconds": {"GP": {"train": t1 - t0, "predict": t2 - t1}},
            "seed": seed,
            "feeder_hash": row["feeder_hash"],
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return row


PLOT_KINDS = ("voltage-profile-snapshot", "per-bus-mae", "time-series-3phase")


def _read_matrix_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.asarray(rows)


def _read_nodes(out):
    with open(out / "nodes.csv", newline="") as fh:
        r = csv.reader(fh)
        next(r)
        nodes = [(row[1], row[2], int(row[3])) for row in r]
    return nodes


def emit_plot_data(report_dir, kind: str, hour_index: int | None = None) -> list:
    """Derive tidy plot CSVs (plus rendered PNGs) from run_case outputs.

    Returns the list of written file paths. ``hour_index`` selects the
    test-window row for the snapshot kind (default: middle of the window).
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; valid: {list(PLOT_KINDS)}")
    out = Path(report_dir)
    if not (out / "nodes.csv").exists():
        raise FileNotFoundError(f"no run_case outputs under {out} (nodes.csv missing)")
    nodes = _read_nodes(out)
    _, truth = _read_matrix_csv(out / "truth.csv")
    pred_dir = out / "predictions"
    models = sorted(p.stem for p in pred_dir.glob("*.csv"))
    preds = {m: _read_matrix_csv(pred_dir / f"{m}.csv")[1] for m in models}
    depths = [d for _, _, d in nodes]
    written = []

    if kind == "voltage-profile-snapshot":
        h = truth.shape[0] // 2 if hour_index is None else hour_index
        if not 0 <= h < truth.shape[0]:
            raise ValueError(f"hour index {h} outside test window 0..{truth.shape[0] - 1}")
        path = out / "plotdata_voltage_profile.csv"
        header = ["bus", "phase", "depth", "hour", "truth"] + models
        rows = []
        for i, (b, p, d) in enumerate(nodes):
            rows.append([b, p, d, h, _fmt(truth[h, i])] + [_fmt(preds[m][h, i]) for m in models])
        _write_matrix_csv(path, header, rows)
        written.append(path)
        series = {"TRUTH": truth[h]}
        series.update({m: preds[m][h] for m in models})
        png = out / "plots" / "voltage_profile_snapshot.png"
        png.parent.mkdir(exist_ok=True)
        plots.voltage_profile_figure(depths, series, h, png)
        written.append(png)
    elif kind == "per-bus-mae":
        for m in models:
            err = np.abs(preds[m] - truth).mean(axis=0)
            path = out / f"plotdata_per_bus_mae_{m}.csv"
            _write_matrix_csv(
                path,
                ["bus", "phase", "depth", "mae"],
                [[b, p, d, _fmt(err[i])] for i, (b, p, d) in enumerate(nodes)],
            )
            written.append(path)
            png = out / "plots" / f"per_bus_mae_{m}.png"
            png.parent.mkdir(exist_ok=True)
            plots.per_bus_mae_figure(depths, [p for _, p, _ in nodes], err, m, png)
            written.append(png)
    else:  # time-series-3phase
        # deepest bus that carries all three phases
        by_bus = {}
        for i, (b, p, d) in enumerate(nodes):
            by_bus.setdefault(b, {"depth": d, "cols": {}})["cols"][p] = i
        three = [b for b, info in by_bus.items() if len(info["cols"]) == 3]
        if not three:
            raise ValueError("feeder has no three-phase bus for the time-series figure")
        bus = max(three, key=lambda b: by_bus[b]["depth"])
        cols = by_bus[bus]["cols"]
        hours = list(range(truth.shape[0]))
        path = out / f"plotdata_time_series_{bus}.csv"
        header = ["hour", "bus", "phase", "truth"] + models
        rows = []
        for h in hours:
            for p in "abc":
                i = cols[p]
                rows.append([h, bus, p, _fmt(truth[h, i])] + [_fmt(preds[m][h, i]) for m in models])
        _write_matrix_csv(path, header, rows)
        written.append(path)
        truth_by_phase = {p: truth[:, cols[p]] for p in "abc"}
        for m in models:
            pred_by_phase = {p: preds[m][:, cols[p]] for p in "abc"}
            png = out / "plots" / f"time_series_{bus}_{m}.png"
            png.parent.mkdir(exist_ok=True)
            plots.time_series_figure(hours, truth_by_phase, pred_by_phase, m, bus, png)
            written.append(png)
    return [str(p) for p in written]
