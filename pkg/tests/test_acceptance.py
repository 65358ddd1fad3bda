"""End-to-end acceptance runs for the benchmark claims.

Each test prints one pass/fail line with the measured quantities so the
suite output doubles as a results table. Tolerances are fixed here and
must not be loosened to make a run pass.
"""

import time

import numpy as np
import pytest

from feedergp.gp import GpConfig, fit, predict
from feedergp.ldf import ldf_voltage_mag, solve_ldf
from feedergp.metrics import compute_errors
from feedergp.mlp import MlpConfig, default_widths, predict_mlp, train_mlp
from feedergp.scenario import generate_dataset, split_cases
from feedergp.synthetic import build_feeder_123, generate_synthetic_feeder


def _report(name, ok, detail):
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    return line


def _gp_mae(train, test, seed=0):
    m = fit(train.inputs, train.targets, GpConfig(seed=seed))
    return compute_errors(predict(m, test.inputs).mean, test.targets)


def _dnn_mae(train, test, seed=0):
    cfg = MlpConfig(
        widths=default_widths(train.inputs.shape[1], train.targets.shape[1]),
        seed=seed,
    )
    m = train_mlp(train.inputs, train.targets, cfg)
    return compute_errors(predict_mlp(m, test.inputs), test.targets)


def _ldf_mae(feeder, test):
    pred = np.array([ldf_voltage_mag(solve_ldf(feeder, row)) for row in test.inputs])
    return compute_errors(pred, test.targets)


@pytest.fixture(scope="module")
def feeder_25der():
    return generate_synthetic_feeder(25, "mixed", 10, seed=7)


def test_criterion_1_small_sample_dominance(feeder_25der):
    t0 = time.time()
    ds = generate_dataset(feeder_25der, 312, seed=0)
    results = {}
    for n in (24, 168):
        train, test = split_cases(ds, n, test_hours=144)
        gp = _gp_mae(train, test).mae
        dnn = _dnn_mae(train, test).mae
        ldf = _ldf_mae(feeder_25der, test).mae
        results[n] = (gp, dnn, ldf)
    wall = time.time() - t0
    ok = wall < 120.0
    details = [f"wall={wall:.1f}s"]
    for n, (gp, dnn, ldf) in results.items():
        ok = ok and gp < ldf and gp < 0.1 * dnn and gp <= 1e-3
        details.append(
            f"n={n}: GP={gp:.3e} DNN={dnn:.3e} LDF={ldf:.3e}"
        )
    line = _report("criterion 1 (small-sample dominance)", ok, "; ".join(details))
    assert ok, line


def test_criterion_2_data_efficiency(feeder_25der):
    t0 = time.time()
    ds = generate_dataset(feeder_25der, 2304, seed=0)
    train_full, test = split_cases(ds, 2160, test_hours=144)
    gp_train = type(ds)(
        inputs=train_full.inputs[:168],
        targets=train_full.targets[:168],
        timestamps=train_full.timestamps[:168],
        seed=ds.seed,
        settings=ds.settings,
    )
    gp = _gp_mae(gp_train, test).mae
    dnn = _dnn_mae(train_full, test).mae
    wall = time.time() - t0
    ok = gp <= dnn and wall < 900.0
    line = _report(
        "criterion 2 (85% training-data reduction)",
        ok,
        f"GP@168={gp:.3e} <= DNN@2160={dnn:.3e}; wall={wall:.1f}s",
    )
    assert ok, line


def test_criterion_3_generalization_123():
    feeder = build_feeder_123()
    ds = generate_dataset(feeder, 168, seed=0)
    train, test = split_cases(ds, 24, test_hours=144)
    err = _gp_mae(train, test)
    ok = err.mae <= 5e-4 and err.max_abs_error <= 5e-3
    line = _report(
        "criterion 3 (24h-fit generalization, 123-bus)",
        ok,
        f"avg MAE={err.mae:.3e} (<=5e-4) max={err.max_abs_error:.3e} (<=5e-3)",
    )
    assert ok, line


def test_criterion_4_scalability_3000_bus():
    t0 = time.time()
    feeder = generate_synthetic_feeder(3000, "three", 0, seed=1)
    ds = generate_dataset(feeder, 168, seed=0)
    train, test = split_cases(ds, 24, test_hours=144)
    err = _gp_mae(train, test)
    wall = time.time() - t0
    ok = wall < 600.0 and err.mae <= 5e-4
    line = _report(
        "criterion 4 (3000-bus scalability)",
        ok,
        f"D={feeder.n_nodes} avg MAE={err.mae:.3e} (<=5e-4) wall={wall:.1f}s (<600)",
    )
    assert ok, line


def test_criterion_5_ldf_degradation_gp_flat():
    feeder = generate_synthetic_feeder(25, "mixed", 0, seed=3)
    scales = (0.2, 0.6, 1.0, 1.4)
    trains, tests, ldf_maes = [], [], []
    for i, scale in enumerate(scales):
        ds = generate_dataset(feeder, 168, seed=20 + i, load_scale=scale)
        train, test = split_cases(ds, 24, test_hours=144)
        trains.append(train)
        tests.append(test)
        ldf_maes.append(_ldf_mae(feeder, test).mae)
    pooled_inputs = np.concatenate([t.inputs for t in trains])
    pooled_targets = np.concatenate([t.targets for t in trains])
    model = fit(pooled_inputs, pooled_targets, GpConfig(seed=0))
    gp_maes = [
        compute_errors(predict(model, t.inputs).mean, t.targets).mae for t in tests
    ]
    monotone = all(b >= a for a, b in zip(ldf_maes, ldf_maes[1:]))
    gp_ok = all(g <= 1e-3 for g in gp_maes)
    ok = monotone and gp_ok
    line = _report(
        "criterion 5 (LDF degrades with loading, GP does not)",
        ok,
        "LDF=" + "/".join(f"{v:.2e}" for v in ldf_maes)
        + " nondecreasing; GP=" + "/".join(f"{v:.2e}" for v in gp_maes)
        + " all <=1e-3",
    )
    assert ok, line


def test_criterion_6_property_suites(tmp_path):
    from conftest import make_two_bus
    import test_gp
    import test_ldf
    import test_metrics
    import test_mlp
    import test_pf

    t0 = time.time()
    test_gp.test_kernel_gram_psd_seeded_loop()
    test_gp.test_kernel_symmetry()
    test_gp.test_noise_free_interpolation_at_training_points()
    test_gp.test_prior_reversion_far_from_data()
    test_gp.test_lml_gradient_matches_finite_differences()
    test_mlp.test_backprop_gradients_match_finite_differences()
    test_pf.test_two_bus_matches_analytic_solution(make_two_bus())
    f123 = build_feeder_123()
    test_ldf.test_linear_system_residual(f123)
    test_ldf.test_superposition(generate_synthetic_feeder(25, "mixed", 10, seed=7))
    test_metrics.test_mae_never_exceeds_rmse()

    # end-to-end determinism: identical invocations, byte-identical reports
    from feedergp.bench import run_case

    small = generate_synthetic_feeder(10, "mixed", 2, seed=6)
    a, b = tmp_path / "a", tmp_path / "b"
    run_case(small, 12, test_hours=24, seed=0, outdir=a, models=("GP", "LDF"))
    run_case(small, 12, test_hours=24, seed=0, outdir=b, models=("GP", "LDF"))
    identical = (a / "reports.csv").read_bytes() == (b / "reports.csv").read_bytes()

    wall = time.time() - t0
    ok = identical and wall < 60.0
    line = _report(
        "criterion 6 (property suites)",
        ok,
        f"kernel/GP/MLP/PF/LDF/metrics properties + byte-identical reports; wall={wall:.1f}s (<60)",
    )
    assert ok, line
