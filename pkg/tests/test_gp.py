import numpy as np
import pytest

from feedergp.gp import (
    GpConfig,
    KernelParams,
    fit,
    kernel_eval,
    load_gp,
    log_marginal_likelihood,
    predict,
    save_gp,
)


def _params(ls, sig=1.0, noise=1e-4):
    return KernelParams(
        lengthscales=np.atleast_1d(np.asarray(ls, dtype=float)),
        signal_variance=sig,
        noise_variance=noise,
    )


# ---------------------------------------------------------------- kernel


def test_kernel_zero_distance_gives_signal_variance():
    p = _params([1.5, 0.7], sig=2.3)
    a = np.array([0.4, -1.2])
    assert kernel_eval(a, a, p) == pytest.approx(2.3, abs=1e-15)


def test_kernel_pinned_value():
    # unit signal variance, one dimension, lengthscale 2, distance sqrt(2):
    # exp(-2/(2*2)) = exp(-0.5)
    p = _params([2.0], sig=1.0)
    v = kernel_eval(np.array([0.0]), np.array([np.sqrt(2.0)]), p)
    assert v == pytest.approx(0.6065306597126334, abs=1e-9)


def test_kernel_symmetry():
    rng = np.random.default_rng(0)
    p = _params(rng.uniform(0.5, 3.0, size=4), sig=1.7)
    for _ in range(25):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        assert kernel_eval(a, b, p) == kernel_eval(b, a, p)


def test_kernel_monotone_decreasing_in_distance():
    p = _params([1.0])
    vals = [kernel_eval(np.zeros(1), np.array([t]), p) for t in np.linspace(0, 4, 9)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_kernel_gram_psd_seeded_loop():
    rng = np.random.default_rng(7)
    for trial in range(8):
        n, d = 30, int(rng.integers(1, 6))
        x = rng.normal(size=(n, d)) * rng.uniform(0.5, 2.0)
        p = _params(rng.uniform(0.3, 3.0, size=d), sig=float(rng.uniform(0.5, 2.0)))
        gram = np.array([[kernel_eval(a, b, p) for b in x] for a in x])
        assert np.allclose(gram, gram.T, atol=1e-12)
        eig = np.linalg.eigvalsh(gram)
        assert eig.min() >= -1e-8


def test_kernel_dimension_mismatch_rejected():
    p = _params([1.0, 1.0])
    with pytest.raises(ValueError):
        kernel_eval(np.zeros(3), np.zeros(3), p)


def test_kernel_params_validation():
    with pytest.raises(ValueError):
        _params([-1.0])
    with pytest.raises(ValueError):
        _params([1.0], sig=0.0)
    with pytest.raises(ValueError):
        _params([1.0], noise=-1e-9)


# ------------------------------------------------- marginal likelihood


def test_lml_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(10, 3))
    y = rng.normal(size=(10, 2))
    theta0 = np.log(np.array([0.8, 1.3, 0.6, 1.1, 0.05]))

    def value(theta):
        p = _params(np.exp(theta[:3]), sig=np.exp(theta[3]), noise=np.exp(theta[4]))
        v, _ = log_marginal_likelihood(x, y, p)
        return v

    _, grad = log_marginal_likelihood(
        x, y, _params(np.exp(theta0[:3]), np.exp(theta0[3]), np.exp(theta0[4]))
    )
    h = 1e-5
    for k in range(5):
        e = np.zeros(5)
        e[k] = h
        fd = (value(theta0 + e) - value(theta0 - e)) / (2 * h)
        rel = abs(fd - grad[k]) / max(abs(fd), 1e-12)
        assert rel < 1e-4, f"component {k}: fd {fd} vs analytic {grad[k]}"


def test_lml_noise_only_limit():
    # vanishing signal variance with centered targets leaves the pure
    # noise model: -0.5 * sum(y^2)/noise - 0.5*n*log(2*pi*noise) per output
    rng = np.random.default_rng(2)
    y = rng.normal(size=(12, 1))
    y = y - y.mean()
    x = rng.normal(size=(12, 2))
    noise = 0.7
    v, _ = log_marginal_likelihood(x, y, _params([1.0, 1.0], sig=1e-14, noise=noise))
    expected = -0.5 * float((y * y).sum()) / noise - 0.5 * 12 * np.log(2 * np.pi * noise)
    assert v == pytest.approx(expected, rel=1e-6)


def test_lml_decreases_when_doubling_tuned_lengthscales():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(30, 2))
    y = np.sin(x[:, :1]) + 0.05 * rng.normal(size=(30, 1))
    m = fit(x, y, GpConfig(seed=0))
    tuned = m.params
    v_opt, _ = log_marginal_likelihood(
        m.x_std.transform(np.asarray(x, dtype=float)), y - m.y_mean, tuned
    )
    doubled = KernelParams(
        lengthscales=tuned.lengthscales * 2.0,
        signal_variance=tuned.signal_variance,
        noise_variance=tuned.noise_variance,
    )
    v_dbl, _ = log_marginal_likelihood(
        m.x_std.transform(np.asarray(x, dtype=float)), y - m.y_mean, doubled
    )
    assert v_dbl <= v_opt + 1e-6


# ------------------------------------------------------------ fit/predict


def test_single_point_interpolation():
    x = np.array([[0.3, -0.2]])
    y = np.array([[1.7]])
    m = fit(x, y, GpConfig(optimize=False, init=_params([1.0, 1.0], noise=0.0)))
    pred = predict(m, x)
    assert pred.mean[0, 0] == pytest.approx(1.7, abs=1e-10)


def test_noise_free_interpolation_at_training_points():
    rng = np.random.default_rng(4)
    x = rng.uniform(-2, 2, size=(20, 2))
    y = np.column_stack([np.sin(x[:, 0]), x[:, 1] ** 2])
    m = fit(x, y, GpConfig(optimize=False, init=_params([1.0, 1.0], noise=0.0)))
    assert m.jitter <= 1e-6
    pred = predict(m, x)
    assert np.abs(pred.mean - y).max() < 1e-6


def test_prior_reversion_far_from_data():
    x = np.zeros((5, 2))
    x[:, 0] = np.linspace(-1, 1, 5)
    y = np.linspace(0.0, 2.0, 5).reshape(-1, 1)
    p = _params([1.0, 1.0], sig=1.4, noise=0.01)
    m = fit(x, y, GpConfig(optimize=False, init=p))
    far = np.array([[400.0, -300.0]])
    pred = predict(m, far)
    assert pred.mean[0, 0] == pytest.approx(float(y.mean()), abs=1e-6)
    assert pred.variance[0] == pytest.approx(1.4 + 0.01, abs=1e-6)


def test_hyperparameter_recovery_from_gp_sample():
    # draw targets from a known prior and check the optimizer lands near
    # the generating hyperparameters in log-space
    rng = np.random.default_rng(12)
    n, d = 50, 2
    x = rng.uniform(-2, 2, size=(n, d))
    true = _params([1.0, 1.0], sig=1.0, noise=1e-4)
    gram = np.array([[kernel_eval(a, b, true) for b in x] for a in x])
    gram += 1e-4 * np.eye(n)
    chol = np.linalg.cholesky(gram + 1e-12 * np.eye(n))
    y = (chol @ rng.normal(size=(n, 1)))
    m = fit(x, y, GpConfig(seed=0, restarts=2))
    # the fit standardizes inputs, so compare lengthscales in that space
    ls_std = m.params.lengthscales[m.x_std.active]
    true_std = (1.0 / m.x_std.scale[m.x_std.active]) ** 2  # unit lengthscale, squared-form
    assert np.all(np.abs(np.log(ls_std) - np.log(true_std)) < 1.0)
    assert abs(np.log(m.params.signal_variance) - np.log(1.0)) < 1.0


def test_mimo_outputs_match_independent_fits():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, size=(15, 2))
    y = np.column_stack([np.sin(2 * x[:, 0]), np.cos(x[:, 1]), x.sum(axis=1)])
    shared = _params([0.8, 1.2], sig=1.1, noise=1e-3)
    cfg = GpConfig(optimize=False, init=shared)
    m_all = fit(x, y, cfg)
    q = rng.uniform(-1, 1, size=(7, 2))
    pred_all = predict(m_all, q)
    for j in range(3):
        m_j = fit(x, y[:, j : j + 1], cfg)
        pred_j = predict(m_j, q)
        assert np.abs(pred_all.mean[:, j] - pred_j.mean[:, 0]).max() < 1e-12
        assert np.abs(pred_all.variance - pred_j.variance).max() < 1e-12


def test_fit_prunes_constant_input_dimensions():
    rng = np.random.default_rng(8)
    x = rng.uniform(-1, 1, size=(25, 3))
    x[:, 1] = 4.2  # dead dimension
    y = np.sin(x[:, :1] * 2)
    m = fit(x, y, GpConfig(seed=0))
    assert list(m.x_std.active) == [True, False, True]
    # queries that disagree on the dead dimension predict identically
    qa = np.array([[0.2, 4.2, -0.1]])
    qb = np.array([[0.2, 99.0, -0.1]])
    assert predict(m, qa).mean == pytest.approx(predict(m, qb).mean)


def test_duplicate_training_rows_warn():
    x = np.ones((6, 2))
    y = np.ones((6, 1))
    m = fit(x, y, GpConfig(seed=0, maxiter=30))
    assert any("duplicate" in w for w in m.warnings)


def test_optimized_fit_beats_init_likelihood():
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 2, size=(30, 2))
    y = np.sin(x[:, :1] * 1.5) + 0.02 * rng.normal(size=(30, 1))
    init_cfg = GpConfig(optimize=False)
    opt_cfg = GpConfig(seed=0)
    assert fit(x, y, opt_cfg).log_marginal_likelihood >= fit(x, y, init_cfg).log_marginal_likelihood


def test_predict_variance_nonnegative_and_shrinks_near_data():
    rng = np.random.default_rng(14)
    x = rng.uniform(-1, 1, size=(30, 2))
    y = np.sin(x[:, :1])
    m = fit(x, y, GpConfig(seed=0))
    at_data = predict(m, x[:3])
    far = predict(m, np.full((1, 2), 50.0))
    assert at_data.variance.min() >= 0.0
    assert far.variance[0] > at_data.variance.max()


def test_persistence_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    x = rng.uniform(-1, 1, size=(12, 3))
    y = np.column_stack([x[:, 0] ** 2, np.sin(x[:, 1])])
    m = fit(x, y, GpConfig(seed=0, maxiter=60))
    path = tmp_path / "model.npz"
    save_gp(m, path)
    m2 = load_gp(path)
    q = rng.uniform(-1, 1, size=(5, 3))
    a, b = predict(m, q), predict(m2, q)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.variance, b.variance)
    assert m2.params.lengthscales == pytest.approx(m.params.lengthscales)


def test_shape_validation():
    with pytest.raises(ValueError):
        fit(np.zeros((4, 2)), np.zeros((5, 1)), GpConfig())
    m = fit(np.random.default_rng(0).normal(size=(5, 2)), np.zeros((5, 1)),
            GpConfig(optimize=False))
    with pytest.raises(ValueError):
        predict(m, np.zeros((3, 4)))
