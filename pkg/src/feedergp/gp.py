"""Exact Gaussian-process regression with an ARD squared-exponential kernel.

One shared kernel and one Cholesky factorization serve all outputs
(per-output weight vectors, summed per-output marginal likelihood), so a
single trained model maps a net-load vector to every nodal voltage at
once. Hyperparameters maximize the marginal likelihood by bounded
quasi-Newton on log10 parameters with analytic gradients.

The kernel is k(a, b) = signal_variance * exp(-sum_d (a_d - b_d)^2 / (2 l_d)):
each ARD lengthscale divides the squared coordinate distance directly.
"""

import json
import warnings as _warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import minimize

from .normalize import Standardizer

LOG10 = np.log(10.0)
_SNAPSHOT_VERSION = 1


@dataclass
class KernelParams:
    """ARD kernel hyperparameters over the full input dimension.

    noise_variance may be zero for noise-free interpolation; everything
    else must be strictly positive.
    """

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        self.lengthscales = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if self.lengthscales.ndim != 1 or np.any(self.lengthscales <= 0):
            raise ValueError("lengthscales must be a vector of positive reals")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")


@dataclass
class GpConfig:
    """Fit configuration: optimizer bounds are in log10 space."""

    restarts: int = 0
    seed: int = 0
    lengthscale_log10_bounds: tuple = (-5.0, 10.0)
    variance_log10_bounds: tuple = (-12.0, 5.0)
    init: KernelParams | None = None
    init_noise_variance: float = 1e-2
    optimize: bool = True
    maxiter: int = 1500
    jitter_start: float = 1e-10
    jitter_max: float = 1e-4


@dataclass
class GpModel:
    x_std: Standardizer
    y_mean: np.ndarray
    train_inputs: np.ndarray
    params: KernelParams
    chol_factor: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_marginal_likelihood: float
    warnings: tuple = ()

    @property
    def n_outputs(self) -> int:
        return self.alpha.shape[1]


@dataclass
class GpPrediction:
    mean: np.ndarray
    variance: np.ndarray


def kernel_eval(a, b, params: KernelParams) -> float:
    """Kernel value for a single pair of input vectors."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"input shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] != params.lengthscales.shape[0]:
        raise ValueError(
            f"inputs have {a.shape[0]} dims, params expect {params.lengthscales.shape[0]}"
        )
    expo = float(np.sum((a - b) ** 2 / params.lengthscales))
    return float(params.signal_variance * np.exp(-0.5 * expo))


def _sqdist(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    uu = np.sum(u * u, axis=1)[:, None]
    vv = np.sum(v * v, axis=1)[None, :]
    sq = uu + vv - 2.0 * (u @ v.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def _gram(u: np.ndarray, v: np.ndarray, sig: float, self_gram: bool) -> np.ndarray:
    sq = _sqdist(u, v)
    if self_gram:
        sq = 0.5 * (sq + sq.T)
        np.fill_diagonal(sq, 0.0)
    return sig * np.exp(-0.5 * sq)


def _chol_ladder(kn: np.ndarray, start: float, maximum: float):
    """Lower Cholesky of kn (+ escalating jitter). Returns (L, jitter used)."""
    n = kn.shape[0]
    eye = np.eye(n)
    jitter = 0.0
    while True:
        try:
            return cholesky(kn + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            pass
        jitter = start if jitter == 0.0 else jitter * 10.0
        if jitter > maximum:
            raise np.linalg.LinAlgError(
                f"Cholesky failed up to maximum jitter {maximum:g}"
            )


def _lml_core(
    xd: np.ndarray,
    y: np.ndarray,
    ls: np.ndarray,
    sig: float,
    noise: float,
    jitter_start: float = 1e-10,
    jitter_max: float = 1e-4,
    want_grad: bool = True,
):
    """Summed-output marginal log likelihood and gradient in ln-parameter space.

    xd: n x d design matrix (dims already selected), y: n x n_out targets
    (centered by the caller when appropriate), ls: d positive lengthscales.
    Returns (value, grad [d ln-lengthscales, ln sig, ln noise], state).
    """
    n, n_out = y.shape
    u = xd / np.sqrt(ls) if xd.shape[1] else xd
    k = _gram(u, u, sig, self_gram=True)
    l_fac, jitter = _chol_ladder(k + noise * np.eye(n), jitter_start, jitter_max)
    alpha = solve_triangular(
        l_fac.T, solve_triangular(l_fac, y, lower=True), lower=False
    )
    logdet = float(np.sum(np.log(np.diag(l_fac))))
    quad = float(np.sum(y * alpha))
    value = -0.5 * quad - n_out * logdet - n_out * (n / 2.0) * np.log(2.0 * np.pi)
    state = {"chol": l_fac, "alpha": alpha, "jitter": jitter, "k": k}
    if not want_grad:
        return value, None, state

    kinv = solve_triangular(
        l_fac.T, solve_triangular(l_fac, np.eye(n), lower=True), lower=False
    )
    w = alpha @ alpha.T - n_out * kinv
    g = w * k
    grad_sig = 0.5 * float(g.sum())
    grad_noise = 0.5 * float(np.trace(w)) * noise
    if xd.shape[1]:
        r = g.sum(axis=1)
        grad_ls = 0.5 * ((r[:, None] * u * u).sum(axis=0) - (u * (g @ u)).sum(axis=0))
    else:
        grad_ls = np.zeros(0)
    grad = np.concatenate([grad_ls, [grad_sig, grad_noise]])
    return value, grad, state


def log_marginal_likelihood(x: np.ndarray, y: np.ndarray, params: KernelParams):
    """Marginal log likelihood of y (summed over output columns) under the
    kernel, with its gradient w.r.t. natural-log hyperparameters ordered
    [ln lengthscales..., ln signal_variance, ln noise_variance].

    x is used as given (no standardization or centering here; ``fit``
    owns preprocessing).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y row counts differ")
    if x.shape[1] != params.lengthscales.shape[0]:
        raise ValueError("x column count does not match lengthscales")
    value, grad, _ = _lml_core(
        x, y, params.lengthscales, params.signal_variance, params.noise_variance
    )
    return value, grad


def fit(x: np.ndarray, y: np.ndarray, config: GpConfig | None = None) -> GpModel:
    """Train the shared-kernel GP on raw inputs x (n x d_in) and targets
    y (n x n_out).

    Inputs are standardized per dimension and zero-variance dimensions are
    dropped from the kernel; each output column is centered. The summed
    marginal likelihood is maximized over log10 hyperparameters starting
    from lengthscale = (number of active dims) and signal variance 1, with
    optional random restarts.
    """
    config = config or GpConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("x must be a nonempty 2-d array")
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y row counts differ")
    if x.shape[0] < 2 and config.optimize:
        raise ValueError("hyperparameter optimization needs at least 2 rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in training data")

    warn_list = []
    std = Standardizer.fit(x)
    xs = std.transform(x)
    active = std.active.copy()
    d_full = x.shape[1]
    d_act = int(active.sum())
    n = x.shape[0]

    if np.unique(xs, axis=0).shape[0] < n:
        warn_list.append("duplicate training rows after standardization")

    y_mean = y.mean(axis=0)
    yc = y - y_mean
    xa = xs[:, active]

    if config.init is not None:
        if config.init.lengthscales.shape[0] != d_full:
            raise ValueError("init lengthscales length must equal input dimension")
        ls_full = config.init.lengthscales.copy()
        sig0 = config.init.signal_variance
        noise0 = config.init.noise_variance
    else:
        # unit lengthscale on inputs rescaled by 1/sqrt(d) keeps the
        # initial Gram matrix informative for any input dimension
        ls_full = np.full(d_full, float(max(d_act, 1)))
        sig0 = 1.0
        noise0 = config.init_noise_variance

    lo_l, hi_l = config.lengthscale_log10_bounds
    lo_v, hi_v = config.variance_log10_bounds

    def clip_theta(ls_a, sig, noise):
        th = np.concatenate([np.log10(ls_a), [np.log10(sig), np.log10(max(noise, 10.0**lo_v))]])
        lo = np.concatenate([np.full(d_act, lo_l), [lo_v, lo_v]])
        hi = np.concatenate([np.full(d_act, hi_l), [hi_v, hi_v]])
        return np.clip(th, lo, hi), list(zip(lo, hi))

    def unpack(theta):
        ls_a = 10.0 ** theta[:d_act]
        sig = 10.0 ** theta[d_act]
        noise = 10.0 ** theta[d_act + 1]
        return ls_a, sig, noise

    def objective(theta):
        ls_a, sig, noise = unpack(theta)
        value, grad, _ = _lml_core(
            xa, yc, ls_a, sig, noise, config.jitter_start, config.jitter_max
        )
        return -value, -grad * LOG10  # d/d(log10 t) = ln(10) * d/d(ln t)

    theta0, bounds = clip_theta(ls_full[active] if d_act else np.zeros(0), sig0, noise0)
    best_theta = theta0
    best_val, _, _ = _lml_core(
        xa, yc, *unpack(theta0), config.jitter_start, config.jitter_max, want_grad=False
    )
    init_val = best_val

    if config.optimize:
        rng = np.random.default_rng(config.seed)
        starts = [theta0]
        for _ in range(config.restarts):
            ls_r = 10.0 ** rng.uniform(-1.0, 2.0, size=d_act) * max(d_act, 1)
            sig_r = 10.0 ** rng.uniform(-1.0, 1.0)
            noise_r = 10.0 ** rng.uniform(-8.0, -1.0)
            starts.append(clip_theta(ls_r, sig_r, noise_r)[0])
        any_success = False
        for th0 in starts:
            res = minimize(
                objective,
                th0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.maxiter},
            )
            any_success = any_success or bool(res.success)
            if -res.fun > best_val:
                best_val = -res.fun
                best_theta = res.x
        if not any_success:
            warn_list.append(
                "optimizer did not report convergence on any start; using best iterate"
            )

    ls_a, sig, noise = unpack(best_theta)
    value, _, state = _lml_core(
        xa, yc, ls_a, sig, noise, config.jitter_start, config.jitter_max, want_grad=False
    )
    if value < init_val - 1e-6 * max(1.0, abs(init_val)):
        warn_list.append("final marginal likelihood below initialization value")

    ls_final = ls_full.copy()
    ls_final[active] = ls_a
    params = KernelParams(ls_final, sig, noise)
    return GpModel(
        x_std=std,
        y_mean=y_mean,
        train_inputs=xs,
        params=params,
        chol_factor=state["chol"],
        alpha=state["alpha"],
        jitter=state["jitter"],
        log_marginal_likelihood=value,
        warnings=tuple(warn_list),
    )


def predict(model: GpModel, queries: np.ndarray) -> GpPrediction:
    """Predictive mean (m x n_out, de-centered) and variance (m, shared
    across outputs) at query inputs in raw units."""
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q[None, :]
    d_full = model.train_inputs.shape[1]
    if q.shape[1] != d_full:
        raise ValueError(f"queries have {q.shape[1]} dims, model expects {d_full}")
    active = model.x_std.active
    ls_a = model.params.lengthscales[active]
    sig = model.params.signal_variance
    qa = model.x_std.transform(q)[:, active]
    xa = model.train_inputs[:, active]
    if ls_a.shape[0]:
        u = xa / np.sqrt(ls_a)
        uq = qa / np.sqrt(ls_a)
    else:
        u, uq = xa, qa
    k_star = _gram(u, uq, sig, self_gram=False)  # n x m
    mean = k_star.T @ model.alpha + model.y_mean
    v = solve_triangular(model.chol_factor, k_star, lower=True)
    var = sig - np.sum(v * v, axis=0) + model.params.noise_variance
    if np.any(var < 0):
        _warnings.warn("negative predictive variance clamped to zero", RuntimeWarning)
        var = np.maximum(var, 0.0)
    return GpPrediction(mean=mean, variance=var)


def save_gp(model: GpModel, path) -> None:
    """Snapshot to a single .npz file; load_gp reproduces predictions exactly."""
    np.savez(
        path,
        version=np.array([_SNAPSHOT_VERSION]),
        x_mean=model.x_std.mean,
        x_scale=model.x_std.scale,
        x_active=model.x_std.active,
        y_mean=model.y_mean,
        train_inputs=model.train_inputs,
        lengthscales=model.params.lengthscales,
        signal_variance=np.array([model.params.signal_variance]),
        noise_variance=np.array([model.params.noise_variance]),
        chol_factor=model.chol_factor,
        alpha=model.alpha,
        jitter=np.array([model.jitter]),
        lml=np.array([model.log_marginal_likelihood]),
        warnings=np.array([json.dumps(list(model.warnings))]),
    )


def load_gp(path) -> GpModel:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"][0])
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        std = Standardizer(
            mean=z["x_mean"], scale=z["x_scale"], active=z["x_active"].astype(bool)
        )
        params = KernelParams(
            z["lengthscales"],
            float(z["signal_variance"][0]),
            float(z["noise_variance"][0]),
        )
        return GpModel(
            x_std=std,
            y_mean=z["y_mean"],
            train_inputs=z["train_inputs"],
            params=params,
            chol_factor=z["chol_factor"],
            alpha=z["alpha"],
            jitter=float(z["jitter"][0]),
            log_marginal_likelihood=float(z["lml"][0]),
            warnings=tuple(json.loads(str(z["warnings"][0]))),
        )
