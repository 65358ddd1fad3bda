"""From-scratch fully connected network used as the learned baseline.

Three dense layers (widths in, in, out, out by default), exact-erf GELU
activations on the hidden layers, mean-squared-error loss, adaptive
moment estimation with decoupled weight decay, and Gaussian input noise
during training. Everything runs on numpy float64; backpropagation is
hand-written and checked against finite differences in the test suite.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .normalize import Standardizer

_SNAPSHOT_VERSION = 1
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass
class MlpConfig:
    widths: tuple
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 400
    weight_decay: float = 1e-4
    input_noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2 or any(w <= 0 for w in self.widths):
            raise ValueError("widths must be at least (input, output) and positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be at least 1")


def default_widths(d_in: int, d_out: int) -> tuple:
    """Two hidden layers: input-width then output-width."""
    return (d_in, d_in, d_out, d_out)


@dataclass
class MlpModel:
    weights: list
    biases: list
    x_std: Standardizer
    y_std: Standardizer
    config: MlpConfig
    history: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    phi = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * phi


def init_params(widths: tuple, rng: np.random.Generator):
    """Scaled-uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights: list, biases: list, x: np.ndarray) -> np.ndarray:
    """Plain forward pass; GELU on every layer except the last."""
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == last else _gelu(z)
    return h


def loss_and_grads(weights: list, biases: list, xb: np.ndarray, yb: np.ndarray):
    """MSE loss (mean over batch and outputs) and exact parameter gradients.

    Returns (loss, weight gradients, bias gradients) in layer order.
    Weight decay is decoupled from the loss, so it never appears here.
    """
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    yb = np.atleast_2d(np.asarray(yb, dtype=float))
    last = len(weights) - 1
    hs = [xb]
    zs = []
    h = xb
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        zs.append(z)
        h = z if i == last else _gelu(z)
        hs.append(h)
    m = xb.shape[0] * yb.shape[1]
    diff = hs[-1] - yb
    loss = float(np.sum(diff * diff) / m)

    g_w = [None] * len(weights)
    g_b = [None] * len(weights)
    delta = 2.0 * diff / m
    for i in range(last, -1, -1):
        if i != last:
            delta = delta * _gelu_grad(zs[i])
        g_w[i] = hs[i].T @ delta
        g_b[i] = delta.sum(axis=0)
        if i:
            delta = delta @ weights[i].T
    return loss, g_w, g_b


def train_mlp(x: np.ndarray, y: np.ndarray, config: MlpConfig) -> MlpModel:
    """Train on raw inputs/targets; both are standardized internally with
    the same scheme the GP uses for inputs.

    Per epoch: shuffle, iterate mini-batches, add Gaussian noise (std
    ``input_noise_std`` in normalized space) to the batch inputs, take an
    adaptive-moment step, then apply decoupled weight decay to the weight
    matrices. Per-epoch mean batch loss is recorded in ``history``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[0] != y.shape[0]:
        raise ValueError("x and y must be 2-d with matching row counts")
    if config.widths[0] != x.shape[1] or config.widths[-1] != y.shape[1]:
        raise ValueError(
            f"widths {config.widths} do not match data dims "
            f"({x.shape[1]} in, {y.shape[1]} out)"
        )

    x_std = Standardizer.fit(x)
    y_std = Standardizer.fit(y)
    xs = x_std.transform(x)
    ys = y_std.transform(y)

    rng = np.random.default_rng(config.seed)
    weights, biases = init_params(config.widths, rng)

    lr = config.learning_rate
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0

    n = xs.shape[0]
    history = np.zeros(config.epochs)
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        losses = []
        for lo in range(0, n, config.batch_size):
            sel = perm[lo : lo + config.batch_size]
            xb = xs[sel]
            if config.input_noise_std > 0:
                xb = xb + rng.normal(0.0, config.input_noise_std, size=xb.shape)
            loss, g_w, g_b = loss_and_grads(weights, biases, xb, ys[sel])
            losses.append(loss)
            step += 1
            c1 = 1.0 - beta1**step
            c2 = 1.0 - beta2**step
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * g_w[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * g_w[i] ** 2
                weights[i] -= lr * (m_w[i] / c1) / (np.sqrt(v_w[i] / c2) + eps)
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * g_b[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * g_b[i] ** 2
                biases[i] -= lr * (m_b[i] / c1) / (np.sqrt(v_b[i] / c2) + eps)
                if config.weight_decay > 0:
                    weights[i] -= lr * config.weight_decay * weights[i]
        history[epoch] = float(np.mean(losses))
        if not np.isfinite(history[epoch]):
            raise RuntimeError(
                f"training loss became non-finite at epoch {epoch}; "
                "lower the learning rate or check input normalization"
            )

    return MlpModel(
        weights=weights,
        biases=biases,
        x_std=x_std,
        y_std=y_std,
        config=config,
        history=history,
    )


def predict_mlp(model: MlpModel, queries: np.ndarray) -> np.ndarray:
    """Deterministic forward pass (no input noise), de-normalized outputs."""
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q[None, :]
    if q.shape[1] != model.config.widths[0]:
        raise ValueError(
            f"queries have {q.shape[1]} dims, model expects {model.config.widths[0]}"
        )
    out = forward(model.weights, model.biases, model.x_std.transform(q))
    return model.y_std.inverse(out)


def save_mlp(model: MlpModel, path) -> None:
    payload = {
        "version": np.array([_SNAPSHOT_VERSION]),
        "x_mean": model.x_std.mean,
        "x_scale": model.x_std.scale,
        "x_active": model.x_std.active,
        "y_mean": model.y_std.mean,
        "y_scale": model.y_std.scale,
        "y_active": model.y_std.active,
        "history": model.history,
        "config": np.array(
            [
                json.dumps(
                    {
                        "widths": list(model.config.widths),
                        "learning_rate": model.config.learning_rate,
                        "batch_size": model.config.batch_size,
                        "epochs": model.config.epochs,
                        "weight_decay": model.config.weight_decay,
                        "input_noise_std": model.config.input_noise_std,
                        "seed": model.config.seed,
                    }
                )
            ]
        ),
    }
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_mlp(path) -> MlpModel:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"][0])
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        cfg = json.loads(str(z["config"][0]))
        config = MlpConfig(**{**cfg, "widths": tuple(cfg["widths"])})
        weights, biases = [], []
        for i in range(len(config.widths) - 1):
            weights.append(z[f"w{i}"])
            biases.append(z[f"b{i}"])
        return MlpModel(
            weights=weights,
            biases=biases,
            x_std=Standardizer(z["x_mean"], z["x_scale"], z["x_active"].astype(bool)),
            y_std=Standardizer(z["y_mean"], z["y_scale"], z["y_active"].astype(bool)),
            config=config,
            history=z["history"],
        )
