"""Fully-connected feed-forward regressor trained one example at a time.

Plain numpy, float64 throughout: He-Normal initialization, LeakyReLU hidden
layers, ReLU output (case forecasts are non-negative), MSE loss, Adam
updates with bias correction at mini-batch size one. Training is exactly
reproducible for a given seed and example sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError

ACT_LEAKY_RELU = "leaky-relu"
ACT_RELU = "relu"
ACT_IDENTITY = "identity"

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    leaky_slope: float = 0.01
    output_bias: float = 0.01
    epochs_per_step: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ConfigError(f"{name} must lie strictly inside (0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.leaky_slope <= 0:
            raise ConfigError("leaky_slope must be positive")
        if self.output_bias < 0:
            raise ConfigError("output_bias must be >= 0")
        if self.epochs_per_step < 1:
            raise ConfigError("epochs_per_step must be >= 1")


@dataclass
class MlpModel:
    """Layer parameters plus Adam moment state and the update counter.

    weights[k] has shape (fan_out, fan_in); moment arrays mirror the
    parameter shapes. ``step`` increments by exactly one per Adam update.
    """

    arch: tuple[int, ...]
    activations: list[str]
    slope: float
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m_w: list[np.ndarray] = field(repr=False, default_factory=list)
    v_w: list[np.ndarray] = field(repr=False, default_factory=list)
    m_b: list[np.ndarray] = field(repr=False, default_factory=list)
    v_b: list[np.ndarray] = field(repr=False, default_factory=list)
    step: int = 0


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_mlp(arch, cfg: TrainConfig) -> MlpModel:
    """He-Normal hidden layers, zero-initialized regression head.

    Hidden weights are drawn Normal(0, 2/fan_in) with zero biases. The
    output layer starts at zero weights with a small positive bias so that
    every ReLU output unit is active for every input: a unit whose
    pre-activation starts negative on the whole (non-negative) input cone
    would receive zero gradient forever and predict 0 for the entire run.
    """
    arch = tuple(int(s) for s in arch)
    if len(arch) < 2:
        raise ConfigError("architecture needs at least input and output sizes")
    if any(s < 1 for s in arch):
        raise ConfigError(f"layer sizes must be >= 1, got {arch}")
    rng = np.random.default_rng(cfg.seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(arch, arch[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    weights[-1] = np.zeros_like(weights[-1])
    biases[-1] = np.full(arch[-1], float(cfg.output_bias))
    activations = [ACT_LEAKY_RELU] * (len(arch) - 2) + [ACT_RELU]
    return MlpModel(
        arch=arch,
        activations=activations,
        slope=cfg.leaky_slope,
        weights=weights,
        biases=biases,
        m_w=[np.zeros_like(w) for w in weights],
        v_w=[np.zeros_like(w) for w in weights],
        m_b=[np.zeros_like(b) for b in biases],
        v_b=[np.zeros_like(b) for b in biases],
    )


def _activate(z: np.ndarray, tag: str, slope: float) -> np.ndarray:
    if tag == ACT_LEAKY_RELU:
        return np.where(z >= 0, z, slope * z)
    if tag == ACT_RELU:
        return np.where(z >= 0, z, 0.0)
    return z


def _activation_slope(z: np.ndarray, tag: str, slope: float) -> np.ndarray:
    # derivative; the z == 0 tie goes to the non-negative branch
    if tag == ACT_LEAKY_RELU:
        return np.where(z >= 0, 1.0, slope)
    if tag == ACT_RELU:
        return np.where(z >= 0, 1.0, 0.0)
    return np.ones_like(z)


def _trace(model: MlpModel, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.arch[0],):
        raise ValueError(f"input of shape {x.shape}, expected ({model.arch[0]},)")
    pre, post = [], [x]
    a = x
    for w, b, tag in zip(model.weights, model.biases, model.activations):
        z = w @ a + b
        a = _activate(z, tag, model.slope)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(model: MlpModel, x) -> np.ndarray:
    out = _trace(model, x)[1][-1]
    if not np.isfinite(out).all():
        raise NumericError("non-finite network output")
    return out


def mse_loss(y_hat, y) -> float:
    y_hat = np.asarray(y_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_hat.shape != y.shape:
        raise ValueError(f"length mismatch: {y_hat.shape} vs {y.shape}")
    diff = y_hat - y
    return float(np.mean(diff * diff))


def backward(model: MlpModel, x, y) -> Gradients:
    """Exact reverse-mode gradients of the MSE loss for one example."""
    y = np.asarray(y, dtype=float)
    pre, post = _trace(model, x)
    if y.shape != post[-1].shape:
        raise ValueError(f"target of shape {y.shape}, expected {post[-1].shape}")
    n_layers = len(model.weights)
    out_dim = post[-1].size
    delta = (2.0 / out_dim) * (post[-1] - y)
    delta = delta * _activation_slope(pre[-1], model.activations[-1], model.slope)
    g_w: list = [None] * n_layers
    g_b: list = [None] * n_layers
    for k in reversed(range(n_layers)):
        g_w[k] = np.outer(delta, post[k])
        g_b[k] = delta
        if k:
            delta = (model.weights[k].T @ delta) * _activation_slope(
                pre[k - 1], model.activations[k - 1], model.slope
            )
    if not all(np.isfinite(g).all() for g in g_w):
        raise NumericError("non-finite gradient")
    return Gradients(g_w, g_b)


def adam_step(model: MlpModel, grads: Gradients, cfg: TrainConfig) -> None:
    """One bias-corrected Adam update; mutates the model in place."""
    if len(grads.weights) != len(model.weights):
        raise ValueError("gradient/parameter layer count mismatch")
    for g, p in zip(grads.weights + grads.biases, model.weights + model.biases):
        if g.shape != p.shape:
            raise ValueError(f"gradient of shape {g.shape} for parameter {p.shape}")
    model.step += 1
    corr1 = 1.0 - cfg.beta1 ** model.step
    corr2 = 1.0 - cfg.beta2 ** model.step
    groups = (
        (model.weights, grads.weights, model.m_w, model.v_w),
        (model.biases, grads.biases, model.m_b, model.v_b),
    )
    for params, gs, ms, vs in groups:
        for k, g in enumerate(gs):
            ms[k] = cfg.beta1 * ms[k] + (1.0 - cfg.beta1) * g
            vs[k] = cfg.beta2 * vs[k] + (1.0 - cfg.beta2) * g * g
            params[k] -= cfg.learning_rate * (ms[k] / corr1) / (np.sqrt(vs[k] / corr2) + cfg.epsilon)


def train_increment(model: MlpModel, memory, cfg: TrainConfig) -> None:
    """One incremental update: epochs_per_step passes over the replay
    memory, oldest example first, one Adam step per example."""
    if len(memory) == 0:
        raise ValueError("replay memory is empty")
    for _ in range(cfg.epochs_per_step):
        for example in memory:
            adam_step(model, backward(model, example.x, example.y), cfg)


def save_checkpoint(model: MlpModel, path) -> None:
    """Bit-exact dump of architecture, parameters, Adam state and step."""
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "arch": np.array(model.arch),
        "activations": np.array(model.activations),
        "slope": np.array(model.slope),
        "step": np.array(model.step),
    }
    for k in range(len(model.weights)):
        payload[f"w{k}"] = model.weights[k]
        payload[f"b{k}"] = model.biases[k]
        payload[f"mw{k}"] = model.m_w[k]
        payload[f"vw{k}"] = model.v_w[k]
        payload[f"mb{k}"] = model.m_b[k]
        payload[f"vb{k}"] = model.v_b[k]
    np.savez(path, **payload)


def load_checkpoint(path) -> MlpModel:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        arch = tuple(int(s) for s in data["arch"])
        n_layers = len(arch) - 1
        return MlpModel(
            arch=arch,
            activations=[str(a) for a in data["activations"]],
            slope=float(data["slope"]),
            weights=[data[f"w{k}"] for k in range(n_layers)],
            biases=[data[f"b{k}"] for k in range(n_layers)],
            m_w=[data[f"mw{k}"] for k in range(n_layers)],
            v_w=[data[f"vw{k}"] for k in range(n_layers)],
            m_b=[data[f"mb{k}"] for k in range(n_layers)],
            v_b=[data[f"vb{k}"] for k in range(n_layers)],
            step=int(data["step"]),
        )
