"""Fully-connected emission network h(x) with batch normalisation.

Shape: d -> 20 -> 20 -> 20 -> c. Each hidden layer is
linear -> batch norm -> ReLU; the output layer is linear. Forward and
backward passes are written out by hand over NumPy arrays.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from indoor_behaviour_ai.errors import TrainingDivergedError

BN_EPS = 1e-5
MOMENTUM = 0.9
HIDDEN_WIDTH = 20
HIDDEN_LAYERS = 3


class Mode(str, Enum):
    TRAIN = "TRAIN"
    EVAL = "EVAL"


@dataclass
class MlpParams:
    """Trainable tensors keyed W0..W3, b0..b3, gamma0..2, beta0..2, plus running BN statistics."""

    tensors: dict[str, np.ndarray]
    running_mean: list[np.ndarray]
    running_var: list[np.ndarray]

    @property
    def n_hidden(self) -> int:
        return len(self.running_mean)

    @property
    def n_in(self) -> int:
        return self.tensors["W0"].shape[0]

    @property
    def n_out(self) -> int:
        return self.tensors[f"W{self.n_hidden}"].shape[1]

    @property
    def widths(self) -> list[int]:
        return [self.n_in] + [self.tensors[f"W{i}"].shape[1] for i in range(self.n_hidden + 1)]

    def copy(self) -> "MlpParams":
        return MlpParams(
            tensors={k: v.copy() for k, v in self.tensors.items()},
            running_mean=[m.copy() for m in self.running_mean],
            running_var=[v.copy() for v in self.running_var],
        )

    def is_finite(self) -> bool:
        arrays = list(self.tensors.values()) + self.running_mean + self.running_var
        return all(np.all(np.isfinite(a)) for a in arrays) and all(np.all(v > 0) for v in self.running_var)


def init_mlp(
    n_in: int,
    n_out: int,
    rng: np.random.Generator,
    hidden_width: int = HIDDEN_WIDTH,
    hidden_layers: int = HIDDEN_LAYERS,
) -> MlpParams:
    """He fan-in initialisation, zero biases, unit BN scale."""
    if n_in < 1 or n_out < 1:
        raise ValueError(f"network needs n_in, n_out >= 1, got {n_in}, {n_out}")
    widths = [n_in] + [hidden_width] * hidden_layers + [n_out]
    tensors: dict[str, np.ndarray] = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        tensors[f"W{i}"] = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        tensors[f"b{i}"] = np.zeros(fan_out)
        if i < hidden_layers:
            tensors[f"gamma{i}"] = np.ones(fan_out)
            tensors[f"beta{i}"] = np.zeros(fan_out)
    return MlpParams(
        tensors=tensors,
        running_mean=[np.zeros(hidden_width) for _ in range(hidden_layers)],
        running_var=[np.ones(hidden_width) for _ in range(hidden_layers)],
    )


@dataclass
class ForwardCache:
    mode: Mode
    inputs: list[np.ndarray] = field(default_factory=list)  # input of each linear layer
    xhat: list[np.ndarray] = field(default_factory=list)
    inv_std: list[np.ndarray] = field(default_factory=list)
    pre_activation: list[np.ndarray] = field(default_factory=list)  # BN output, before ReLU


def forward(
    params: MlpParams, batch: np.ndarray, mode: Mode = Mode.EVAL, update_stats: bool = True,
) -> tuple[np.ndarray, ForwardCache]:
    """Emissions h(x), one row per input row.

    TRAIN normalises with batch statistics (and, unless update_stats is
    False, folds them into the running statistics); EVAL uses the running
    statistics and leaves params untouched.
    """
    mode = Mode(mode)
    a = np.atleast_2d(np.asarray(batch, dtype=float))
    if a.shape[0] == 0:
        raise ValueError("forward needs a non-empty batch")
    if a.shape[1] != params.n_in:
        raise ValueError(f"expected {params.n_in} input features, got {a.shape[1]}")
    if mode is Mode.TRAIN and a.shape[0] < 2:
        raise ValueError("TRAIN mode needs at least 2 rows for batch statistics")

    cache = ForwardCache(mode=mode)
    t = params.tensors
    for i in range(params.n_hidden):
        cache.inputs.append(a)
        z = a @ t[f"W{i}"] + t[f"b{i}"]
        if mode is Mode.TRAIN:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            if update_stats:
                params.running_mean[i] = MOMENTUM * params.running_mean[i] + (1 - MOMENTUM) * mu
                params.running_var[i] = MOMENTUM * params.running_var[i] + (1 - MOMENTUM) * var
        else:
            mu = params.running_mean[i]
            var = params.running_var[i]
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (z - mu) * inv_std
        y = t[f"gamma{i}"] * xhat + t[f"beta{i}"]
        cache.xhat.append(xhat)
        cache.inv_std.append(inv_std)
        cache.pre_activation.append(y)
        a = np.maximum(y, 0.0)

    last = params.n_hidden
    cache.inputs.append(a)
    return a @ t[f"W{last}"] + t[f"b{last}"], cache


def backward(params: MlpParams, cache: ForwardCache, grad: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the scalar loss whose gradient w.r.t. the emissions is `grad`."""
    t = params.tensors
    last = params.n_hidden
    n = cache.inputs[0].shape[0]
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (n, params.n_out):
        raise ValueError(f"upstream gradient must be {(n, params.n_out)}, got {grad.shape}")

    grads: dict[str, np.ndarray] = {}
    grads[f"W{last}"] = cache.inputs[last].T @ grad
    grads[f"b{last}"] = grad.sum(axis=0)
    da = grad @ t[f"W{last}"].T

    for i in reversed(range(params.n_hidden)):
        dy = da * (cache.pre_activation[i] > 0)
        xhat = cache.xhat[i]
        grads[f"gamma{i}"] = (dy * xhat).sum(axis=0)
        grads[f"beta{i}"] = dy.sum(axis=0)
        dxhat = dy * t[f"gamma{i}"]
        if cache.mode is Mode.TRAIN:
            dz = cache.inv_std[i] / n * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        else:
            dz = dxhat * cache.inv_std[i]
        grads[f"W{i}"] = cache.inputs[i].T @ dz
        grads[f"b{i}"] = dz.sum(axis=0)
        da = dz @ t[f"W{i}"].T
    return grads


@dataclass
class AdamState:
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update over every tensor named in `grads`.

    Returns a new parameter dict; `state` is advanced in place.
    """
    for name, g in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape {g.shape} does not match {name} {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient for {name} at Adam step {state.step + 1}")

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    updated = dict(params)
    for name, g in grads.items():
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = params[name] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, state
