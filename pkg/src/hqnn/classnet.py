"""Small dense-network toolkit: layers, the bounded angle map, loss and Adam.

All functions take batches with samples along axis 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import ConfigurationError, ContractViolation

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ContractViolation(
                f"inconsistent layer shapes {self.weights.shape} / {self.bias.shape}"
            )

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


def glorot_layer(rng: np.random.Generator, fan_in: int, fan_out: int, activation: str = "relu") -> DenseLayer:
    """Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return DenseLayer(rng.uniform(-limit, limit, (fan_out, fan_in)), np.zeros(fan_out), activation)


def _act(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "tanh":
        return np.tanh(z)
    return z


def _act_grad(z, activation):
    if activation == "relu":
        return (z > 0).astype(float)
    if activation == "tanh":
        return 1.0 - np.tanh(z) ** 2
    return np.ones_like(z)


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    if x.shape[1] != layer.fan_in:
        raise ContractViolation(f"layer expects {layer.fan_in} inputs, got {x.shape[1]}")
    return _act(x @ layer.weights.T + layer.bias, layer.activation)


def dense_backward(layer: DenseLayer, x: np.ndarray, grad_y: np.ndarray):
    """Return ``(dL/dx, dL/dW, dL/db)`` given the upstream gradient ``dL/dy``."""
    x = np.atleast_2d(x)
    grad_y = np.atleast_2d(grad_y)
    if x.shape[1] != layer.fan_in or grad_y.shape != (x.shape[0], layer.fan_out):
        raise ContractViolation("shape mismatch in dense_backward")
    z = x @ layer.weights.T + layer.bias
    gz = grad_y * _act_grad(z, layer.activation)
    return gz @ layer.weights, gz.T @ x, gz.sum(axis=0)


_THETA_MAX = np.nextafter(np.pi, 0.0)


def bounded_angle_map(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``theta = pi * tanh(h)`` and its elementwise derivative.

    Where ``tanh`` rounds to +-1 the angle is clipped to the largest double
    below pi, so ``|theta| < pi`` holds in floating point too.
    """
    t = np.tanh(h)
    return np.clip(np.pi * t, -_THETA_MAX, _THETA_MAX), np.pi * (1.0 - t * t)


@dataclass
class LossWeights:
    w: np.ndarray = field(default_factory=lambda: np.ones(6))

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (6,):
            raise ConfigurationError(f"need 6 loss weights, got shape {self.w.shape}")
        if np.any(self.w <= 0) or not np.all(np.isfinite(self.w)):
            raise ConfigurationError("loss weights must be finite and positive")


def weighted_mse(pred: np.ndarray, target: np.ndarray, weights: LossWeights):
    """``(1/T) sum_t w_t (pred_t - y_t)^2``, averaged over the batch.

    Returns the scalar loss and ``dL/dpred`` with the same shape as ``pred``.
    """
    if not isinstance(weights, LossWeights):
        weights = LossWeights(weights)
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape or pred.shape[-1] != 6:
        raise ContractViolation(f"pred/target shape mismatch: {pred.shape} vs {target.shape}")
    batch = 1 if pred.ndim == 1 else pred.shape[0]
    diff = pred - target
    loss = float(np.sum(weights.w * diff ** 2) / (6 * batch))
    grad = 2.0 * weights.w * diff / (6 * batch)
    return loss, grad


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: OptimizerState, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
    """Bias-corrected Adam update, applied in place to ``params``."""
    state.step += 1
    b1c = 1.0 - state.beta1 ** state.step
    b2c = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ContractViolation(f"gradient shape mismatch for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / b1c) / (np.sqrt(v / b2c) + state.eps)
