"""Hybrid backbones, end-to-end gradients, the trainer and model serialization.

Three backbones share one interface (``forward``/``backward`` over an ordered
parameter dict):

* ``strict``: encoder 24-64-32-16-4, bounded angle map, circuit, linear head
  over the 12 Pauli features only.
* ``dual``: trunk 24-64-32-16, a 16-16 ReLU classical branch, a 16-4 quantum
  projection, and per-target linear heads.  The first four targets read
  ``[classical (16) | quantum (12)]``; I_on and I_off read quantum features only.
* ``mlp``: classical 24-64-32-16-6 baseline.
"""
from __future__ import annotations

import copy
import json
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .analysis import MetricsReport, metrics_report
from .ansatz import NUM_QUBITS, CompiledCircuit, MixedSequence, SingleTemplate, compile as compile_circuit
from .classnet import (
    DenseLayer,
    LossWeights,
    OptimizerState,
    adam_step,
    bounded_angle_map,
    dense_backward,
    dense_forward,
    glorot_layer,
    weighted_mse,
)
from .dataset import NUM_FEATURES, Standardizer
from .errors import ConfigurationError, ContractViolation, UsageError

NUM_TARGETS = 6
NUM_QFEATURES = 3 * NUM_QUBITS
ROUTED_TARGETS = 4  # heads that see classical + quantum features in the dual model
FORMAT_NAME = "hqnn-model"
FORMAT_VERSION = 1
BACKBONES = ("strict", "dual", "mlp")


# -- quantum layer ----------------------------------------------------------------

def _circuit_features(circuit: CompiledCircuit, theta: np.ndarray, params: np.ndarray,
                      noise: Optional[Tuple[float, float]], with_jacobian: bool):
    """Features (B, 12) and optionally the Jacobian (B, 12, 4+P) for input angles ``theta``."""
    angles = np.hstack([theta, np.broadcast_to(params, (theta.shape[0], params.size))])
    be = _kernels.backend
    noisy = noise is not None and (noise[0] != 0.0 or noise[1] != 0.0)
    if noisy:
        p1, p2 = float(noise[0]), float(noise[1])
        if with_jacobian:
            return be.dm_jacobian(circuit.ops, NUM_QUBITS, angles, p1, p2)
        return be.dm_features(circuit.ops, NUM_QUBITS, angles, p1, p2), None
    if with_jacobian:
        return be.sv_jacobian(circuit.ops, NUM_QUBITS, angles)
    return be.sv_features(circuit.ops, NUM_QUBITS, angles), None


def _check_noise(noise):
    if noise is None:
        return None
    p1, p2 = (float(v) for v in noise)
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ConfigurationError(f"depolarizing probabilities must lie in [0, 1], got {(p1, p2)}")
    return (p1, p2)


# -- models -----------------------------------------------------------------------

class HybridModel:
    """Common machinery: named parameters, layer bookkeeping and prediction.

    Parameters live in ``self.params`` (insertion-ordered).  Layers are
    described by ``self.layout``: group name -> list of (prefix, activation).
    """

    kind = "base"

    def __init__(self):
        self.params: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self.layout: Dict[str, List[Tuple[str, str]]] = {}
        self.circuit: Optional[CompiledCircuit] = None
        self.noise: Optional[Tuple[float, float]] = None
        # test hook: replaces the 12 quantum features before the heads
        self.quantum_hook: Optional[Callable[[np.ndarray], np.ndarray]] = None
        self.standardizer: Optional[Standardizer] = None
        self.metadata: Dict[str, object] = {}  # free-form JSON-safe provenance

    # parameter helpers
    def _add_layer(self, group, prefix, rng, fan_in, fan_out, activation):
        layer = glorot_layer(rng, fan_in, fan_out, activation)
        self.params[prefix + ".W"] = layer.weights
        self.params[prefix + ".b"] = layer.bias
        self.layout.setdefault(group, []).append((prefix, activation))

    def _layer(self, prefix, activation) -> DenseLayer:
        return DenseLayer(self.params[prefix + ".W"], self.params[prefix + ".b"], activation)

    def _run_stack(self, group, x):
        inputs = []
        for prefix, act in self.layout[group]:
            inputs.append(x)
            x = dense_forward(self._layer(prefix, act), x)
        return x, inputs

    def _back_stack(self, group, inputs, grad, grads):
        for (prefix, act), x in zip(reversed(self.layout[group]), reversed(inputs)):
            grad, dW, db = dense_backward(self._layer(prefix, act), x, grad)
            grads[prefix + ".W"] = dW
            grads[prefix + ".b"] = db
        return grad

    def _quantum(self, h, with_jacobian):
        theta, dtheta = bounded_angle_map(h)
        q, jac = _circuit_features(self.circuit, theta, self.params["quantum"], self.noise, with_jacobian)
        if self.quantum_hook is not None:
            q = np.asarray(self.quantum_hook(q), dtype=float)
        return q, jac, dtheta

    def _quantum_back(self, dq, jac, dtheta, grads):
        # chain rule through the circuit Jacobian and the bounded angle map
        dangles = np.einsum("bf,bfa->ba", dq, jac)
        grads["quantum"] = dangles[:, NUM_QUBITS:].sum(axis=0)
        return dangles[:, :NUM_QUBITS] * dtheta

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def set_noise(self, noise) -> None:
        self.noise = _check_noise(noise)

    def forward(self, x, need_cache: bool = False):
        raise NotImplementedError

    def backward(self, cache, grad_pred) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    def predict(self, features) -> np.ndarray:
        return predict(self, features)

    def clone(self) -> "HybridModel":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        return model_to_dict(self)


class StrictBottleneckModel(HybridModel):
    kind = "strict"

    def __init__(self, circuit: CompiledCircuit, seed: int = 0,
                 encoder_widths: Sequence[int] = (NUM_FEATURES, 64, 32, 16), noise=None):
        super().__init__()
        widths = list(encoder_widths)
        if len(widths) < 1 or any(int(w) <= 0 for w in widths):
            raise ConfigurationError(f"invalid encoder widths {widths}")
        rng = np.random.default_rng(seed)
        self.circuit = circuit
        self.encoder_widths = tuple(int(w) for w in widths)
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            self._add_layer("encoder", f"encoder.{i}", rng, a, b, "relu")
        self._add_layer("encoder", f"encoder.{len(widths) - 1}", rng, widths[-1], NUM_QUBITS, "identity")
        # trainable angles uniform on (-pi, pi]
        self.params["quantum"] = np.pi - rng.uniform(0.0, 2.0 * np.pi, circuit.num_params)
        self._add_layer("head", "head", rng, NUM_QFEATURES, NUM_TARGETS, "identity")
        self.set_noise(noise)

    @property
    def input_dim(self) -> int:
        return self.encoder_widths[0]

    def forward(self, x, need_cache=False):
        h, enc_in = self._run_stack("encoder", x)
        q, jac, dtheta = self._quantum(h, need_cache)
        y = q @ self.params["head.W"].T + self.params["head.b"]
        return y, ((enc_in, q, jac, dtheta) if need_cache else None)

    def backward(self, cache, grad_pred):
        enc_in, q, jac, dtheta = cache
        grads: Dict[str, np.ndarray] = {}
        grads["head.W"] = grad_pred.T @ q
        grads["head.b"] = grad_pred.sum(axis=0)
        dq = grad_pred @ self.params["head.W"]
        dh = self._quantum_back(dq, jac, dtheta, grads)
        self._back_stack("encoder", enc_in, dh, grads)
        return grads


class DualBranchModel(HybridModel):
    kind = "dual"

    def __init__(self, circuit: CompiledCircuit, seed: int = 0,
                 trunk_widths: Sequence[int] = (NUM_FEATURES, 64, 32, 16), branch_width: int = 16, noise=None):
        super().__init__()
        widths = list(trunk_widths)
        if len(widths) < 2 or any(int(w) <= 0 for w in widths) or branch_width <= 0:
            raise ConfigurationError(f"invalid trunk widths {widths} / branch width {branch_width}")
        rng = np.random.default_rng(seed)
        self.circuit = circuit
        self.encoder_widths = tuple(int(w) for w in widths)
        self.branch_width = int(branch_width)
        n = len(widths) - 1
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            self._add_layer("trunk", f"trunk.{i}", rng, a, b, "relu" if i < n - 1 else "identity")
        latent = widths[-1]
        self._add_layer("branch", "branch", rng, latent, self.branch_width, "relu")
        self._add_layer("projection", "projection", rng, latent, NUM_QUBITS, "identity")
        self.params["quantum"] = np.pi - rng.uniform(0.0, 2.0 * np.pi, circuit.num_params)
        # one linear head per target, stored stacked: rows are targets
        self._add_layer("mixed_heads", "mixed_heads", rng, self.branch_width + NUM_QFEATURES, ROUTED_TARGETS, "identity")
        self._add_layer("quantum_heads", "quantum_heads", rng, NUM_QFEATURES, NUM_TARGETS - ROUTED_TARGETS, "identity")
        self.set_noise(noise)

    @property
    def input_dim(self) -> int:
        return self.encoder_widths[0]

    def forward(self, x, need_cache=False):
        z, trunk_in = self._run_stack("trunk", x)
        c = dense_forward(self._layer("branch", "relu"), z)
        h = dense_forward(self._layer("projection", "identity"), z)
        q, jac, dtheta = self._quantum(h, need_cache)
        mixed = np.hstack([c, q])
        y = np.hstack([
            mixed @ self.params["mixed_heads.W"].T + self.params["mixed_heads.b"],
            q @ self.params["quantum_heads.W"].T + self.params["quantum_heads.b"],
        ])
        return y, ((trunk_in, z, mixed, q, jac, dtheta) if need_cache else None)

    def backward(self, cache, grad_pred):
        trunk_in, z, mixed, q, jac, dtheta = cache
        grads: Dict[str, np.ndarray] = {}
        gm, gq = grad_pred[:, :ROUTED_TARGETS], grad_pred[:, ROUTED_TARGETS:]
        grads["mixed_heads.W"] = gm.T @ mixed
        grads["mixed_heads.b"] = gm.sum(axis=0)
        grads["quantum_heads.W"] = gq.T @ q
        grads["quantum_heads.b"] = gq.sum(axis=0)
        dmixed = gm @ self.params["mixed_heads.W"]
        dc = dmixed[:, :self.branch_width]
        dq = dmixed[:, self.branch_width:] + gq @ self.params["quantum_heads.W"]
        dz_c, grads["branch.W"], grads["branch.b"] = dense_backward(self._layer("branch", "relu"), z, dc)
        dh = self._quantum_back(dq, jac, dtheta, grads)
        dz_q, grads["projection.W"], grads["projection.b"] = dense_backward(
            self._layer("projection", "identity"), z, dh)
        self._back_stack("trunk", trunk_in, dz_c + dz_q, grads)
        return grads


class MLPBaseline(HybridModel):
    kind = "mlp"

    def __init__(self, seed: int = 0, widths: Sequence[int] = (NUM_FEATURES, 64, 32, 16, NUM_TARGETS)):
        super().__init__()
        widths = list(widths)
        if len(widths) < 2 or widths[-1] != NUM_TARGETS or any(int(w) <= 0 for w in widths):
            raise ConfigurationError(f"invalid MLP widths {widths}")
        rng = np.random.default_rng(seed)
        self.encoder_widths = tuple(int(w) for w in widths)
        n = len(widths) - 1
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            self._add_layer("layers", f"layers.{i}", rng, a, b, "relu" if i < n - 1 else "identity")

    @property
    def input_dim(self) -> int:
        return self.encoder_widths[0]

    def forward(self, x, need_cache=False):
        y, inputs = self._run_stack("layers", x)
        return y, (inputs if need_cache else None)

    def backward(self, cache, grad_pred):
        grads: Dict[str, np.ndarray] = {}
        self._back_stack("layers", cache, grad_pred, grads)
        return grads


def build_model(backbone: str, circuit: Optional[CompiledCircuit] = None, seed: int = 0, noise=None) -> HybridModel:
    if backbone == "strict":
        return StrictBottleneckModel(circuit, seed=seed, noise=noise)
    if backbone == "dual":
        return DualBranchModel(circuit, seed=seed, noise=noise)
    if backbone == "mlp":
        return MLPBaseline(seed=seed)
    raise ConfigurationError(f"unknown backbone {backbone!r}; choose from {BACKBONES}")


# -- operations -------------------------------------------------------------------

def _check_features(model: HybridModel, features) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise UsageError(f"expected standardized features with {model.input_dim} columns, got shape {x.shape}")
    if x.shape[0] == 0:
        raise UsageError("empty feature batch")
    if not np.all(np.isfinite(x)):
        raise UsageError("features contain non-finite values")
    return x


def predict(model: HybridModel, features) -> np.ndarray:
    """Standardized predictions (B, 6) for standardized features (B, 24)."""
    y, _ = model.forward(_check_features(model, features))
    return y


def predict_records(model: HybridModel, records) -> np.ndarray:
    """Predictions in original units for raw records; needs the model's fitted standardizer."""
    if model.standardizer is None:
        raise UsageError("model has no fitted standardizer")
    return model.standardizer.invert_targets(predict(model, model.standardizer.transform_features(records)))


def loss_and_gradients(model: HybridModel, features, targets, weights=None):
    """Weighted MSE over the batch and its gradient for every parameter array."""
    x = _check_features(model, features)
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if t.shape != (x.shape[0], NUM_TARGETS):
        raise UsageError(f"targets shape {t.shape} does not match batch of {x.shape[0]}")
    weights = weights if isinstance(weights, LossWeights) else LossWeights(
        np.ones(NUM_TARGETS) if weights is None else weights)
    y, cache = model.forward(x, need_cache=True)
    loss, grad_pred = weighted_mse(y, t, weights)
    grads = model.backward(cache, grad_pred)
    return loss, OrderedDict((k, grads[k]) for k in model.params)


@dataclass
class TrainConfig:
    """Optimizer and schedule settings; ``batch_size=None`` means full batch."""

    epochs: int = 300
    learning_rate: float = 1e-3
    batch_size: Optional[int] = None
    seed: int = 0
    loss_weights: Tuple[float, ...] = (1.0,) * NUM_TARGETS
    patience: Optional[int] = None

    def __post_init__(self):
        if int(self.epochs) <= 0:
            raise ConfigurationError(f"epochs must be positive, got {self.epochs}")
        if not float(self.learning_rate) > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size is not None and int(self.batch_size) <= 0:
            raise ConfigurationError(f"batch size must be positive, got {self.batch_size}")
        if self.patience is not None and int(self.patience) <= 0:
            raise ConfigurationError(f"patience must be positive, got {self.patience}")
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        LossWeights(np.array(self.loss_weights))


@dataclass
class TrainHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self):
        return len(self.train_loss)

    def to_dict(self) -> dict:
        return {"train_loss": self.train_loss, "val_loss": self.val_loss, "best_epoch": self.best_epoch}


def _split_arrays(split, name):
    x, y = split
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise UsageError(f"{name} split is empty")
    if x.shape[0] != y.shape[0]:
        raise UsageError(f"{name} split has {x.shape[0]} feature rows and {y.shape[0]} target rows")
    return x, y


def batch_loss(model: HybridModel, x, y, weights: LossWeights) -> float:
    pred, _ = model.forward(x)
    return weighted_mse(pred, y, weights)[0]


def train(model: HybridModel, train_split, val_split, config: TrainConfig = None,
          on_epoch: Optional[Callable[[int, float, float], None]] = None):
    """Adam on the weighted MSE; returns ``(model, history)`` with best-validation parameters restored.

    ``train_split`` and ``val_split`` are ``(features, targets)`` pairs in
    standardized units.  The model is updated in place.
    """
    config = config or TrainConfig()
    xt, yt = _split_arrays(train_split, "train")
    xv, yv = _split_arrays(val_split, "validation")
    weights = LossWeights(np.array(config.loss_weights))
    rng = np.random.default_rng(config.seed)
    opt = OptimizerState(lr=float(config.learning_rate))
    history = TrainHistory()
    best_val = np.inf
    best_params = None
    stale = 0
    n = xt.shape[0]
    bs = n if config.batch_size is None else min(int(config.batch_size), n)
    for epoch in range(int(config.epochs)):
        order = np.arange(n) if bs == n else rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_gradients(model, xt[idx], yt[idx], weights)
            total += loss * idx.size
            adam_step(opt, model.params, grads)
        train_loss = total / n
        val_loss = batch_loss(model, xv, yv, weights)
        history.train_loss.append(float(train_loss))
        history.val_loss.append(float(val_loss))
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_params = OrderedDict((k, v.copy()) for k, v in model.params.items())
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= int(config.patience):
                break
    if best_params is not None:
        for k, v in best_params.items():
            model.params[k][...] = v
    return model, history


def evaluate(model: HybridModel, features, targets_raw, standardizer: Standardizer) -> MetricsReport:
    """Metrics in original units: predictions are inverse-transformed before scoring."""
    if standardizer is None or standardizer.target_iqr is None:
        raise UsageError("evaluate needs a fitted standardizer with training IQRs")
    pred = standardizer.invert_targets(predict(model, features))
    return metrics_report(pred, np.atleast_2d(targets_raw), standardizer.target_iqr)


# -- serialization ------------------------------------------------------------------

def _spec_to_dict(spec) -> dict:
    if isinstance(spec, SingleTemplate):
        return {"type": "single", "template": spec.template, "levels": spec.levels}
    if isinstance(spec, MixedSequence):
        return {"type": "mixed", "templates": list(spec.templates)}
    raise ContractViolation(f"unknown circuit spec {spec!r}")


def spec_from_dict(d: dict):
    kind = d.get("type")
    if kind == "single":
        return SingleTemplate(int(d["template"]), int(d["levels"]))
    if kind == "mixed":
        return MixedSequence(tuple(int(t) for t in d["templates"]))
    raise ConfigurationError(f"unknown circuit type {kind!r}")


def model_to_dict(model: HybridModel) -> dict:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "backbone": model.kind,
        "widths": list(model.encoder_widths),
        "circuit": None if model.circuit is None else _spec_to_dict(model.circuit.spec),
        "noise": None if model.noise is None else list(model.noise),
        "params": OrderedDict(
            (k, {"shape": list(v.shape), "values": [float(a) for a in v.reshape(-1)]})
            for k, v in model.params.items()
        ),
        "standardizer": None if model.standardizer is None else model.standardizer.to_dict(),
        "metadata": dict(model.metadata),
    }
    if model.kind == "dual":
        doc["branch_width"] = model.branch_width
    return doc


def model_from_dict(doc: dict) -> HybridModel:
    if doc.get("format") != FORMAT_NAME:
        raise ConfigurationError("not a model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported model format version {doc.get('version')}")
    backbone = doc.get("backbone")
    circuit = None if doc.get("circuit") is None else compile_circuit(spec_from_dict(doc["circuit"]))
    widths = tuple(doc["widths"])
    if backbone == "strict":
        model = StrictBottleneckModel(circuit, encoder_widths=widths, noise=doc.get("noise"))
    elif backbone == "dual":
        model = DualBranchModel(circuit, trunk_widths=widths, branch_width=doc.get("branch_width", 16),
                                noise=doc.get("noise"))
    elif backbone == "mlp":
        model = MLPBaseline(widths=widths)
    else:
        raise ConfigurationError(f"unknown backbone {backbone!r}")
    stored = doc["params"]
    if list(stored) != list(model.params):
        raise ConfigurationError("parameter names do not match the backbone layout")
    for name, entry in stored.items():
        shape = tuple(entry["shape"])
        if shape != model.params[name].shape:
            raise ConfigurationError(f"parameter {name} has shape {shape}, expected {model.params[name].shape}")
        model.params[name][...] = np.array(entry["values"], dtype=float).reshape(shape)
    if doc.get("standardizer") is not None:
        model.standardizer = Standardizer.from_dict(doc["standardizer"])
    model.metadata = dict(doc.get("metadata") or {})
    return model


def save_model(model: HybridModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> HybridModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid model JSON ({exc})") from None
    return model_from_dict(doc)
