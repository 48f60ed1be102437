"""Exact circuit evaluation and parameter-shift gradients.

The 12 features are ``[<Z_0..3>, <X_0..3>, <Y_0..3>]`` after the encoding
layer and all variational levels.  Derivatives come from shift rules:

* RX/RY/RZ (and encoding RX): ``1/2 [f(t + pi/2) - f(t - pi/2)]``
* CRX/CRZ: the four-term rule with shifts ``+-pi/2``, ``+-3pi/2`` and
  coefficients ``(sqrt2 +- 1) / (4 sqrt2)``, valid for the frequency set
  ``{1/2, 1}`` of a controlled half-angle rotation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import _kernels
from ._kernels import shift_rule
from .ansatz import NUM_QUBITS, CompiledCircuit
from .errors import ContractViolation

NUM_FEATURES = 3 * NUM_QUBITS


@dataclass
class CircuitEvaluation:
    features: np.ndarray  # (12,)
    input_jacobian: np.ndarray  # (12, 4)
    param_jacobian: np.ndarray  # (12, P)


def _angle_vector(circuit: CompiledCircuit, inputs, params) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    params = np.asarray(params, dtype=float).reshape(-1)
    if inputs.shape != (NUM_QUBITS,):
        raise ContractViolation(f"expected {NUM_QUBITS} input angles, got {inputs.shape[0]}")
    if params.shape != (circuit.num_params,):
        raise ContractViolation(f"expected {circuit.num_params} params, got {params.shape[0]}")
    return np.concatenate([inputs, params])


def angle_table(circuit: CompiledCircuit, inputs, params) -> np.ndarray:
    """Stack per-sample input angles (B, 4) with shared params into a (B, 4+P) table."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    params = np.asarray(params, dtype=float).reshape(-1)
    if inputs.shape[1] != NUM_QUBITS:
        raise ContractViolation(f"expected {NUM_QUBITS} input angles per row, got {inputs.shape[1]}")
    if params.shape != (circuit.num_params,):
        raise ContractViolation(f"expected {circuit.num_params} params, got {params.shape[0]}")
    return np.hstack([inputs, np.broadcast_to(params, (inputs.shape[0], params.size))])


def forward(circuit: CompiledCircuit, inputs, params) -> np.ndarray:
    angles = _angle_vector(circuit, inputs, params)[None, :]
    return _kernels.backend.sv_features(circuit.ops, NUM_QUBITS, angles)[0]


def forward_batch(circuit: CompiledCircuit, inputs, params) -> np.ndarray:
    return _kernels.backend.sv_features(circuit.ops, NUM_QUBITS, angle_table(circuit, inputs, params))


def jacobian_batch(circuit: CompiledCircuit, inputs, params) -> Tuple[np.ndarray, np.ndarray]:
    """Features (B, 12) and Jacobian (B, 12, 4+P) w.r.t. the combined angle vector."""
    return _kernels.backend.sv_jacobian(circuit.ops, NUM_QUBITS, angle_table(circuit, inputs, params))


def _resolve(circuit: CompiledCircuit, which) -> int:
    # which = ("input", k) or ("param", j); returns the combined-vector column
    kind, index = which
    if kind == "input":
        if not 0 <= index < NUM_QUBITS:
            raise ContractViolation(f"input index {index} out of range")
        return index
    if kind == "param":
        if not 0 <= index < circuit.num_params:
            raise ContractViolation(f"param index {index} out of range for P={circuit.num_params}")
        return NUM_QUBITS + index
    raise ContractViolation(f"unknown gradient target {kind!r}")


def _gate_for(circuit: CompiledCircuit, column: int):
    if column < NUM_QUBITS:
        return circuit.encoding_gates[column]
    for g in circuit.variational_gates:
        if g.param_slot == column - NUM_QUBITS:
            return g
    raise ContractViolation(f"no gate reads angle column {column}")


def shift_gradient(circuit: CompiledCircuit, inputs, params, which) -> np.ndarray:
    """Derivative of all 12 features w.r.t. one angle, by explicit shifted forwards."""
    column = _resolve(circuit, which)
    rule = shift_rule(_gate_for(circuit, column).kind)
    base = _angle_vector(circuit, inputs, params)
    grad = np.zeros(NUM_FEATURES)
    for shift, coef in rule:
        shifted = base.copy()
        shifted[column] += shift
        grad += coef * forward(circuit, shifted[:NUM_QUBITS], shifted[NUM_QUBITS:])
    return grad


def full_jacobians(circuit: CompiledCircuit, inputs, params) -> CircuitEvaluation:
    angles = _angle_vector(circuit, inputs, params)[None, :]
    feats, jac = _kernels.backend.sv_jacobian(circuit.ops, NUM_QUBITS, angles)
    return CircuitEvaluation(
        features=feats[0],
        input_jacobian=jac[0, :, :NUM_QUBITS],
        param_jacobian=jac[0, :, NUM_QUBITS:],
    )


def finite_difference_oracle(circuit: CompiledCircuit, inputs, params, which, h: float = 1e-5) -> np.ndarray:
    """Central difference ``(f(t+h) - f(t-h)) / 2h``; a test oracle, not a training path."""
    if h <= 0:
        raise ContractViolation("finite-difference step must be positive")
    column = _resolve(circuit, which)
    base = _angle_vector(circuit, inputs, params)
    plus, minus = base.copy(), base.copy()
    plus[column] += h
    minus[column] -= h
    f_plus = forward(circuit, plus[:NUM_QUBITS], plus[NUM_QUBITS:])
    f_minus = forward(circuit, minus[:NUM_QUBITS], minus[NUM_QUBITS:])
    return (f_plus - f_minus) / (2.0 * h)
