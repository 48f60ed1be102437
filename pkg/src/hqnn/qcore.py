"""Exact simulation of small qubit registers.

Basis ordering is big-endian: qubit 0 is the most significant bit of the
basis index, so ``|q0 q1 ... q_{n-1}>`` maps to index
``sum(q_i << (n - 1 - i))``.  Rotations follow ``R_P(t) = exp(-i t P / 2)``.

The functions here operate on one state at a time and favour clarity; the
batched hot paths used for training live in :mod:`hqnn._kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation

MAX_QUBITS = 12
NORM_TOL = 1e-10  # unit norm / trace / Hermiticity tolerance

GATE_KINDS = ("RX", "RY", "RZ", "H", "CX", "CZ", "CRX", "CRZ")
PARAMETERIZED = frozenset({"RX", "RY", "RZ", "CRX", "CRZ"})
CONTROLLED = frozenset({"CX", "CZ", "CRX", "CRZ"})

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class GateOp:
    """One gate in a circuit.

    ``param_slot`` indexes the angle vector the gate reads at run time.  It is
    required for rotations (plain or controlled) and forbidden otherwise.
    """

    kind: str
    target: int
    control: Optional[int] = None
    param_slot: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        if self.target < 0 or (self.control is not None and self.control < 0):
            raise ConfigurationError(f"negative qubit index in {self}")
        if (self.kind in CONTROLLED) != (self.control is not None):
            raise ContractViolation(f"{self.kind} control qubit mismatch: {self.control}")
        if self.control is not None and self.control == self.target:
            raise ConfigurationError(f"control equals target in {self}")
        if (self.kind in PARAMETERIZED) != (self.param_slot is not None):
            raise ContractViolation(f"{self.kind} param slot mismatch: {self.param_slot}")

    @property
    def qubits(self) -> tuple:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)

    @property
    def is_parameterized(self) -> bool:
        return self.kind in PARAMETERIZED

    @property
    def is_two_qubit(self) -> bool:
        return self.control is not None

    def with_slot(self, slot: Optional[int]) -> "GateOp":
        return GateOp(self.kind, self.target, self.control, slot)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of ``exp(-i angle P / 2)`` for ``P`` in X, Y, Z."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    raise ConfigurationError(f"unknown rotation axis {axis!r}")


def gate_block(kind: str, angle: Optional[float] = None) -> np.ndarray:
    """2x2 block acting on the target (conditioned on control=|1> if controlled)."""
    if kind in ("RX", "RY", "RZ"):
        return rotation_matrix(kind[1], angle)
    if kind in ("CRX", "CRZ"):
        return rotation_matrix(kind[2], angle)
    if kind == "H":
        return HADAMARD
    if kind == "CX":
        return PAULI["X"]
    if kind == "CZ":
        return PAULI["Z"]
    raise ConfigurationError(f"unknown gate kind {kind!r}")


@dataclass
class QuantumState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.num_qubits,):
            raise ContractViolation(
                f"expected {2 ** self.num_qubits} amplitudes, got {self.amplitudes.shape}"
            )
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ContractViolation(f"state is not normalized (norm {self.norm()!r})")

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass
class DensityMatrix:
    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        dim = 2 ** self.num_qubits
        if self.entries.shape != (dim, dim):
            raise ContractViolation(f"expected {dim}x{dim} matrix, got {self.entries.shape}")
        if np.max(np.abs(self.entries - self.entries.conj().T)) > NORM_TOL:
            raise ContractViolation("density matrix is not Hermitian")
        if abs(np.trace(self.entries) - 1.0) > NORM_TOL:
            raise ContractViolation(f"density matrix trace is {np.trace(self.entries)!r}, expected 1")
        if np.linalg.eigvalsh(self.entries).min() < -NORM_TOL:
            raise ContractViolation("density matrix has a negative eigenvalue")

    @classmethod
    def from_state(cls, state: QuantumState) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.num_qubits, np.outer(psi, psi.conj()))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def _check_qubits(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be in 1..{MAX_QUBITS}, got {n!r}")


def _check_gate(n: int, gate: GateOp, angle: Optional[float]) -> None:
    for q in gate.qubits:
        if q >= n:
            raise ConfigurationError(f"qubit index {q} out of range for {n} qubits")
    if gate.is_parameterized and angle is None:
        raise ContractViolation(f"{gate.kind} requires an angle")
    if not gate.is_parameterized and angle is not None:
        raise ContractViolation(f"{gate.kind} takes no angle")


def zero_state(num_qubits: int = 4) -> QuantumState:
    _check_qubits(num_qubits)
    amps = np.zeros(2 ** num_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(num_qubits, amps)


def _apply_block(tensor: np.ndarray, block: np.ndarray, target: int,
                 control: Optional[int], offset: int = 0) -> np.ndarray:
    # tensor has one length-2 axis per qubit starting at `offset`; returns a new array
    out = tensor.copy()
    t_ax = offset + target
    if control is None:
        moved = np.moveaxis(tensor, t_ax, 0)
        np.moveaxis(out, t_ax, 0)[...] = np.tensordot(block, moved, axes=([1], [0]))
        return out
    c_ax = offset + control
    idx = [slice(None)] * tensor.ndim
    idx[c_ax] = 1
    idx = tuple(idx)
    sub = tensor[idx]
    # axes after removing the control axis shift down by one
    sub_t = t_ax - 1 if t_ax > c_ax else t_ax
    moved = np.moveaxis(sub, sub_t, 0)
    new_sub = np.moveaxis(np.tensordot(block, moved, axes=([1], [0])), 0, sub_t)
    out[idx] = new_sub
    return out


def apply_gate(state: QuantumState, gate: GateOp, angle: Optional[float] = None) -> QuantumState:
    """Return ``G |state>`` as a new state."""
    n = state.num_qubits
    _check_gate(n, gate, angle)
    block = gate_block(gate.kind, angle)
    psi = state.amplitudes.reshape((2,) * n)
    psi = _apply_block(psi, block, gate.target, gate.control)
    return QuantumState(n, psi.reshape(-1))


def pauli_expectation(state: QuantumState, axis: str, qubit: int) -> float:
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ConfigurationError(f"qubit index {qubit} out of range for {n} qubits")
    if axis not in PAULI:
        raise ConfigurationError(f"unknown Pauli axis {axis!r}")
    psi = state.amplitudes.reshape((2,) * n)
    applied = _apply_block(psi, PAULI[axis], qubit, None)
    return float(np.vdot(psi.reshape(-1), applied.reshape(-1)).real)


def feature_vector(state: QuantumState) -> np.ndarray:
    """``[<Z_0..Z_3>, <X_0..X_3>, <Y_0..Y_3>]`` for a 4-qubit state."""
    if state.num_qubits != 4:
        raise ContractViolation(f"feature vector is defined for 4 qubits, got {state.num_qubits}")
    return np.array([pauli_expectation(state, axis, q) for axis in "ZXY" for q in range(4)])


def state_fidelity(a: QuantumState, b: QuantumState) -> float:
    if a.num_qubits != b.num_qubits:
        raise ContractViolation("fidelity between states of different sizes")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def dm_apply_gate(rho: DensityMatrix, gate: GateOp, angle: Optional[float] = None) -> DensityMatrix:
    """Return ``U rho U^dagger``."""
    n = rho.num_qubits
    _check_gate(n, gate, angle)
    block = gate_block(gate.kind, angle)
    t = rho.entries.reshape((2,) * (2 * n))
    t = _apply_block(t, block, gate.target, gate.control, offset=0)
    t = _apply_block(t, block.conj(), gate.target, gate.control, offset=n)
    return DensityMatrix(n, t.reshape(2 ** n, 2 ** n))


def _embed(ops: dict, n: int) -> np.ndarray:
    # Kronecker product with `ops[q]` on qubit q and identity elsewhere
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, ops.get(q, I2))
    return out


def dm_depolarize(rho: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    """Uniform Pauli depolarizing channel on one or two qubits.

    One qubit: ``(1-p) rho + p/3 sum_{P in X,Y,Z} P rho P``.
    Two qubits: ``(1-p) rho + p/15 sum_{P != II} P rho P``.
    """
    n = rho.num_qubits
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"depolarizing probability must be in [0, 1], got {p}")
    qubits = tuple(qubits)
    if len(qubits) not in (1, 2) or len(set(qubits)) != len(qubits):
        raise ConfigurationError(f"depolarizing acts on 1 or 2 distinct qubits, got {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise ConfigurationError(f"qubit index {q} out of range for {n} qubits")
    labels = ("I", "X", "Y", "Z")
    mats = {"I": I2, **PAULI}
    if len(qubits) == 1:
        terms = [(l,) for l in labels[1:]]
    else:
        terms = [(a, b) for a in labels for b in labels if (a, b) != ("I", "I")]
    acc = np.zeros_like(rho.entries)
    for term in terms:
        P = _embed({q: mats[l] for q, l in zip(qubits, term)}, n)
        acc += P @ rho.entries @ P
    return DensityMatrix(n, (1.0 - p) * rho.entries + (p / len(terms)) * acc)


def dm_pauli_expectation(rho: DensityMatrix, axis: str, qubit: int) -> float:
    n = rho.num_qubits
    if not 0 <= qubit < n:
        raise ConfigurationError(f"qubit index {qubit} out of range for {n} qubits")
    P = _embed({qubit: PAULI[axis]}, n)
    return float(np.trace(rho.entries @ P).real)


def dm_feature_vector(rho: DensityMatrix) -> np.ndarray:
    if rho.num_qubits != 4:
        raise ContractViolation(f"feature vector is defined for 4 qubits, got {rho.num_qubits}")
    return np.array([dm_pauli_expectation(rho, axis, q) for axis in "ZXY" for q in range(4)])
