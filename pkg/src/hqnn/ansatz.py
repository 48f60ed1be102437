"""The 19-template variational circuit family on four qubits.

Each template is written below as its operator product, factors listed
left to right exactly as the product reads.  Because the rightmost factor acts
first, :func:`_product` reverses the factor list to obtain execution order.

A compiled circuit is always::

    RX(theta_0..3) encoding layer  ->  level 1  ->  ...  ->  level L

where every level owns fresh trainable parameters.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from ._kernels import encode_ops
from .errors import ConfigurationError
from .qcore import GateOp

NUM_QUBITS = 4
NUM_TEMPLATES = 19
MAX_LEVELS = 5
ALL = (0, 1, 2, 3)

# matched pairs that differ only in the controlled-rotation axis
MATCHED_PAIRS = ((3, 4), (5, 6), (7, 8), (13, 14), (16, 17), (18, 19))


def _rot(kind, qubits):
    return [GateOp(kind, q, param_slot=0) for q in qubits]


def _rzrx(qubits=ALL):
    # R_Z R_X on each qubit: RX acts first
    out = []
    for q in qubits:
        out += [GateOp("RX", q, param_slot=0), GateOp("RZ", q, param_slot=0)]
    return out


def _rzry(qubits=ALL):
    out = []
    for q in qubits:
        out += [GateOp("RY", q, param_slot=0), GateOp("RZ", q, param_slot=0)]
    return out


def _c(kind, control, target):
    slot = 0 if kind in ("CRX", "CRZ") else None
    return [GateOp(kind, target, control=control, param_slot=slot)]


def _product(*factors):
    gates = []
    for factor in reversed(factors):
        gates.extend(factor)
    return gates


def _nn_chain(cr):
    return (_c(cr, 2, 3), _c(cr, 1, 2), _c(cr, 0, 1))


def _all_to_all(cr):
    return (_rzrx(), _c(cr, 2, 3), _c(cr, 1, 3), _c(cr, 1, 2), _c(cr, 0, 3),
            _c(cr, 0, 2), _c(cr, 0, 1), _rzrx())


def _blocked(cr):
    return (_rzrx((1, 2)), _c(cr, 1, 2), _rzrx((1, 2)), _c(cr, 2, 3), _c(cr, 0, 1), _rzrx())


def _circuit_block(ent):
    return (_c(ent, 2, 1), _c(ent, 3, 2), _c(ent, 0, 3), _c(ent, 1, 0), _rot("RY", ALL),
            _c(ent, 0, 1), _c(ent, 1, 2), _c(ent, 2, 3), _c(ent, 3, 0), _rot("RY", ALL))


def _ring(cr):
    return (_c(cr, 0, 1), _c(cr, 1, 2), _c(cr, 2, 3), _c(cr, 3, 0), _rzrx())


_TEMPLATES = {
    1: ("Nearest-neighbor (local)", lambda: _product(_rzrx())),
    2: ("Nearest-neighbor", lambda: _product(_c("CX", 2, 3), _c("CX", 1, 2), _c("CX", 0, 1), _rzrx())),
    3: ("Nearest-neighbor", lambda: _product(*_nn_chain("CRZ"), _rzrx())),
    4: ("Nearest-neighbor", lambda: _product(*_nn_chain("CRX"), _rzrx())),
    5: ("All-to-all", lambda: _product(*_all_to_all("CRZ"))),
    6: ("All-to-all", lambda: _product(*_all_to_all("CRX"))),
    7: ("Nearest-neighbor", lambda: _product(*_blocked("CRZ"))),
    8: ("Nearest-neighbor", lambda: _product(*_blocked("CRX"))),
    9: ("Nearest-neighbor", lambda: _product(
        _rot("RX", ALL), _c("CX", 1, 2), _c("CX", 2, 3), _c("CX", 0, 1), [GateOp("H", q) for q in ALL])),
    10: ("Ring topology", lambda: _product(
        _rot("RY", (0, 3)), _c("CZ", 0, 3), _c("CZ", 1, 2), _rot("RY", (1, 2)),
        _c("CZ", 2, 3), _c("CZ", 0, 1), _rot("RY", ALL))),
    11: ("Nearest-neighbor", lambda: _product(
        _c("CX", 2, 1), _rzry((1, 2)), _c("CX", 3, 2), _c("CX", 1, 0), _rzry())),
    12: ("Nearest-neighbor", lambda: _product(
        _c("CZ", 1, 2), _rzry((1, 2)), _c("CZ", 2, 3), _c("CZ", 0, 1), _rzry())),
    13: ("Circuit-block", lambda: _product(*_circuit_block("CRZ"))),
    14: ("Circuit-block", lambda: _product(*_circuit_block("CRX"))),
    15: ("Circuit-block", lambda: _product(*_circuit_block("CX"))),
    16: ("Nearest-neighbor", lambda: _product(_c("CRZ", 1, 2), _c("CRZ", 2, 3), _c("CRZ", 0, 1), _rzrx())),
    17: ("Nearest-neighbor", lambda: _product(_c("CRX", 1, 2), _c("CRX", 2, 3), _c("CRX", 0, 1), _rzrx())),
    18: ("Ring topology", lambda: _product(*_ring("CRZ"))),
    19: ("Ring topology", lambda: _product(*_ring("CRX"))),
}


def _check_id(template_id):
    if not isinstance(template_id, (int, np.integer)) or template_id not in _TEMPLATES:
        raise ConfigurationError(f"template id must be in 1..{NUM_TEMPLATES}, got {template_id!r}")


def connectivity(template_id: int) -> str:
    _check_id(template_id)
    return _TEMPLATES[template_id][0]


def build_template(template_id: int) -> List[GateOp]:
    """One level of a template in execution order.

    Parameterized gates carry level-local slots ``0..k-1``; :func:`compile`
    shifts them to global positions.
    """
    _check_id(template_id)
    gates = _TEMPLATES[template_id][1]()
    out, slot = [], 0
    for g in gates:
        if g.is_parameterized:
            out.append(g.with_slot(slot))
            slot += 1
        else:
            out.append(g)
    return out


@dataclass(frozen=True)
class SingleTemplate:
    template: int
    levels: int = 1

    def __post_init__(self):
        _check_id(self.template)
        if not isinstance(self.levels, (int, np.integer)) or not 1 <= self.levels <= MAX_LEVELS:
            raise ConfigurationError(f"levels must be in 1..{MAX_LEVELS}, got {self.levels!r}")

    @property
    def sequence(self) -> Tuple[int, ...]:
        return (self.template,) * self.levels

    @property
    def label(self) -> str:
        return f"T{self.template}xL{self.levels}"


@dataclass(frozen=True)
class MixedSequence:
    templates: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        if not self.templates:
            raise ConfigurationError("mixed sequence needs at least one template")
        for t in self.templates:
            _check_id(t)

    @property
    def sequence(self) -> Tuple[int, ...]:
        return self.templates

    @property
    def label(self) -> str:
        return "(" + ",".join(str(t) for t in self.templates) + ")"


CircuitSpec = Union[SingleTemplate, MixedSequence]


@dataclass(frozen=True)
class CircuitDescriptors:
    param_count: int
    depth: int
    two_qubit_gate_count: int
    entangler_family: str


@dataclass(frozen=True)
class CompiledCircuit:
    spec: CircuitSpec
    encoding_gates: Tuple[GateOp, ...]
    variational_gates: Tuple[GateOp, ...]
    num_params: int
    level_bounds: Tuple[int, ...]
    descriptors: CircuitDescriptors = field(init=False)
    ops: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "descriptors", descriptors(self))
        ops = encode_ops(self.variational_gates, slot_offset=NUM_QUBITS, input_gates=self.encoding_gates)
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @property
    def num_qubits(self) -> int:
        return NUM_QUBITS

    @property
    def num_angles(self) -> int:
        """Width of the combined angle vector: 4 encoding angles then the trainable ones."""
        return NUM_QUBITS + self.num_params

    @property
    def label(self) -> str:
        return self.spec.label


def _encoding_layer():
    return tuple(GateOp("RX", q, param_slot=q) for q in range(NUM_QUBITS))


def compile(spec: CircuitSpec) -> CompiledCircuit:  # noqa: A001 - mirrors the public API name
    """Encoding layer followed by one template level per entry of ``spec.sequence``."""
    if not isinstance(spec, (SingleTemplate, MixedSequence)):
        raise ConfigurationError(f"not a circuit spec: {spec!r}")
    gates, bounds, offset = [], [], 0
    for template_id in spec.sequence:
        level = build_template(template_id)
        width = 0
        for g in level:
            if g.is_parameterized:
                gates.append(g.with_slot(g.param_slot + offset))
                width += 1
            else:
                gates.append(g)
        offset += width
        bounds.append(len(gates))
    return CompiledCircuit(spec, _encoding_layer(), tuple(gates), offset, tuple(bounds))


def _schedule_depth(gates: Sequence[GateOp]) -> int:
    # greedy: each gate lands one layer after the latest layer touching its qubits
    free = [0] * NUM_QUBITS
    for g in gates:
        layer = max(free[q] for q in g.qubits) + 1
        for q in g.qubits:
            free[q] = layer
    return max(free)


def entangler_family(gates: Sequence[GateOp]) -> str:
    kinds = {g.kind for g in gates if g.is_two_qubit}
    if not kinds:
        return "None"
    if kinds <= {"CX", "CZ"}:
        return "CNOT-like"
    if kinds <= {"CRX", "CRZ"}:
        return "CR"
    return "Mixed"


def descriptors(circuit: CompiledCircuit) -> CircuitDescriptors:
    """Descriptors of the variational part (the shared encoding layer is excluded).

    Depth is the sum over levels of the greedy layer schedule of each level,
    so identical levels stack additively.
    """
    gates = circuit.variational_gates
    depth, start = 0, 0
    for end in circuit.level_bounds:
        depth += _schedule_depth(gates[start:end])
        start = end
    return CircuitDescriptors(
        param_count=sum(1 for g in gates if g.is_parameterized),
        depth=depth,
        two_qubit_gate_count=sum(1 for g in gates if g.is_two_qubit),
        entangler_family=entangler_family(gates),
    )


@dataclass(frozen=True)
class TemplateInfo:
    template: int
    connectivity: str
    descriptors: CircuitDescriptors
    params_at_max_level: int
    note: str = ""


_NOTES = {
    5: "gate enumeration gives 22 params/level (110 at L=5); the often-quoted 140 "
       "assumes 12 controlled rotations per level",
    6: "gate enumeration gives 22 params/level (110 at L=5); the often-quoted 140 "
       "assumes 12 controlled rotations per level",
}


def list_templates() -> List[TemplateInfo]:
    out = []
    for t in range(1, NUM_TEMPLATES + 1):
        c1 = compile(SingleTemplate(t, 1))
        out.append(TemplateInfo(
            template=t,
            connectivity=connectivity(t),
            descriptors=c1.descriptors,
            params_at_max_level=compile(SingleTemplate(t, MAX_LEVELS)).num_params,
            note=_NOTES.get(t, ""),
        ))
    return out


CATALOG_COLUMNS = ("id", "connectivity", "param_count", "depth", "two_qubit_count",
                   "family", "param_count_L5", "note")


def write_catalog(path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_COLUMNS)
        for info in list_templates():
            d = info.descriptors
            w.writerow([info.template, info.connectivity, d.param_count, d.depth,
                        d.two_qubit_gate_count, d.entangler_family, info.params_at_max_level,
                        info.note])
