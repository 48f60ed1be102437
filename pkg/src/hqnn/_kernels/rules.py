"""Gate opcodes and parameter-shift rules shared by both kernel backends."""
import math

import numpy as np

OPCODES = {"RX": 0, "RY": 1, "RZ": 2, "H": 3, "CX": 4, "CZ": 5, "CRX": 6, "CRZ": 7}

# d<O>/dt = sum_k coef_k * <O>(t + shift_k)
# Plain rotations have generator eigenvalues +-1/2, giving the two-term rule.
TWO_TERM = ((math.pi / 2, 0.5), (-math.pi / 2, -0.5))
# Controlled rotations have eigenvalues {0, 0, +-1/2}: frequencies 1/2 and 1.
_C_PLUS = (math.sqrt(2.0) + 1.0) / (4.0 * math.sqrt(2.0))
_C_MINUS = (math.sqrt(2.0) - 1.0) / (4.0 * math.sqrt(2.0))
FOUR_TERM = (
    (math.pi / 2, _C_PLUS),
    (-math.pi / 2, -_C_PLUS),
    (3 * math.pi / 2, -_C_MINUS),
    (-3 * math.pi / 2, _C_MINUS),
)


def shift_rule(kind):
    if kind in ("RX", "RY", "RZ"):
        return TWO_TERM
    if kind in ("CRX", "CRZ"):
        return FOUR_TERM
    raise ValueError(f"{kind} has no trainable angle")


def encode_ops(gates, slot_offset=0, input_gates=()):
    """Pack gate lists into an ``(n, 4)`` int32 table: kind, target, control, slot.

    ``input_gates`` keep their own slots; ``gates`` get ``slot_offset`` added.
    Unparameterized gates and missing controls are stored as -1.
    """
    rows = []
    for offset, seq in ((0, input_gates), (slot_offset, gates)):
        for g in seq:
            rows.append((
                OPCODES[g.kind],
                g.target,
                -1 if g.control is None else g.control,
                -1 if g.param_slot is None else g.param_slot + offset,
            ))
    return np.ascontiguousarray(np.array(rows, dtype=np.int32).reshape(-1, 4))
