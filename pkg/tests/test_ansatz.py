import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqnn import _kernels, ansatz
from hqnn.ansatz import MixedSequence, SingleTemplate
from hqnn.errors import ConfigurationError

import oracles

# Unit layers transcribed as written, leftmost factor first (it acts last).
# "ZX@0123" is the per-qubit product R_Z R_X over the listed qubits (R_X acts first);
# "CRZ:c,t" is a controlled rotation with control c and target t.
WRITTEN = {
    1: "ZX@0123",
    2: "CX:2,3 CX:1,2 CX:0,1 ZX@0123",
    3: "CRZ:2,3 CRZ:1,2 CRZ:0,1 ZX@0123",
    4: "CRX:2,3 CRX:1,2 CRX:0,1 ZX@0123",
    5: "ZX@0123 CRZ:2,3 CRZ:1,3 CRZ:1,2 CRZ:0,3 CRZ:0,2 CRZ:0,1 ZX@0123",
    6: "ZX@0123 CRX:2,3 CRX:1,3 CRX:1,2 CRX:0,3 CRX:0,2 CRX:0,1 ZX@0123",
    7: "ZX@12 CRZ:1,2 ZX@12 CRZ:2,3 CRZ:0,1 ZX@0123",
    8: "ZX@12 CRX:1,2 ZX@12 CRX:2,3 CRX:0,1 ZX@0123",
    9: "X@0123 CX:1,2 CX:2,3 CX:0,1 H@0123",
    10: "Y@03 CZ:0,3 CZ:1,2 Y@12 CZ:2,3 CZ:0,1 Y@0123",
    11: "CX:2,1 ZY@12 CX:3,2 CX:1,0 ZY@0123",
    12: "CZ:1,2 ZY@12 CZ:2,3 CZ:0,1 ZY@0123",
    13: "CRZ:2,1 CRZ:3,2 CRZ:0,3 CRZ:1,0 Y@0123 CRZ:0,1 CRZ:1,2 CRZ:2,3 CRZ:3,0 Y@0123",
    14: "CRX:2,1 CRX:3,2 CRX:0,3 CRX:1,0 Y@0123 CRX:0,1 CRX:1,2 CRX:2,3 CRX:3,0 Y@0123",
    15: "CX:2,1 CX:3,2 CX:0,3 CX:1,0 Y@0123 CX:0,1 CX:1,2 CX:2,3 CX:3,0 Y@0123",
    16: "CRZ:1,2 CRZ:2,3 CRZ:0,1 ZX@0123",
    17: "CRX:1,2 CRX:2,3 CRX:0,1 ZX@0123",
    18: "CRZ:0,1 CRZ:1,2 CRZ:2,3 CRZ:3,0 ZX@0123",
    19: "CRX:0,1 CRX:1,2 CRX:2,3 CRX:3,0 ZX@0123",
}
PARAMS_PER_LEVEL = {1: 8, 2: 8, 3: 11, 4: 11, 5: 22, 6: 22, 7: 19, 8: 19, 9: 4, 10: 8, 11: 12, 12: 12,
                    13: 16, 14: 16, 15: 8, 16: 11, 17: 11, 18: 12, 19: 12}


def _factor_gates(token):
    """Gates of one written factor, in execution order."""
    if ":" in token:
        kind, pair = token.split(":")
        c, t = (int(v) for v in pair.split(","))
        return [(kind, t, c)]
    axes, qubits = token.split("@")
    gates = []
    for q in sorted(int(ch) for ch in qubits):
        for axis in reversed(axes):  # rightmost letter acts first
            gates.append(("H" if axis == "H" else "R" + axis, q, None))
    return gates


def written_unitary(template, params):
    factors = WRITTEN[template].split()
    # slots follow execution order: rightmost factor first
    slot_of, slot = {}, 0
    for fi in reversed(range(len(factors))):
        for gi, (kind, _, _) in enumerate(_factor_gates(factors[fi])):
            if kind not in ("H", "CX", "CZ"):
                slot_of[(fi, gi)] = slot
                slot += 1
    U = np.eye(16, dtype=complex)
    for fi, token in enumerate(factors):
        F = np.eye(16, dtype=complex)
        for gi, (kind, t, c) in enumerate(_factor_gates(token)):
            theta = params[slot_of[(fi, gi)]] if (fi, gi) in slot_of else None
            F = oracles.gate_unitary(4, kind, t, c, theta) @ F
        U = U @ F
    return U, slot


class TestBuildTemplate:
    def test_template_1(self):
        gates = ansatz.build_template(1)
        assert [g.kind for g in gates] == ["RX", "RZ"] * 4
        assert [g.target for g in gates] == [0, 0, 1, 1, 2, 2, 3, 3]
        assert sum(g.is_two_qubit for g in gates) == 0

    def test_template_9(self):
        gates = ansatz.build_template(9)
        assert [(g.kind, g.control, g.target) for g in gates] == (
            [("H", None, q) for q in range(4)] + [("CX", 0, 1), ("CX", 2, 3), ("CX", 1, 2)]
            + [("RX", None, q) for q in range(4)])
        assert sum(g.is_parameterized for g in gates) == 4

    def test_template_13(self):
        gates = ansatz.build_template(13)
        kinds = [g.kind for g in gates]
        assert kinds == ["RY"] * 4 + ["CRZ"] * 4 + ["RY"] * 4 + ["CRZ"] * 4
        assert [(g.control, g.target) for g in gates[4:8]] == [(3, 0), (2, 3), (1, 2), (0, 1)]
        assert sum(g.is_parameterized for g in gates) == 16
        assert sum(g.is_two_qubit for g in gates) == 8

    @pytest.mark.parametrize("bad", [0, 20, -3])
    def test_unknown(self, bad):
        with pytest.raises(ConfigurationError):
            ansatz.build_template(bad)

    @pytest.mark.parametrize("template", range(1, 20))
    def test_params_per_level(self, template):
        assert sum(g.is_parameterized for g in ansatz.build_template(template)) == PARAMS_PER_LEVEL[template]

    @pytest.mark.parametrize("template", range(1, 20))
    def test_written_order_reversal(self, template, rng):
        c = ansatz.compile(SingleTemplate(template, 1))
        params = rng.uniform(-np.pi, np.pi, c.num_params)
        U, n_slots = written_unitary(template, params)
        assert n_slots == c.num_params
        psi0 = np.zeros(16, dtype=complex)
        psi0[0] = 1
        angles = np.concatenate([np.zeros(4), params])[None, :]
        got = _kernels.backend.sv_states(c.ops, 4, angles)[0]
        assert np.max(np.abs(got - U @ psi0)) < 1e-12


class TestCompile:
    def test_pins(self):
        assert ansatz.compile(SingleTemplate(13, 4)).num_params == 64
        assert ansatz.compile(MixedSequence((13, 5))).num_params == 38
        assert ansatz.compile(SingleTemplate(9, 1)).num_params == 4

    @pytest.mark.parametrize("template", range(1, 20))
    def test_params_scale_with_levels(self, template):
        for L in range(1, 6):
            c = ansatz.compile(SingleTemplate(template, L))
            assert c.num_params == L * PARAMS_PER_LEVEL[template]
            slots = [g.param_slot for g in c.variational_gates if g.is_parameterized]
            assert slots == list(range(c.num_params))

    def test_encoding_layer_once(self):
        c = ansatz.compile(SingleTemplate(2, 3))
        assert [(g.kind, g.target, g.param_slot) for g in c.encoding_gates] == [("RX", q, q) for q in range(4)]
        assert c.num_angles == 4 + c.num_params
        assert c.ops.shape == (4 + len(c.variational_gates), 4)

    def test_mixed_is_concatenation(self):
        a = ansatz.compile(SingleTemplate(13, 1))
        b = ansatz.compile(SingleTemplate(5, 1))
        m = ansatz.compile(MixedSequence((13, 5)))
        shifted = [g if not g.is_parameterized else g.with_slot(g.param_slot + a.num_params)
                   for g in b.variational_gates]
        assert list(m.variational_gates) == list(a.variational_gates) + shifted
        assert m.encoding_gates == a.encoding_gates

    @pytest.mark.parametrize("levels", [0, 6])
    def test_bad_levels(self, levels):
        with pytest.raises(ConfigurationError):
            SingleTemplate(1, levels)

    def test_bad_mixed(self):
        with pytest.raises(ConfigurationError):
            MixedSequence(())
        with pytest.raises(ConfigurationError):
            MixedSequence((1, 42))

    def test_ops_read_only(self):
        c = ansatz.compile(SingleTemplate(1, 1))
        with pytest.raises(ValueError):
            c.ops[0, 0] = 3

    def test_labels(self):
        assert ansatz.compile(SingleTemplate(13, 4)).label == "T13xL4"
        assert ansatz.compile(MixedSequence((13, 5))).label == "(13,5)"


class TestDescriptors:
    def test_template_1(self):
        d = ansatz.compile(SingleTemplate(1, 1)).descriptors
        assert d.two_qubit_gate_count == 0 and d.entangler_family == "None"

    def test_families(self):
        fam = lambda t: ansatz.compile(SingleTemplate(t, 1)).descriptors.entangler_family
        assert fam(15) == "CNOT-like"
        assert fam(10) == "CNOT-like"
        assert fam(13) == "CR"
        assert ansatz.compile(MixedSequence((2, 3))).descriptors.entangler_family == "Mixed"

    @pytest.mark.parametrize("template", range(1, 20))
    def test_depth_stacks(self, template):
        d1 = ansatz.compile(SingleTemplate(template, 1)).descriptors.depth
        d2 = ansatz.compile(SingleTemplate(template, 2)).descriptors.depth
        assert d2 == 2 * d1

    def test_known_depths(self):
        depths = [ansatz.compile(SingleTemplate(t, 1)).descriptors.depth for t in range(1, 20)]
        assert depths == [2, 5, 5, 5, 9, 9, 8, 8, 4, 4, 6, 6, 10, 10, 10, 4, 4, 6, 6]

    def test_pure_function_of_gates(self):
        a = ansatz.compile(SingleTemplate(7, 2))
        b = ansatz.compile(SingleTemplate(7, 2))
        assert a.descriptors == b.descriptors == ansatz.descriptors(a)

    @given(st.lists(st.integers(1, 19), min_size=1, max_size=4))
    @settings(max_examples=40, deadline=None)
    def test_mixed_counts_add(self, seq):
        m = ansatz.compile(MixedSequence(tuple(seq))).descriptors
        parts = [ansatz.compile(SingleTemplate(t, 1)).descriptors for t in seq]
        assert m.param_count == sum(p.param_count for p in parts)
        assert m.depth == sum(p.depth for p in parts)
        assert m.two_qubit_gate_count == sum(p.two_qubit_gate_count for p in parts)


class TestCatalog:
    def test_listing(self):
        cat = ansatz.list_templates()
        assert len(cat) == 19
        assert all(info.descriptors.param_count >= 4 for info in cat)
        assert min(cat, key=lambda i: i.descriptors.param_count).template == 9

    @pytest.mark.parametrize("pair", ansatz.MATCHED_PAIRS)
    def test_matched_pairs_differ_only_in_entangler(self, pair):
        a, b = (ansatz.build_template(t) for t in pair)
        swap = {"CRZ": "CRX"}
        assert len(a) == len(b)
        for ga, gb in zip(a, b):
            assert (swap.get(ga.kind, ga.kind), ga.target, ga.control, ga.param_slot) == \
                   (gb.kind, gb.target, gb.control, gb.param_slot)

    def test_csv_surfaces_param_conflict(self, tmp_path):
        path = tmp_path / "catalog.csv"
        ansatz.write_catalog(path)
        rows = list(csv.DictReader(open(path)))
        assert len(rows) == 19
        assert list(rows[0]) == list(ansatz.CATALOG_COLUMNS)
        by_id = {int(r["id"]): r for r in rows}
        for t in (5, 6):
            assert by_id[t]["param_count_L5"] == "110"
            assert "140" in by_id[t]["note"]
        assert by_id[13]["param_count_L5"] == "80"
