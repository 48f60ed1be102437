import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqnn import ansatz, diffgrad, noisestudy
from hqnn.ansatz import CompiledCircuit, SingleTemplate
from hqnn.dataset import TARGETS, prepare, synthesize
from hqnn.errors import ConfigurationError, UsageError
from hqnn.models import StrictBottleneckModel, TrainConfig, evaluate, train
from hqnn.noisestudy import NoiseGridPoint


@pytest.fixture(scope="module")
def data():
    return prepare(synthesize(60, 5), split_seed=1)


@pytest.fixture(scope="module")
def trained(data):
    model = StrictBottleneckModel(ansatz.compile(SingleTemplate(1, 1)), seed=0)
    train(model, data.arrays("train"), data.arrays("val"), TrainConfig(epochs=5, learning_rate=1e-2))
    return model


def _point(r2, overall=None, p1=0.0, p2=0.0):
    r2 = dict(zip(TARGETS, r2))
    return NoiseGridPoint(p1, p2, r2, float(np.mean(list(r2.values()))) if overall is None else overall)


class TestNoisyForward:
    @pytest.mark.parametrize("template", [1, 5, 13])
    def test_noiseless_matches_statevector(self, template, rng):
        c = ansatz.compile(SingleTemplate(template, 2))
        x = rng.uniform(-np.pi, np.pi, 4)
        p = rng.uniform(-np.pi, np.pi, c.num_params)
        got = noisestudy.noisy_forward(c, x, p, 0.0, 0.0)
        assert np.max(np.abs(got - diffgrad.forward(c, x, p))) < 1e-10

    def test_full_contraction(self, rng):
        c = ansatz.compile(SingleTemplate(1, 2))
        got = noisestudy.noisy_forward(c, rng.uniform(-3, 3, 4), rng.uniform(-3, 3, c.num_params), 0.75, 0.0)
        assert np.max(np.abs(got)) < 1e-10

    @given(st.integers(0, 2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_contraction_shrinks_features(self, seed):
        c = ansatz.compile(SingleTemplate(1, 1))
        r = np.random.default_rng(seed)
        x, p = r.uniform(-np.pi, np.pi, 4), r.uniform(-np.pi, np.pi, c.num_params)
        clean = noisestudy.noisy_forward(c, x, p, 0.0, 0.0)
        noisy = noisestudy.noisy_forward(c, x, p, 0.05, 0.0)
        assert np.all(np.abs(noisy) <= np.abs(clean) + 1e-12)
        # entanglement-free: each qubit passes through 3 noisy gates
        np.testing.assert_allclose(noisy, (1 - 4 * 0.05 / 3) ** 3 * clean, atol=1e-12)

    def test_encoding_gates_are_noisy(self, rng):
        base = ansatz.compile(SingleTemplate(1, 1))
        bare = CompiledCircuit(base.spec, base.encoding_gates, (), 0, (0,))
        x = rng.uniform(0.3, 1.2, 4)
        clean = noisestudy.noisy_forward(bare, x, np.zeros(0), 0.0, 0.0)
        noisy = noisestudy.noisy_forward(bare, x, np.zeros(0), 0.1, 0.0)
        np.testing.assert_allclose(noisy, (1 - 0.4 / 3) * clean, atol=1e-12)
        assert np.all(np.abs(noisy[:4]) < np.abs(clean[:4]))

    @pytest.mark.parametrize("p", [(-0.1, 0), (0, 1.5)])
    def test_bad_probability(self, p):
        c = ansatz.compile(SingleTemplate(1, 1))
        with pytest.raises(ConfigurationError):
            noisestudy.noisy_forward(c, np.zeros(4), np.zeros(8), *p)

    def test_default_circuit(self):
        c = noisestudy.default_circuit()
        assert c.label == "T13xL4" and c.num_params == 64


class TestSweep:
    def test_default_grid(self):
        assert noisestudy.DEFAULT_GRID == ((0, 0), (0.005, 0.005), (0.010, 0.005), (0.050, 0.005))

    def test_clean_point_equals_evaluate(self, trained, data):
        (pt,) = noisestudy.noise_sweep(trained, data, grid=[(0.0, 0.0)])
        rep = evaluate(trained, data.x["test"], data.y_raw["test"], data.standardizer)
        assert pt.r2 == rep.r2 and pt.overall_r2 == rep.overall_r2

    def test_does_not_mutate_model(self, trained, data):
        before = {k: v.copy() for k, v in trained.params.items()}
        noisestudy.noise_sweep(trained, data, grid=[(0.05, 0.01)], mode="retrain",
                               config=TrainConfig(epochs=1))
        assert trained.noise is None
        assert all(np.array_equal(before[k], trained.params[k]) for k in before)

    def test_collapse_to_biases(self, trained, data):
        local = trained.clone()
        local.set_noise((0.75, 0.0))
        np.testing.assert_allclose(local.predict(data.x["test"]),
                                   np.tile(local.params["head.b"], (len(data.x["test"]), 1)), atol=1e-10)

    def test_grid_order_and_jobs(self, trained, data):
        grid = [(0.05, 0.005), (0.0, 0.0), (0.01, 0.005)]
        serial = noisestudy.noise_sweep(trained, data, grid=grid)
        assert [(p.p1, p.p2) for p in serial] == grid
        assert noisestudy.noise_sweep(trained, data, grid=grid, jobs=2) == serial

    def test_bad_inputs(self, trained, data):
        with pytest.raises(ConfigurationError):
            noisestudy.noise_sweep(trained, data, mode="simulate")
        with pytest.raises(ConfigurationError):
            noisestudy.noise_sweep(trained, data, grid=[])
        with pytest.raises(ConfigurationError):
            noisestudy.noise_sweep(trained, data, grid=[(2.0, 0.0)])


class TestDelta:
    def test_identical(self):
        a = _point([0.9, 0.8, 0.7, 0.6, 0.5, 0.4])
        assert all(v == 0 for v in noisestudy.delta_r2(a, a).values())

    @given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
    def test_antisymmetric(self, vals):
        a, b = _point(vals[:6]), _point(vals[6:])
        ab, ba = noisestudy.delta_r2(a, b), noisestudy.delta_r2(b, a)
        assert all(ab[k] == -ba[k] for k in ab)
        assert set(ab) == set(TARGETS) | {"overall"}

    def test_target_mismatch(self):
        a = _point([0.0] * 6)
        b = NoiseGridPoint(0.0, 0.0, {"ion_a": 0.0}, 0.0)
        with pytest.raises(UsageError):
            noisestudy.delta_r2(a, b)


class TestCsv:
    def test_grid_and_delta(self, tmp_path):
        pts = [_point([0.9] * 6), _point([0.8] * 5 + [0.5], p1=0.05, p2=0.005)]
        noisestudy.write_grid_csv(pts, tmp_path / "g.csv")
        rows = list(csv.DictReader(open(tmp_path / "g.csv")))
        assert list(rows[0]) == ["p1", "p2", "overall", *TARGETS]
        assert float(rows[1]["p1"]) == 0.05 and float(rows[1]["ioff_a"]) == 0.5
        noisestudy.write_delta_csv(pts, tmp_path / "d.csv")
        rows = list(csv.DictReader(open(tmp_path / "d.csv")))
        assert len(rows) == 12
        last = rows[-1]
        assert last["target"] == "ioff_a" and float(last["delta_r2"]) == pytest.approx(-0.4)

    def test_empty_delta(self, tmp_path):
        with pytest.raises(UsageError):
            noisestudy.write_delta_csv([], tmp_path / "d.csv")
