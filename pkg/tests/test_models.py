import json

import numpy as np
import pytest

from hqnn import ansatz, models
from hqnn.ansatz import SingleTemplate
from hqnn.dataset import fit_standardizer, synthesize
from hqnn.errors import ConfigurationError, UsageError
from hqnn.models import DualBranchModel, MLPBaseline, StrictBottleneckModel, TrainConfig


@pytest.fixture(scope="module")
def t1():
    return ansatz.compile(SingleTemplate(1, 1))


@pytest.fixture(scope="module")
def t13():
    return ansatz.compile(SingleTemplate(13, 1))


def _tiny(backbone, circuit, seed=0, noise=None):
    if backbone == "strict":
        return StrictBottleneckModel(circuit, seed=seed, encoder_widths=(8, 4), noise=noise)
    if backbone == "dual":
        return DualBranchModel(circuit, seed=seed, trunk_widths=(8, 6), branch_width=3, noise=noise)
    return MLPBaseline(seed=seed, widths=(8, 5, 6))


def _fd_grads(model, x, t, h=1e-6):
    out = {}
    for name, arr in model.params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = models.loss_and_gradients(model, x, t)[0]
            arr[idx] = old - h
            down = models.loss_and_gradients(model, x, t)[0]
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        out[name] = g
    return out


class TestForward:
    def test_zero_head_gives_biases(self, t1, rng):
        m = StrictBottleneckModel(t1, seed=3)
        m.params["head.W"][...] = 0
        m.params["head.b"][...] = np.arange(6.0)
        pred = m.predict(rng.normal(size=(5, 24)))
        np.testing.assert_array_equal(pred, np.tile(np.arange(6.0), (5, 1)))

    def test_composed_identity_case(self, t1, rng):
        # zero encoder output -> zero angles -> |0000> with trainable angles zero
        m = StrictBottleneckModel(t1, seed=1)
        for k in m.params:
            if k.startswith("encoder"):
                m.params[k][...] = 0
        m.params["quantum"][...] = 0
        q = np.array([1.0] * 4 + [0.0] * 8)
        want = m.params["head.W"] @ q + m.params["head.b"]
        pred = m.predict(rng.normal(size=(3, 24)))
        np.testing.assert_allclose(pred, np.tile(want, (3, 1)), atol=1e-14)

    def test_strict_has_no_bypass(self, t13, rng):
        # a hook fixing the quantum features makes the output input-independent
        m = StrictBottleneckModel(t13, seed=2)
        m.quantum_hook = lambda q: np.zeros_like(q)
        pred = m.predict(rng.normal(size=(4, 24)))
        np.testing.assert_array_equal(pred, np.tile(m.params["head.b"], (4, 1)))

    def test_dual_quantum_only_heads(self, t13, rng):
        m = DualBranchModel(t13, seed=4)
        x = rng.normal(size=(6, 24))
        before = m.predict(x)
        m.params["branch.W"][...] = rng.normal(size=m.params["branch.W"].shape)
        m.params["branch.b"][...] += 1.0
        after = m.predict(x)
        np.testing.assert_array_equal(after[:, 4:], before[:, 4:])
        assert np.any(after[:, :4] != before[:, :4])

    def test_shapes_and_counts(self, t13):
        m = StrictBottleneckModel(t13)
        assert m.num_parameters == (24 * 64 + 64) + (64 * 32 + 32) + (32 * 16 + 16) + (16 * 4 + 4) + 16 + (12 * 6 + 6)
        assert models.build_model("mlp").num_parameters == 24 * 64 + 64 + 64 * 32 + 32 + 32 * 16 + 16 + 16 * 6 + 6
        with pytest.raises(ConfigurationError):
            models.build_model("cnn", t13)

    @pytest.mark.parametrize("bad", [np.zeros((2, 23)), np.zeros((0, 24)), np.full((1, 24), np.nan)])
    def test_bad_features(self, t1, bad):
        with pytest.raises(UsageError):
            StrictBottleneckModel(t1).predict(bad)

    def test_unfitted_records(self, t1):
        with pytest.raises(UsageError):
            models.predict_records(StrictBottleneckModel(t1), synthesize(3))


class TestGradients:
    def test_zero_at_target(self, t13, rng):
        m = DualBranchModel(t13, seed=0)
        x = rng.normal(size=(4, 24))
        loss, grads = models.loss_and_gradients(m, x, m.predict(x))
        assert loss == 0
        assert all(np.all(g == 0) for g in grads.values())

    @pytest.mark.parametrize("template", [1, 13])
    @pytest.mark.parametrize("backbone", models.BACKBONES)
    def test_match_finite_differences(self, backbone, template, rng):
        m = _tiny(backbone, ansatz.compile(SingleTemplate(template, 1)), seed=template)
        x = rng.normal(size=(3, 8))
        t = rng.normal(size=(3, 6))
        _, grads = models.loss_and_gradients(m, x, t)
        fd = _fd_grads(m, x, t)
        assert list(grads) == list(m.params)
        for name in grads:
            err = np.abs(grads[name] - fd[name])
            assert np.all(err <= 1e-4 * np.maximum(np.abs(fd[name]), 1e-3)), name

    def test_noisy_model_gradients(self, t13, rng):
        m = _tiny("strict", t13, seed=5, noise=(0.02, 0.03))
        x = rng.normal(size=(2, 8))
        t = rng.normal(size=(2, 6))
        _, grads = models.loss_and_gradients(m, x, t)
        fd = _fd_grads(m, x, t)
        for name in grads:
            assert np.all(np.abs(grads[name] - fd[name]) <= 1e-4 * np.maximum(np.abs(fd[name]), 1e-3)), name

    def test_weight_linearity(self, t13, rng):
        m = StrictBottleneckModel(t13, seed=0)
        x, t = rng.normal(size=(5, 24)), rng.normal(size=(5, 6))
        l1, g1 = models.loss_and_gradients(m, x, t, np.ones(6))
        l2, g2 = models.loss_and_gradients(m, x, t, 2 * np.ones(6))
        assert l2 == pytest.approx(2 * l1, rel=1e-14)
        for k in g1:
            np.testing.assert_allclose(g2[k], 2 * g1[k], rtol=1e-13, atol=1e-300)

    def test_target_shape(self, t1):
        with pytest.raises(UsageError):
            models.loss_and_gradients(StrictBottleneckModel(t1), np.zeros((2, 24)), np.zeros((2, 5)))


def _toy(rng, n):
    x = rng.normal(size=(n, 24))
    A = rng.normal(scale=0.3, size=(24, 6))
    return x, x @ A + 0.01 * rng.normal(size=(n, 6))


class TestTrain:
    def test_fits_linear_toy(self, rng):
        x, y = _toy(rng, 120)
        m = MLPBaseline(seed=0)
        initial = models.loss_and_gradients(m, x[:80], y[:80])[0]
        _, hist = models.train(m, (x[:80], y[:80]), (x[80:], y[80:]), TrainConfig(epochs=200, learning_rate=1e-2))
        assert hist.train_loss[-1] < 0.1 * initial

    def test_hybrid_loss_decreases(self, t13, rng):
        x, y = _toy(rng, 40)
        m = StrictBottleneckModel(t13, seed=0)
        _, hist = models.train(m, (x[:30], y[:30]), (x[30:], y[30:]), TrainConfig(epochs=30, learning_rate=1e-2))
        assert hist.train_loss[-1] < hist.train_loss[0]

    def test_deterministic(self, t13, rng):
        x, y = _toy(rng, 40)
        cfg = TrainConfig(epochs=8, batch_size=7, seed=11)
        runs = []
        for _ in range(2):
            m, h = models.train(DualBranchModel(t13, seed=2), (x[:30], y[:30]), (x[30:], y[30:]), cfg)
            runs.append((h.to_dict(), json.dumps(models.model_to_dict(m))))
        assert runs[0] == runs[1]

    def test_history_and_best_params(self, rng):
        x, y = _toy(rng, 40)
        m = MLPBaseline(seed=1)
        seen = []
        _, h = models.train(m, (x[:30], y[:30]), (x[30:], y[30:]), TrainConfig(epochs=12, learning_rate=0.05),
                            on_epoch=lambda e, tl, vl: seen.append(e))
        assert len(h) == len(h.val_loss) == 12 and seen == list(range(12))
        assert models.batch_loss(m, x[30:], y[30:], models.LossWeights()) == pytest.approx(min(h.val_loss))
        assert h.val_loss[h.best_epoch] == min(h.val_loss)

    def test_early_stop(self, rng):
        x, y = _toy(rng, 40)
        # a huge step size makes validation loss stall quickly
        _, h = models.train(MLPBaseline(seed=0), (x[:30], y[:30]), (x[30:], y[30:]),
                            TrainConfig(epochs=200, learning_rate=5.0, patience=3))
        assert len(h) < 200
        assert len(h) - 1 - h.best_epoch == 3

    def test_empty_split(self, rng):
        x, y = _toy(rng, 10)
        with pytest.raises(UsageError):
            models.train(MLPBaseline(), (x[:0], y[:0]), (x, y), TrainConfig(epochs=1))
        with pytest.raises(UsageError):
            models.train(MLPBaseline(), (x, y), (x[:0], y[:0]), TrainConfig(epochs=1))

    @pytest.mark.parametrize("kw", [{"epochs": 0}, {"learning_rate": 0}, {"batch_size": 0}, {"patience": -1},
                                    {"loss_weights": (1, 1, 1, 1, 1, 0)}])
    def test_bad_config(self, kw):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kw)


class TestEvaluate:
    @pytest.fixture
    def setup(self, t1):
        recs = synthesize(60, 2)
        std = fit_standardizer(recs)
        return recs, std, std.transform_features(recs), std.transform_targets(recs)

    def test_perfect(self, setup):
        recs, std, x, z = setup
        raw = std.invert_targets(z)
        rep = models.evaluate(_Oracle(z), x, raw, std)
        assert all(v == pytest.approx(1.0) for v in rep.r2.values())
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in rep.rmse.values())

    def test_mean_predictor(self, setup):
        recs, std, x, z = setup
        raw = std.invert_targets(z)
        mean = np.tile(std._pre(raw).mean(axis=0), (len(z), 1))
        zmean = (mean - std.target_mean) / std.target_std
        rep = models.evaluate(_Oracle(zmean), x, raw, std)
        for name, v in rep.r2.items():
            if name != "ioff_a":
                assert v == pytest.approx(0, abs=1e-9)

    def test_requires_iqr(self, setup, t1):
        _, std, x, z = setup
        std.target_iqr = None
        with pytest.raises(UsageError):
            models.evaluate(StrictBottleneckModel(t1), x, z, std)


class _Oracle(MLPBaseline):
    """Returns fixed standardized predictions."""

    def __init__(self, z):
        super().__init__()
        self._z = z

    def forward(self, x, need_cache=False):
        return self._z[: x.shape[0]], None


class TestSerialization:
    @pytest.mark.parametrize("backbone", models.BACKBONES)
    def test_bitwise_round_trip(self, backbone, t13, tmp_path, rng):
        m = models.build_model(backbone, t13, seed=9, noise=(0.01, 0.005) if backbone != "mlp" else None)
        m.standardizer = fit_standardizer(synthesize(30, 1))
        m.metadata["note"] = "x"
        path = tmp_path / "m.json"
        models.save_model(m, path)
        back = models.load_model(path)
        for k in m.params:
            assert m.params[k].tobytes() == back.params[k].tobytes()
        x = rng.normal(size=(3, 24))
        assert m.predict(x).tobytes() == back.predict(x).tobytes()
        models.save_model(back, tmp_path / "again.json")
        assert path.read_bytes() == (tmp_path / "again.json").read_bytes()
        assert back.metadata == {"note": "x"} and back.noise == m.noise

    def test_rejects_foreign(self, tmp_path, t1):
        doc = models.model_to_dict(StrictBottleneckModel(t1))
        for bad in ({**doc, "format": "other"}, {**doc, "version": 99}, {**doc, "backbone": "rnn"}):
            with pytest.raises(ConfigurationError):
                models.model_from_dict(bad)
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            models.load_model(path)

    def test_shape_mismatch(self, t1):
        doc = models.model_to_dict(StrictBottleneckModel(t1))
        doc["params"]["head.b"]["shape"] = [7]
        with pytest.raises(ConfigurationError):
            models.model_from_dict(doc)
