import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hqnn import classnet
from hqnn.classnet import DenseLayer, LossWeights, OptimizerState
from hqnn.errors import ConfigurationError, ContractViolation

MODEL_SHAPES = [(24, 64), (64, 32), (32, 16), (16, 4), (16, 16), (28, 4), (12, 6), (12, 2), (8, 4), (4, 4)]


def _fd_layer(layer, x, g, h=1e-5):
    # central differences of L = sum(g * y) w.r.t. x, W and b
    def loss():
        return float(np.sum(g * classnet.dense_forward(layer, x)))

    out = []
    for arr in (x, layer.weights, layer.bias):
        grad = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = loss()
            arr[idx] = old - h
            down = loss()
            arr[idx] = old
            grad[idx] = (up - down) / (2 * h)
        out.append(grad)
    return out


class TestDense:
    def test_identity_layer(self, rng):
        x = rng.normal(size=(3, 5))
        layer = DenseLayer(np.eye(5), np.zeros(5), "identity")
        np.testing.assert_array_equal(classnet.dense_forward(layer, x), x)

    @pytest.mark.parametrize("act", classnet.ACTIVATIONS)
    def test_zero_input_gives_activated_bias(self, act, rng):
        layer = classnet.glorot_layer(rng, 3, 4, act)
        layer.bias[:] = rng.normal(size=4)
        y = classnet.dense_forward(layer, np.zeros((1, 3)))
        np.testing.assert_allclose(y[0], classnet._act(layer.bias, act))

    @pytest.mark.parametrize("shape", MODEL_SHAPES)
    @pytest.mark.parametrize("act", classnet.ACTIVATIONS)
    def test_backward_matches_finite_differences(self, shape, act, rng):
        if shape[0] * shape[1] > 600:
            shape = (shape[0] // 4, shape[1] // 4)
        layer = classnet.glorot_layer(rng, *shape, activation=act)
        layer.bias[:] = rng.normal(scale=0.1, size=shape[1])
        x = rng.normal(size=(3, shape[0]))
        g = rng.normal(size=(3, shape[1]))
        dx, dW, db = classnet.dense_backward(layer, x, g)
        for got, want in zip((dx, dW, db), _fd_layer(layer, x, g)):
            np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)

    def test_shape_errors(self, rng):
        layer = classnet.glorot_layer(rng, 3, 2)
        with pytest.raises(ContractViolation):
            classnet.dense_forward(layer, np.zeros((1, 4)))
        with pytest.raises(ContractViolation):
            classnet.dense_backward(layer, np.zeros((1, 3)), np.zeros((1, 3)))
        with pytest.raises(ContractViolation):
            DenseLayer(np.zeros((2, 3)), np.zeros(3))
        with pytest.raises(ConfigurationError):
            DenseLayer(np.zeros((2, 3)), np.zeros(2), "gelu")

    def test_glorot_bounds(self, rng):
        layer = classnet.glorot_layer(rng, 24, 64)
        assert np.all(np.abs(layer.weights) <= np.sqrt(6 / 88)) and np.all(layer.bias == 0)


class TestAngleMap:
    def test_origin(self):
        theta, d = classnet.bounded_angle_map(np.zeros(4))
        np.testing.assert_array_equal(theta, 0)
        np.testing.assert_allclose(d, np.pi)

    def test_saturation(self):
        # pi - pi tanh(h) = 2 pi e^-2h / (1 + e^-2h): 1.3e-8 at h = 10, below 1e-8 from h = 10.2
        theta, _ = classnet.bounded_angle_map(np.array([10.0, 10.2]))
        gap = np.pi - theta
        assert gap[0] == pytest.approx(2 * np.pi * np.exp(-20) / (1 + np.exp(-20)), rel=1e-6)
        assert gap[1] < 1e-8

    @given(arrays(float, 4, elements=st.floats(-50, 50)))
    @settings(max_examples=100, deadline=None)
    def test_odd_and_bounded(self, h):
        theta, d = classnet.bounded_angle_map(h)
        neg, _ = classnet.bounded_angle_map(-h)
        np.testing.assert_array_equal(neg, -theta)
        assert np.all(np.abs(theta) < np.pi)
        assert np.all(d >= 0)

    def test_strict_bound_past_float_saturation(self):
        theta, _ = classnet.bounded_angle_map(np.array([-1e300, -40.0, 40.0, np.inf]))
        assert np.all(np.abs(theta) < np.pi)

    def test_derivative(self, rng):
        h = rng.normal(size=4)
        _, d = classnet.bounded_angle_map(h)
        fd = (classnet.bounded_angle_map(h + 1e-6)[0] - classnet.bounded_angle_map(h - 1e-6)[0]) / 2e-6
        np.testing.assert_allclose(d, fd, rtol=1e-8)


class TestLoss:
    def test_zero(self, rng):
        y = rng.normal(size=(4, 6))
        loss, grad = classnet.weighted_mse(y, y, LossWeights())
        assert loss == 0 and np.all(grad == 0)

    def test_one_off_by_one(self):
        pred = np.zeros(6)
        target = np.zeros(6)
        target[2] = 1
        loss, grad = classnet.weighted_mse(pred, target, LossWeights())
        assert loss == pytest.approx(1 / 6)
        assert grad[2] == pytest.approx(-2 / 6)

    def test_gradient_fd(self, rng):
        w = LossWeights(rng.uniform(0.5, 2, 6))
        pred, target = rng.normal(size=(3, 6)), rng.normal(size=(3, 6))
        _, grad = classnet.weighted_mse(pred, target, w)
        fd = np.zeros_like(pred)
        for idx in np.ndindex(pred.shape):
            p = pred.copy()
            p[idx] += 1e-6
            m = pred.copy()
            m[idx] -= 1e-6
            fd[idx] = (classnet.weighted_mse(p, target, w)[0] - classnet.weighted_mse(m, target, w)[0]) / 2e-6
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-10)

    @pytest.mark.parametrize("w", [[1, 1, 1, 1, 1, 0], [1, 1, 1, 1, -1, 1], [1, 1]])
    def test_bad_weights(self, w):
        with pytest.raises(ConfigurationError):
            LossWeights(np.array(w, dtype=float))

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            classnet.weighted_mse(np.zeros(6), np.zeros(5), LossWeights())


class TestAdam:
    def test_zero_gradient(self):
        p = {"a": np.array([1.0, -2.0])}
        classnet.adam_step(OptimizerState(), p, {"a": np.zeros(2)})
        np.testing.assert_array_equal(p["a"], [1.0, -2.0])

    def test_first_step_is_lr(self):
        p = {"a": np.array([0.0, 0.0])}
        classnet.adam_step(OptimizerState(lr=1e-3), p, {"a": np.array([5.0, -0.2])})
        np.testing.assert_allclose(p["a"], [-1e-3, 1e-3], rtol=1e-6)

    def test_decreases_quadratic(self):
        p = {"x": np.array([3.0])}
        state = OptimizerState(lr=0.05)
        start = float((p["x"][0] - 1) ** 2)
        for _ in range(100):
            classnet.adam_step(state, p, {"x": 2 * (p["x"] - 1)})
        assert (p["x"][0] - 1) ** 2 < 0.1 * start

    def test_deterministic(self, rng):
        g = rng.normal(size=(5, 3))
        runs = []
        for _ in range(2):
            p = {"w": np.ones(3)}
            s = OptimizerState()
            for row in g:
                classnet.adam_step(s, p, {"w": row})
            runs.append(p["w"].copy())
        np.testing.assert_array_equal(*runs)

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            classnet.adam_step(OptimizerState(), {"a": np.zeros(2)}, {"a": np.zeros(3)})
