"""Dense layer forward/backward contracts and gradient fidelity."""

import numpy as np
import pytest

from tension_sentinel.errors import ShapeError
from tension_sentinel.nn.gradcheck import finite_difference_gradient, max_relative_error
from tension_sentinel.nn.layers import (
    ACTIVATIONS,
    DenseLayer,
    DenseNetwork,
    dense_forward,
    dnn_forward,
    sigmoid,
    uniform_fanin,
)


def test_identity_weights_pass_through():
    layer = DenseLayer(np.eye(2), np.zeros(2), "identity")
    out = dense_forward(np.array([[1.0, 2.0]]), layer)
    np.testing.assert_array_equal(out, [[1.0, 2.0]])


def test_sigmoid_of_zero_is_half():
    layer = DenseLayer(np.array([[3.0]]), np.zeros(1), "sigmoid")
    out = dense_forward(np.array([[0.0]]), layer)
    np.testing.assert_array_equal(out, [[0.5]])


def test_tanh_hand_evaluation():
    layer = DenseLayer(np.array([[0.5, 0.5]]), np.array([0.1]), "tanh")
    out = dense_forward(np.array([[1.0, -1.0]]), layer)
    np.testing.assert_allclose(out, [[np.tanh(0.1)]], rtol=0, atol=1e-15)
    assert abs(out[0, 0] - 0.09966799) < 1e-7


def test_dense_shape_error_names_both_shapes():
    layer = DenseLayer(np.eye(2), np.zeros(2))
    with pytest.raises(ShapeError) as exc:
        layer.forward(np.ones((1, 3)))
    assert "(1, 3)" in str(exc.value) and "(2, 2)" in str(exc.value)


def test_bias_weight_consistency_checked():
    with pytest.raises(ShapeError):
        DenseLayer(np.eye(2), np.zeros(3))


def test_unknown_activation_rejected():
    with pytest.raises(ValueError):
        DenseLayer(np.eye(2), np.zeros(2), "relu")


def test_dnn_forward_empty_composition_is_identity():
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(dnn_forward(x, []), x)


def test_dnn_forward_two_identity_layers():
    x = np.arange(6.0).reshape(2, 3)
    layers = [DenseLayer(np.eye(3), np.zeros(3)) for _ in range(2)]
    np.testing.assert_array_equal(dnn_forward(x, layers), x)


def test_dnn_forward_matches_manual_chain_bitwise():
    rng = np.random.default_rng(7)
    net = DenseNetwork.initialize([2, 3, 1], ["tanh", "identity"], rng)
    x = rng.normal(size=(4, 2))
    manual = x
    for layer in net.layers:
        manual = dense_forward(manual, layer)
    np.testing.assert_array_equal(net.forward(x), manual)


def test_chain_break_raises_shape_error():
    a = DenseLayer.initialize(2, 3, "tanh", np.random.default_rng(0))
    b = DenseLayer.initialize(4, 1, "identity", np.random.default_rng(1))
    with pytest.raises(ShapeError):
        DenseNetwork([a, b])


def test_backward_before_forward_is_a_state_error():
    layer = DenseLayer(np.eye(2), np.zeros(2))
    with pytest.raises(RuntimeError, match="before forward"):
        layer.backward(np.ones((1, 2)))


def test_hand_chain_rule_half_square():
    # loss = 0.5 * (w*x - y)^2 with w=1, x=2, y=0 -> dL/dw = 4
    layer = DenseLayer(np.array([[1.0]]), np.zeros(1))
    pred = layer.forward(np.array([[2.0]]))
    layer.backward(pred - np.array([[0.0]]))  # d(0.5 r^2)/d pred = r
    assert layer.grad_weight[0, 0] == 4.0


def test_zero_everything_gives_zero_gradient():
    layer = DenseLayer(np.zeros((2, 2)), np.zeros(2), "tanh")
    out = layer.forward(np.zeros((3, 2)))
    layer.backward(out - np.zeros((3, 2)))
    np.testing.assert_array_equal(layer.grad_weight, np.zeros((2, 2)))
    np.testing.assert_array_equal(layer.grad_bias, np.zeros(2))


def test_gradient_accumulates_until_zero_grad():
    rng = np.random.default_rng(2)
    layer = DenseLayer.initialize(2, 2, "sigmoid", rng)
    x = rng.normal(size=(3, 2))
    g = rng.normal(size=(3, 2))
    layer.forward(x)
    layer.backward(g)
    once = layer.grad_weight.copy()
    layer.forward(x)
    layer.backward(g)
    np.testing.assert_allclose(layer.grad_weight, 2.0 * once, rtol=0, atol=0)
    layer.zero_grad()
    np.testing.assert_array_equal(layer.grad_weight, np.zeros_like(once))


def test_gradient_fidelity_50_random_dense_instances():
    # Invariant: backward vs central finite differences < 1e-4 relative
    # on 50 seeded random layer instances across every activation.
    for case in range(50):
        rng = np.random.default_rng(1000 + case)
        n_in = int(rng.integers(1, 5))
        n_out = int(rng.integers(1, 5))
        rows = int(rng.integers(1, 5))
        act = ACTIVATIONS[case % len(ACTIVATIONS)]
        layer = DenseLayer.initialize(n_in, n_out, act, rng)
        x = rng.normal(size=(rows, n_in))
        target = rng.normal(size=(rows, n_out))

        def loss_fn():
            r = layer.forward(x) - target
            return 0.5 * float(np.sum(r * r))

        layer.zero_grad()
        loss_fn()
        layer.backward(layer._cache[1] - target)
        analytic = [layer.grad_weight.copy(), layer.grad_bias.copy()]
        numeric = finite_difference_gradient(loss_fn, [layer.weight, layer.bias], 1e-5)
        assert max_relative_error(analytic, numeric) < 1e-4


def test_uniform_fanin_bounds_and_determinism():
    w1 = uniform_fanin(np.random.default_rng(5), 8, 4)
    w2 = uniform_fanin(np.random.default_rng(5), 8, 4)
    np.testing.assert_array_equal(w1, w2)
    assert np.all(np.abs(w1) <= 0.5)  # 1/sqrt(4)


def test_sigmoid_is_overflow_safe():
    out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0], atol=1e-12)
