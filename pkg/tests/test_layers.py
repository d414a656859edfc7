import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegcnn.errors import ShapeError, StateError
from eegcnn.layers import (
    Conv1D,
    Dense,
    Dropout,
    MaxPool1D,
    conv1d,
    dropout_apply,
    flatten,
    maxpool1d,
    relu,
    sigmoid,
    softmax,
)
from eegcnn.numeric import SeededGenerator
from gradcheck import numerical_gradient, rel_err
from oracles import naive_conv1d, naive_maxpool


def test_conv_selector_kernel():
    y = conv1d(np.arange(1.0, 7.0), np.array([1.0, 0, 0, 0, 0]))
    np.testing.assert_array_equal(y.ravel(), [1, 2])


def test_conv_hand_example():
    x = np.arange(1.0, 8.0)
    k = np.array([1.0, -1, 2, 0, 1])
    expected = naive_conv1d(x[:, None], k[None, :, None], np.zeros(1)).ravel()
    np.testing.assert_array_equal(expected, [10, 13, 16])
    np.testing.assert_array_equal(conv1d(x, k).ravel(), expected)


def test_conv_canonical_shapes():
    x = np.zeros((5000, 1))
    y1 = conv1d(x, np.zeros((16, 5, 1)))
    y2 = conv1d(y1, np.zeros((32, 5, 16)))
    assert y1.shape == (4996, 16)
    assert y2.shape == (4992, 32)


def test_conv_rejects_short_input():
    with pytest.raises(ShapeError):
        conv1d(np.zeros(4), np.zeros(5))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 60), st.integers(1, 4), st.integers(1, 4))
def test_conv_matches_naive(seed, length, cin, filters):
    g = np.random.default_rng(seed)
    x = g.normal(size=(length, cin))
    k = g.normal(size=(filters, 5, cin))
    b = g.normal(size=filters)
    np.testing.assert_allclose(conv1d(x, k, b), naive_conv1d(x, k, b), rtol=1e-12, atol=1e-12)


def test_relu():
    np.testing.assert_array_equal(relu([-1, 0, 2]), [0, 0, 2])
    np.testing.assert_array_equal(relu([-3, -1e-9]), [0, 0])
    x = np.random.default_rng(1).normal(size=50)
    np.testing.assert_array_equal(relu(relu(x)), relu(x))


def test_maxpool_pairs():
    np.testing.assert_array_equal(maxpool1d(np.array([1.0, 3, 2, 5, 4, 6])), [3, 5, 6])


def test_maxpool_odd_tail_dropped():
    np.testing.assert_array_equal(maxpool1d(np.array([1.0, 3, 2, 5, 9])), [3, 5])


def test_maxpool_canonical_shape():
    assert maxpool1d(np.zeros((4992, 32))).shape == (2496, 32)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 80), st.integers(1, 6))
def test_maxpool_matches_naive(seed, length, channels):
    x = np.random.default_rng(seed).normal(size=(length, channels))
    assert np.array_equal(maxpool1d(x), naive_maxpool(x))


def test_flatten_layout_and_inverse():
    x = np.arange(6.0).reshape(3, 2)  # time x channel
    f = flatten(x)
    assert f.tolist() == [0, 1, 2, 3, 4, 5]  # channel varies fastest
    assert np.array_equal(f.reshape(3, 2), x)
    assert flatten(np.zeros((2496, 32))).size == 79872
    assert flatten(np.zeros((1, 1))).size == 1


def test_dropout_inference_and_zero_rate():
    x = np.random.default_rng(0).normal(size=100)
    assert np.array_equal(dropout_apply(Dropout(0.25), x, SeededGenerator(0), train=False), x)
    assert np.array_equal(dropout_apply(Dropout(0.0), x, SeededGenerator(0), train=True), x)


def test_dropout_rate():
    y = dropout_apply(Dropout(0.25), np.ones(100_000), SeededGenerator(5), train=True)
    frac = np.mean(y == 0)
    assert 0.24 <= frac <= 0.26
    assert np.allclose(y[y != 0], 1 / 0.75)


def test_dropout_expectation():
    layer = Dropout(0.25)
    gen = SeededGenerator(8)
    x = np.linspace(0.5, 2.0, 20)
    acc = np.zeros_like(x)
    for _ in range(10_000):
        acc += layer.forward(x, train=True, gen=gen)
    mean = acc / 10_000
    assert np.all(np.abs(mean - x) <= 0.02 * x)


def test_dense_activations():
    assert sigmoid(np.array(0.0)) == 0.5
    np.testing.assert_allclose(softmax(np.full(5, 3.7)), np.full(5, 0.2), atol=1e-15)
    z = np.random.default_rng(2).normal(size=(100, 7)) * 20
    assert np.all(np.abs(softmax(z).sum(axis=1) - 1) <= 1e-12)
    s = sigmoid(np.array([-800.0, 800.0]))
    assert np.all(np.isfinite(s))


def test_dense_width_mismatch():
    d = Dense(4, 2, "softmax")
    with pytest.raises(ShapeError):
        d.forward(np.zeros((1, 5)))


def test_backward_without_forward():
    with pytest.raises(StateError):
        Conv1D(1, 2).backward(np.zeros((1, 4, 2)))


# --- per-layer gradient checks --------------------------------------------------


def _check(layer_grad, numeric):
    assert np.max(rel_err(layer_grad, numeric)) < 1e-4


def test_conv_layer_gradients(rng):
    layer = Conv1D(3, 4, 5)
    layer.params["kernels"][...] = rng.normal(size=layer.params["kernels"].shape)
    layer.params["bias"][...] = rng.normal(size=4)
    x = rng.normal(size=(2, 20, 3))
    up = rng.normal(size=(2, 16, 4))

    def f():
        return float(np.sum(layer.forward(x)[1] * up))

    def gates():
        return (layer.forward(x)[0] > 0).tobytes()

    layer.forward(x)
    dx = layer.backward(up)
    _check(layer.grads["kernels"], numerical_gradient(f, layer.params["kernels"], pattern=gates))
    _check(layer.grads["bias"], numerical_gradient(f, layer.params["bias"], pattern=gates))
    _check(dx, numerical_gradient(f, x, pattern=gates))


def test_maxpool_gradient_routes_to_argmax(rng):
    layer = MaxPool1D()
    x = rng.normal(size=(2, 11, 3))
    up = rng.normal(size=(2, 5, 3))
    layer.forward(x)
    dx = layer.backward(up)
    _, idx = maxpool1d(x, return_indices=True)
    mask = np.zeros_like(x, dtype=bool)
    for b in range(2):
        for h in range(5):
            for c in range(3):
                mask[b, idx[b, h, c], c] = True
    assert np.all(dx[~mask] == 0)
    f = lambda: float(np.sum(layer.forward(x) * up))
    _check(dx, numerical_gradient(f, x))


def test_dense_gradients(rng):
    for act, units in (("sigmoid", 1), ("softmax", 3)):
        layer = Dense(6, units, act, use_bias=True)
        layer.params["weights"][...] = rng.normal(size=(6, units))
        layer.params["bias"][...] = rng.normal(size=units)
        x = rng.normal(size=(4, 6))
        up = rng.normal(size=(4, units))
        f = lambda: float(np.sum(layer.forward(x)[1] * up))
        layer.forward(x)
        dx = layer.backward(dp=up)
        _check(layer.grads["weights"], numerical_gradient(f, layer.params["weights"]))
        _check(layer.grads["bias"], numerical_gradient(f, layer.params["bias"]))
        _check(dx, numerical_gradient(f, x))


def test_dropout_gradient_is_mask(rng):
    layer = Dropout(0.25)
    x = rng.normal(size=(3, 10))
    y = layer.forward(x, train=True, gen=SeededGenerator(1))
    up = rng.normal(size=y.shape)
    assert np.array_equal(layer.backward(up), up * layer.mask)
