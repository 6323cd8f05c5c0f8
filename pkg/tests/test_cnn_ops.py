import numpy as np
import numpy.testing as npt
import pytest

from drumdetect.cnn.ops import (
    conv2d_forward,
    dense_forward,
    maxpool2d,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_batch,
)

from oracles import conv2d_naive, dense_naive, fd_gradient, max_rel_err, maxpool2d_naive


def test_conv_zero_input_zero_bias():
    y = conv2d_forward(np.zeros((6, 5, 2)), np.ones((3, 3, 2, 4)), np.zeros(4))
    npt.assert_array_equal(y, np.zeros((6, 5, 4)))


def test_conv_delta_kernel_is_identity():
    x = np.array([[[2.5]]])
    w = np.zeros((3, 3, 1, 1))
    w[1, 1, 0, 0] = 1.0  # center tap
    y = conv2d_forward(x, w, np.zeros(1))
    npt.assert_array_equal(y, x)


@pytest.mark.parametrize("seed", range(5))
def test_conv_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(5, 4, 2))
    w = rng.normal(size=(3, 3, 2, 3))
    b = rng.normal(size=3)
    npt.assert_allclose(conv2d_forward(x, w, b), conv2d_naive(x, w, b), atol=1e-6)


def test_conv_shape_mismatch():
    with pytest.raises(ValueError):
        conv2d_forward(np.zeros((5, 4, 2)), np.zeros((3, 3, 3, 4)), np.zeros(4))
    with pytest.raises(ValueError):
        conv2d_forward(np.zeros((5, 4, 2)), np.zeros((5, 5, 2, 4)), np.zeros(4))


def test_maxpool_paper_shape_transitions():
    assert maxpool2d(np.zeros((600, 7, 4))).shape == (200, 3, 4)
    assert maxpool2d(np.zeros((200, 3, 8))).shape == (67, 1, 8)
    assert maxpool2d(np.zeros((67, 1, 16))).shape == (23, 1, 16)


def test_maxpool_distinct_values_single_max():
    x = np.arange(9, dtype=float).reshape(3, 3, 1)
    npt.assert_array_equal(maxpool2d(x), np.array([[[8.0]]]))


@pytest.mark.parametrize("shape", [(7, 5, 2), (600, 7, 1), (10, 1, 3)])
def test_maxpool_matches_naive_oracle(shape):
    rng = np.random.default_rng(hash(shape) % 2**31)
    x = rng.normal(size=shape)
    npt.assert_array_equal(maxpool2d(x), maxpool2d_naive(x))


def test_dense_zero_weights_passes_bias():
    b = np.array([1.0, -2.0, 3.0])
    npt.assert_array_equal(dense_forward(np.ones(4), np.zeros((4, 3)), b), b)


def test_dense_hidden_layer_param_count():
    w = np.zeros((368, 32))
    b = np.zeros(32)
    assert w.size + b.size == 11808


@pytest.mark.parametrize("seed", range(5))
def test_dense_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=7)
    w = rng.normal(size=(7, 4))
    b = rng.normal(size=4)
    npt.assert_allclose(dense_forward(x, w, b), dense_naive(x, w, b), atol=1e-6)


def test_dense_shape_mismatch():
    with pytest.raises(ValueError):
        dense_forward(np.zeros(5), np.zeros((4, 3)), np.zeros(3))


def test_softmax_ce_symmetric_case():
    loss, grad = softmax_cross_entropy(np.array([0.0, 0.0]), 0)
    npt.assert_allclose(loss, np.log(2), rtol=1e-12)
    npt.assert_allclose(grad, [-0.5, 0.5], atol=1e-12)


def test_softmax_ce_extreme_logits_stable():
    loss, grad = softmax_cross_entropy(np.array([100.0, -100.0]), 0)
    assert loss < 1e-12
    assert np.isfinite(grad).all()
    loss_bad, _ = softmax_cross_entropy(np.array([100.0, -100.0]), 1)
    assert np.isfinite(loss_bad)


@pytest.mark.parametrize("seed", range(10))
def test_softmax_ce_gradient_vs_central_differences(seed):
    rng = np.random.default_rng(seed)
    logits = rng.normal(scale=3.0, size=2)
    label = int(rng.integers(0, 2))
    _, grad = softmax_cross_entropy(logits, label)
    fd = fd_gradient(lambda: softmax_cross_entropy(logits, label)[0], logits, h=1e-4)
    assert max_rel_err(grad, fd) <= 1e-4


def test_softmax_sums_to_one():
    rng = np.random.default_rng(0)
    for logits in [rng.normal(size=(4, 2)) * 10, np.array([[1000.0, -1000.0]])]:
        p = softmax(logits)
        npt.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-6)
        assert (p >= 0).all()


def test_batch_ce_sums_per_sample_losses():
    logits = np.array([[0.3, -0.2], [1.5, 0.1], [-0.7, 0.9]])
    labels = np.array([0, 1, 1])
    total, grads = softmax_cross_entropy_batch(logits, labels)
    singles = [softmax_cross_entropy(logits[i], labels[i]) for i in range(3)]
    npt.assert_allclose(total, sum(s[0] for s in singles), rtol=1e-12)
    npt.assert_allclose(grads, np.stack([s[1] for s in singles]), atol=1e-7)
