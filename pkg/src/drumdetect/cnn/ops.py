"""Core tensor operations: convolution, pooling, dense, softmax loss.

All spatial ops use channels-last layout (H, W, C) with an optional leading
batch dimension. Convolution is cross-correlation with zero same-padding;
pooling pads with -inf so padded cells are never selected.
"""

import numpy as np


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def _with_batch(x: np.ndarray):
    """Normalize to 4-D (B, H, W, C); report whether a batch axis was added."""
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected 3-D or 4-D input, got shape {x.shape}")


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 same-padding stride-1 cross-correlation plus bias.

    x: (H, W, C) or (B, H, W, C); weights: (3, 3, C, F); bias: (F,).
    Activation is applied by the layer wrapper, not here.
    """
    x4, squeeze = _with_batch(x)
    kh, kw, c_in, _ = weights.shape
    if (kh, kw) != (3, 3):
        raise ValueError(f"expected a 3x3 kernel, got {kh}x{kw}")
    if x4.shape[3] != c_in:
        raise ValueError(f"input has {x4.shape[3]} channels, weights expect {c_in}")

    b, h, w, _ = x4.shape
    xp = np.zeros((b, h + 2, w + 2, c_in), dtype=x4.dtype)
    xp[:, 1 : h + 1, 1 : w + 1, :] = x4
    y = np.zeros((b, h, w, weights.shape[3]), dtype=x4.dtype)
    for di in range(3):
        for dj in range(3):
            y += xp[:, di : di + h, dj : dj + w, :] @ weights[di, dj]
    y += bias
    return y[0] if squeeze else y


def pool_same_padding(size: int, pool: int, stride: int):
    """(out_size, pad_before, pad_after) for same-padded pooling."""
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + pool - size, 0)
    before = total // 2
    return out, before, total - before


def maxpool2d(x: np.ndarray, pool: int = 3, stride: int = 3) -> np.ndarray:
    """Max over pool x pool windows, same padding, padded cells = -inf.

    Output spatial size is ceil(input / stride) per dimension.
    """
    if pool != stride:
        raise ValueError("only pool == stride layouts are supported")
    x4, squeeze = _with_batch(x)
    b, h, w, c = x4.shape
    oh, ph, _ = pool_same_padding(h, pool, stride)
    ow, pw, _ = pool_same_padding(w, pool, stride)

    xp = np.full((b, oh * stride, ow * stride, c), -np.inf, dtype=x4.dtype)
    xp[:, ph : ph + h, pw : pw + w, :] = x4
    y = xp.reshape(b, oh, pool, ow, pool, c).max(axis=(2, 4))
    return y[0] if squeeze else y


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                  activation: str = "linear") -> np.ndarray:
    """y = activation(x @ W + b); x: (N,) or (B, N), W: (N, M), b: (M,)."""
    if x.shape[-1] != weights.shape[0]:
        raise ValueError(f"input width {x.shape[-1]} does not match weights {weights.shape}")
    y = x @ weights + bias
    if activation == "relu":
        return relu(y)
    if activation == "linear":
        return y
    raise ValueError(f"unknown activation {activation!r}")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis; rows sum to 1."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, label: int):
    """Loss and logit gradient for one sample.

    loss = -log softmax(logits)[label]; grad = softmax(logits) - onehot.
    Stabilized by max subtraction so extreme logits cannot overflow.
    """
    logits = np.asarray(logits, dtype=np.float64)
    z = logits - logits.max()
    log_probs = z - np.log(np.exp(z).sum())
    loss = -log_probs[label]
    grad = np.exp(log_probs)
    grad[label] -= 1.0
    return float(loss), grad


def softmax_cross_entropy_batch(logits: np.ndarray, labels: np.ndarray):
    """Summed loss over a batch and per-sample logit gradients.

    The gradient corresponds to the sum (not mean) of per-sample losses,
    so duplicating a sample doubles its contribution.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    z = (logits - logits.max(axis=1, keepdims=True)).astype(np.float64)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = len(labels)
    loss = float(-log_probs[np.arange(n), labels].sum())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad.astype(logits.dtype)
