"""Layer objects with forward/backward passes and parameter storage.

Six layer types are enough for the reference architecture: Rescale,
Conv2D (3x3, same, stride 1), MaxPool2D (3x3, stride 3, same), Dropout,
Flatten, and Dense. Backward passes compute exact reverse-mode gradients
of the summed batch loss.
"""

import numpy as np

from .ops import pool_same_padding, relu


class Layer:
    """Base: parameterless identity. Subclasses cache what backward needs."""

    def params(self):
        return []

    def grads(self):
        return []

    def zero_grads(self):
        for g in self.grads():
            g[:] = 0

    def forward(self, x, training=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def out_shape(self, in_shape):
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


class Rescale(Layer):
    """Identity intensity scaling that adds the trailing channel axis.

    Inputs are already z-scored, so the scale is 1.0; the layer's only job
    is turning (B, 600, 7) into (B, 600, 7, 1).
    """

    def forward(self, x, training=False, rng=None):
        self._had_channel = x.ndim == 4
        return x if self._had_channel else x[..., None]

    def backward(self, dy):
        return dy if self._had_channel else dy[..., 0]

    def out_shape(self, in_shape):
        return in_shape if len(in_shape) == 3 else (*in_shape, 1)

    def spec(self):
        return {"type": "rescale"}


class Conv2D(Layer):
    """3x3 same-padding convolution, stride 1, optional ReLU."""

    def __init__(self, in_channels: int, filters: int, activation: str = "relu",
                 dtype=np.float32):
        self.in_channels = in_channels
        self.filters = filters
        if activation not in ("relu", "linear"):
            raise ValueError(f"unsupported activation {activation!r}")
        self.activation = activation
        self.w = np.zeros((3, 3, in_channels, filters), dtype=dtype)
        self.b = np.zeros(filters, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def init_params(self, rng: np.random.Generator):
        fan_in = 9 * self.in_channels
        fan_out = 9 * self.filters
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        self.w[:] = rng.uniform(-limit, limit, size=self.w.shape)
        self.b[:] = 0.0

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x, training=False, rng=None):
        b, h, w, c = x.shape
        xp = np.zeros((b, h + 2, w + 2, c), dtype=x.dtype)
        xp[:, 1 : h + 1, 1 : w + 1, :] = x
        y = np.zeros((b, h, w, self.filters), dtype=x.dtype)
        for di in range(3):
            for dj in range(3):
                y += xp[:, di : di + h, dj : dj + w, :] @ self.w[di, dj]
        y += self.b
        self._xp = xp
        if self.activation == "relu":
            self._mask = y > 0
            return np.where(self._mask, y, 0)
        return y

    def backward(self, dy):
        if self.activation == "relu":
            dy = np.where(self._mask, dy, 0)
        xp = self._xp
        b, hp, wp, c = xp.shape
        h, w = hp - 2, wp - 2
        dxp = np.zeros_like(xp)
        for di in range(3):
            for dj in range(3):
                window = xp[:, di : di + h, dj : dj + w, :]
                self.dw[di, dj] += np.tensordot(window, dy, axes=([0, 1, 2], [0, 1, 2]))
                dxp[:, di : di + h, dj : dj + w, :] += dy @ self.w[di, dj].T
        self.db += dy.sum(axis=(0, 1, 2))
        return dxp[:, 1 : h + 1, 1 : w + 1, :]

    def out_shape(self, in_shape):
        h, w, _ = in_shape
        return (h, w, self.filters)

    def spec(self):
        return {
            "type": "conv2d",
            "in_channels": self.in_channels,
            "filters": self.filters,
            "activation": self.activation,
        }


class MaxPool2D(Layer):
    """3x3 max pooling, stride 3, same padding (padded cells never win)."""

    pool = 3
    stride = 3

    def forward(self, x, training=False, rng=None):
        b, h, w, c = x.shape
        oh, ph, _ = pool_same_padding(h, self.pool, self.stride)
        ow, pw, _ = pool_same_padding(w, self.pool, self.stride)
        xp = np.full((b, oh * self.stride, ow * self.stride, c), -np.inf, dtype=x.dtype)
        xp[:, ph : ph + h, pw : pw + w, :] = x
        tiled = xp.reshape(b, oh, self.pool, ow, self.pool, c)
        y = tiled.max(axis=(2, 4))
        self._tiled = tiled
        self._y = y
        self._geom = (h, w, ph, pw)
        return y

    def backward(self, dy):
        tiled, y = self._tiled, self._y
        h, w, ph, pw = self._geom
        winners = tiled == y[:, :, None, :, None, :]
        dxp = winners * dy[:, :, None, :, None, :]
        b, oh, _, ow, _, c = tiled.shape
        dxp = dxp.reshape(b, oh * self.pool, ow * self.pool, c)
        return dxp[:, ph : ph + h, pw : pw + w, :]

    def out_shape(self, in_shape):
        h, w, c = in_shape
        return (pool_same_padding(h, self.pool, self.stride)[0],
                pool_same_padding(w, self.pool, self.stride)[0],
                c)

    def spec(self):
        return {"type": "maxpool2d", "pool": self.pool, "stride": self.stride}


class Dropout(Layer):
    """Inverted dropout with an explicit per-call mask; identity at inference."""

    def __init__(self, rate: float = 0.2):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng for its mask")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dy):
        return dy if self._mask is None else dy * self._mask

    def out_shape(self, in_shape):
        return in_shape

    def spec(self):
        return {"type": "dropout", "rate": self.rate}


class Flatten(Layer):
    def forward(self, x, training=False, rng=None):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._in_shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def spec(self):
        return {"type": "flatten"}


class Dense(Layer):
    def __init__(self, in_features: int, units: int, activation: str = "linear",
                 dtype=np.float32):
        self.in_features = in_features
        self.units = units
        if activation not in ("relu", "linear"):
            raise ValueError(f"unsupported activation {activation!r}")
        self.activation = activation
        self.w = np.zeros((in_features, units), dtype=dtype)
        self.b = np.zeros(units, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def init_params(self, rng: np.random.Generator):
        limit = np.sqrt(6.0 / (self.in_features + self.units))
        self.w[:] = rng.uniform(-limit, limit, size=self.w.shape)
        self.b[:] = 0.0

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x, training=False, rng=None):
        self._x = x
        y = x @ self.w + self.b
        if self.activation == "relu":
            self._mask = y > 0
            return np.where(self._mask, y, 0)
        return y

    def backward(self, dy):
        if self.activation == "relu":
            dy = np.where(self._mask, dy, 0)
        self.dw += self._x.T @ dy
        self.db += dy.sum(axis=0)
        return dy @ self.w.T

    def out_shape(self, in_shape):
        return (self.units,)

    def spec(self):
        return {
            "type": "dense",
            "in_features": self.in_features,
            "units": self.units,
            "activation": self.activation,
        }
