"""Model container, the reference architecture, and the WPNN weight format."""

import json
import struct

import numpy as np

from ..errors import (
    ArchitectureMismatchError,
    BadMagicError,
    TruncatedError,
    VersionError,
)
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, Rescale
from .ops import softmax, softmax_cross_entropy_batch

CLASS_NAMES = ("other", "drumming")

WPNN_MAGIC = b"WPNN"
WPNN_VERSION = 1

INPUT_SHAPE = (600, 7)


class Model:
    """An ordered stack of layers; immutable during inference."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def params(self):
        """Flat list of (layer_index, name, array) in declaration order."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params():
                out.append((i, name, arr))
        return out

    def grads(self):
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def layer_param_counts(self) -> list[int]:
        return [sum(p.size for _, p in layer.params()) for layer in self.layers]

    def total_params(self) -> int:
        return sum(self.layer_param_counts())

    def output_shapes(self, in_shape=INPUT_SHAPE) -> list[tuple]:
        """Per-layer output shapes (batch axis omitted) for a given input."""
        shapes = []
        shape = tuple(in_shape)
        for layer in self.layers:
            shape = tuple(layer.out_shape(shape))
            shapes.append(shape)
        return shapes

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]


def _layer_from_spec(spec: dict, dtype=np.float32) -> Layer:
    kind = spec["type"]
    if kind == "rescale":
        return Rescale()
    if kind == "conv2d":
        return Conv2D(spec["in_channels"], spec["filters"],
                      activation=spec["activation"], dtype=dtype)
    if kind == "maxpool2d":
        return MaxPool2D()
    if kind == "dropout":
        return Dropout(spec["rate"])
    if kind == "flatten":
        return Flatten()
    if kind == "dense":
        return Dense(spec["in_features"], spec["units"],
                     activation=spec["activation"], dtype=dtype)
    raise ValueError(f"unknown layer type {kind!r}")


def build_model(specs: list[dict], seed: int = 0, dtype=np.float32) -> Model:
    """Assemble a model from layer specs with seeded Glorot-uniform init."""
    rng = np.random.default_rng(seed)
    layers = []
    for spec in specs:
        layer = _layer_from_spec(spec, dtype=dtype)
        if hasattr(layer, "init_params"):
            layer.init_params(rng)
        layers.append(layer)
    return Model(layers)


def reference_specs(dropout_rate: float = 0.2) -> list[dict]:
    """Layer stack of the drumming classifier: three conv/pool stages into
    a 32-unit hidden layer and a 2-logit head. 13,378 trainable params."""
    return [
        {"type": "rescale"},
        {"type": "conv2d", "in_channels": 1, "filters": 4, "activation": "relu"},
        {"type": "maxpool2d", "pool": 3, "stride": 3},
        {"type": "conv2d", "in_channels": 4, "filters": 8, "activation": "relu"},
        {"type": "maxpool2d", "pool": 3, "stride": 3},
        {"type": "conv2d", "in_channels": 8, "filters": 16, "activation": "relu"},
        {"type": "maxpool2d", "pool": 3, "stride": 3},
        {"type": "dropout", "rate": dropout_rate},
        {"type": "flatten"},
        {"type": "dense", "in_features": 368, "units": 32, "activation": "relu"},
        {"type": "dense", "in_features": 32, "units": 2, "activation": "linear"},
    ]


def build_reference_model(seed: int = 0, dropout_rate: float = 0.2,
                          dtype=np.float32) -> Model:
    return build_model(reference_specs(dropout_rate), seed=seed, dtype=dtype)


def compute_gradients(model: Model, batch: np.ndarray, labels: np.ndarray,
                      training: bool = True,
                      rng: np.random.Generator | None = None):
    """Loss (summed over the batch) and gradients for every parameter.

    Gradients follow the sum-over-batch contract: duplicating a sample
    doubles its contribution. Dropout draws an explicit mask from rng when
    training; pass training=False for a deterministic (inference) pass.
    """
    model.zero_grads()
    logits = model.forward(batch, training=training, rng=rng)
    loss, dlogits = softmax_cross_entropy_batch(logits, labels)
    model.backward(dlogits)
    return loss, model.grads()


def predict_proba(model: Model, x: np.ndarray) -> np.ndarray:
    """Class probabilities, shape (B, 2); dropout disabled."""
    if x.ndim == 2:
        x = x[None]
    logits = model.forward(x, training=False)
    return softmax(logits)


def predict(model: Model, spectrogram) -> tuple[str, float]:
    """Classify one spectrogram; returns (class name, its probability).

    Accepts a Spectrogram or a bare 600x7 array. Inference is pure:
    repeated calls on the same input return bit-identical results.
    """
    values = getattr(spectrogram, "values", spectrogram)
    values = np.asarray(values, dtype=np.float32)
    probs = predict_proba(model, values)[0]
    idx = int(np.argmax(probs))
    return CLASS_NAMES[idx], float(probs[idx])


def drumming_probability(model: Model, values: np.ndarray) -> float:
    probs = predict_proba(model, np.asarray(values, dtype=np.float32))[0]
    return float(probs[CLASS_NAMES.index("drumming")])


def save_weights(model: Model, path) -> None:
    """Serialize layer specs and float32 parameters; round-trip is bit-exact."""
    spec_blob = json.dumps({"layers": model.specs()}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WPNN_MAGIC)
        fh.write(struct.pack("<H", WPNN_VERSION))
        fh.write(struct.pack("<I", len(spec_blob)))
        fh.write(spec_blob)
        for _, _, arr in model.params():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path, expect: Model | list[dict] | None = None) -> Model:
    """Rebuild a model from a WPNN file.

    When `expect` is given (a Model or a spec list), the stored architecture
    must match exactly or an ArchitectureMismatchError is raised.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 10:
        raise TruncatedError(f"{path}: header truncated")
    if data[:4] != WPNN_MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != WPNN_VERSION:
        raise VersionError(f"{path}: unsupported version {version}")
    (spec_len,) = struct.unpack_from("<I", data, 6)
    offset = 10
    if len(data) < offset + spec_len:
        raise TruncatedError(f"{path}: layer spec blob truncated")
    try:
        specs = json.loads(data[offset : offset + spec_len].decode("utf-8"))["layers"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise TruncatedError(f"{path}: layer spec blob unreadable: {exc}") from exc
    offset += spec_len

    if expect is not None:
        expected_specs = expect.specs() if isinstance(expect, Model) else expect
        if specs != expected_specs:
            raise ArchitectureMismatchError(
                f"{path}: stored architecture does not match the expected layer stack"
            )

    model = build_model(specs, seed=0)
    for _, _, arr in model.params():
        nbytes = arr.size * 4
        if len(data) < offset + nbytes:
            raise TruncatedError(f"{path}: weight payload truncated")
        arr[:] = np.frombuffer(data, dtype="<f4", count=arr.size, offset=offset).reshape(arr.shape)
        offset += nbytes
    if offset != len(data):
        raise TruncatedError(f"{path}: {len(data) - offset} trailing bytes")
    return model
