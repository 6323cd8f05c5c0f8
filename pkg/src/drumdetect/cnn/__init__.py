"""From-scratch tensor/CNN engine: layers, reference model, training."""

from .ops import (
    conv2d_forward,
    dense_forward,
    maxpool2d,
    relu,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_batch,
)
from .layers import Conv2D, Dense, Dropout, Flatten, MaxPool2D, Rescale
from .model import (
    CLASS_NAMES,
    Model,
    build_reference_model,
    compute_gradients,
    load_weights,
    predict,
    predict_proba,
    save_weights,
)
from .train import TrainConfig, TrainHistory, evaluate, stratified_split, train

__all__ = [
    "CLASS_NAMES",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "MaxPool2D",
    "Model",
    "Rescale",
    "TrainConfig",
    "TrainHistory",
    "build_reference_model",
    "compute_gradients",
    "conv2d_forward",
    "dense_forward",
    "evaluate",
    "load_weights",
    "maxpool2d",
    "predict",
    "predict_proba",
    "relu",
    "save_weights",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_batch",
    "stratified_split",
    "train",
]
