import numpy as np
import numpy.testing as npt
import pytest

from drumdetect.cnn import TrainConfig, build_reference_model, stratified_split, train
from drumdetect.dataset import (
    DrummingParams,
    NegativeParams,
    clip_to_spectrogram_values,
    synth_drumming,
    synth_negative,
)


@pytest.fixture(scope="module")
def toy_set():
    """20 synthetic samples, 10 per class."""
    xs, ys = [], []
    for i in range(10):
        clip = synth_drumming(DrummingParams(), seed=100 + i)
        xs.append(clip_to_spectrogram_values(clip))
        ys.append(1)
        clip = synth_negative(NegativeParams(kind="white_noise", level=0.4), seed=200 + i)
        xs.append(clip_to_spectrogram_values(clip))
        ys.append(0)
    return np.stack(xs), np.array(ys)


def test_overfits_toy_set(toy_set):
    x, y = toy_set
    model = build_reference_model(seed=0)
    history = train(model, x, y, TrainConfig(epochs=30, seed=0, validation_fraction=0.2))
    assert max(history.train_accuracy) == 1.0


def test_training_is_deterministic(toy_set):
    x, y = toy_set
    cfg = TrainConfig(epochs=3, seed=7)
    h1 = train(build_reference_model(seed=1), x, y, cfg)
    h2 = train(build_reference_model(seed=1), x, y, cfg)
    assert h1.as_dict() == h2.as_dict()


def test_history_one_entry_per_epoch(toy_set):
    x, y = toy_set
    history = train(build_reference_model(seed=2), x, y, TrainConfig(epochs=4, seed=0))
    assert len(history.train_loss) == 4
    assert len(history.val_accuracy) == 4


def test_single_class_dataset_rejected(toy_set):
    x, y = toy_set
    with pytest.raises(ValueError, match="both classes"):
        train(build_reference_model(seed=0), x[y == 1], y[y == 1], TrainConfig(epochs=1))


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train(build_reference_model(seed=0), np.zeros((0, 600, 7)), np.zeros(0),
              TrainConfig(epochs=1))


def test_stratified_split_honors_fraction():
    y = np.array([0] * 40 + [1] * 40)
    train_idx, val_idx = stratified_split(y, 0.2, np.random.default_rng(0))
    assert len(val_idx) == 16
    assert len(train_idx) == 64
    assert set(y[val_idx]) == {0, 1}
    assert set(y[train_idx]) == {0, 1}
    assert not set(train_idx) & set(val_idx)


def test_stratified_split_tiny_set():
    y = np.array([0] * 5 + [1] * 5)
    train_idx, val_idx = stratified_split(y, 0.2, np.random.default_rng(0))
    assert len(train_idx) == 8 and len(val_idx) == 2
    assert set(y[val_idx]) == {0, 1}


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(validation_fraction=1.5)


def test_explicit_split_is_used(toy_set):
    x, y = toy_set
    train_idx = np.arange(0, 16)
    val_idx = np.arange(16, 20)
    history = train(build_reference_model(seed=0), x, y,
                    TrainConfig(epochs=2, seed=0), split=(train_idx, val_idx))
    assert len(history.val_accuracy) == 2


def test_dropout_mask_affects_training_only(toy_set):
    x, y = toy_set
    model = build_reference_model(seed=0, dropout_rate=0.5)
    logits_a = model.forward(x[:2].astype(np.float32), training=False)
    logits_b = model.forward(x[:2].astype(np.float32), training=False)
    npt.assert_array_equal(logits_a, logits_b)
    rng = np.random.default_rng(0)
    trained = model.forward(x[:2].astype(np.float32), training=True, rng=rng)
    assert not np.array_equal(trained, logits_a)
