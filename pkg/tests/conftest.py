import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drumdetect.cnn import TrainConfig, build_reference_model, train
from drumdetect.dataset import (
    DrummingParams,
    build_dataset,
    load_dataset_arrays,
    render_drumming_burst,
    render_negative,
)
from drumdetect.audio import AudioClip
from drumdetect.spectrogram import Spectrogram, SpectrogramMeta, save_spectrogram, write_index

REFERENCE_SEED = 42
REFERENCE_N = 750


@pytest.fixture(scope="session")
def reference_dataset_dir(tmp_path_factory):
    """The seeded 750-file synthetic dataset used by the acceptance run."""
    out = tmp_path_factory.mktemp("refset")
    build_dataset(out, n_total=REFERENCE_N, positive_fraction=0.5, seed=REFERENCE_SEED)
    return out


@pytest.fixture(scope="session")
def reference_training(reference_dataset_dir):
    """Reference model trained with defaults on the manifest split.

    Returns (model, history); shared by the accuracy, latency, and
    end-to-end acceptance criteria.
    """
    x, y, splits, _ = load_dataset_arrays(reference_dataset_dir)
    model = build_reference_model(seed=0)
    config = TrainConfig()  # defaults: 30 epochs, batch 8, Adam 1e-3
    split = (np.flatnonzero(splits == 0), np.flatnonzero(splits == 1))
    history = train(model, x, y, config, split=split)
    return model, history


@pytest.fixture(scope="session")
def trained_model(reference_training):
    return reference_training[0]


def make_detection_scene(seed: int, positive: bool, duration_s: float = 10.0,
                         burst_at_s: float = 4.0) -> AudioClip:
    """10 s scene: noise floor, plus a 2 s drumming burst when positive."""
    fs = 44100
    rng = np.random.default_rng(np.random.SeedSequence((seed, int(positive))))
    n = int(duration_s * fs)
    samples = rng.normal(scale=0.01, size=n)
    if positive:
        burst = render_drumming_burst(
            DrummingParams(strike_rate_hz=25.0, burst_duration_s=2.0,
                           amplitude=0.8, jitter=0.03),
            rng, fs)
        start = int(burst_at_s * fs)
        stop = min(n, start + len(burst))
        samples[start:stop] += burst[: stop - start]
    else:
        kinds = ("white_noise", "pink_noise", "steady_tone", "slow_knock")
        kind = kinds[seed % len(kinds)]
        samples = render_negative(kind, 0.5, duration_s, rng, fs)
    return AudioClip(samples=samples, sample_rate_hz=fs)


def make_capture_dir(path: Path, n: int = 10) -> Path:
    """A dataset directory of n unlabeled spectrograms for service tests."""
    rng = np.random.default_rng(1234)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n):
        values = rng.normal(size=(600, 7)).astype(np.float32)
        meta = SpectrogramMeta(
            id=f"cap-{i:04d}",
            source=f"capture-{i}.wav",
            captured_at=f"2024-02-01T00:00:{i:02d}Z",
            label="unlabeled",
        )
        p = save_spectrogram(Spectrogram(values=values, meta=meta), path)
        entries.append({"path": p.name, "id": meta.id, "label": "unlabeled"})
    write_index(path, entries)
    return path


@pytest.fixture
def capture_dir(tmp_path):
    return make_capture_dir(tmp_path / "capture", n=10)
