"""Synthetic labeled audio and spectrogram dataset directories.

Positives are drumming bursts: trains of short broadband strikes near
25 Hz. Negatives are interference: noise, tones, slow knocking, silence.
Every generator is deterministic per seed so a dataset directory can be
rebuilt byte for byte.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, lfilter

from .analyzer import analyze_clip, frames_to_matrix, tick_count
from .audio import AudioClip, read_wav
from .errors import DatasetError
from .spectrogram import (
    WINDOW_TICKS,
    Spectrogram,
    SpectrogramMeta,
    read_index,
    save_spectrogram,
    write_index,
    zscore,
    load_spectrogram,
)

CLIP_SECONDS = 3.0
DEFAULT_SAMPLE_RATE = 44100
HOP_TICKS = 200  # 1 s import hop

NEGATIVE_KINDS = ("white_noise", "pink_noise", "steady_tone", "slow_knock", "silence")

MANIFEST_FILENAME = "manifest.json"

_SPLIT_STREAM = 0x5B17  # fixed sub-stream tag for the split RNG


@dataclass
class DrummingParams:
    """Drumming burst: strikes at 15-30 Hz (nominal 25) for 0.2-2 s."""

    strike_rate_hz: float = 25.0
    burst_duration_s: float = 1.0
    amplitude: float = 0.8
    jitter: float = 0.05  # per-strike timing noise, fraction of the period

    def __post_init__(self):
        if not 15.0 <= self.strike_rate_hz <= 30.0:
            raise ValueError("strike_rate_hz must be in [15, 30]")
        if not 0.2 <= self.burst_duration_s <= 2.0:
            raise ValueError("burst_duration_s must be in [0.2, 2.0]")
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError("amplitude must be in (0, 1]")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError("jitter must be in [0, 0.5)")


@dataclass
class NegativeParams:
    """Interference clip: kind plus level, with knobs for tone and knock."""

    kind: str = "white_noise"
    level: float = 0.3
    tone_hz: float | None = None  # steady_tone; random 100-8000 Hz if None
    knock_rate_hz: float | None = None  # slow_knock; random 1-5 Hz if None

    def __post_init__(self):
        if self.kind not in NEGATIVE_KINDS:
            raise ValueError(f"kind must be one of {NEGATIVE_KINDS}")
        if not 0.0 <= self.level <= 1.0:
            raise ValueError("level must be in [0, 1]")
        if self.knock_rate_hz is not None and not 0.0 < self.knock_rate_hz < 8.0:
            raise ValueError("slow_knock rate must be strictly below 8 Hz")


def render_strike(rng: np.random.Generator, sample_rate_hz: int,
                  duration_s: float | None = None) -> np.ndarray:
    """One strike: an exponentially damped noise burst, band-limited 500 Hz-8 kHz."""
    if duration_s is None:
        duration_s = rng.uniform(0.003, 0.008)
    n = max(8, int(round(duration_s * sample_rate_hz)))
    t = np.arange(n) / sample_rate_hz
    burst = rng.normal(size=n) * np.exp(-t / (duration_s / 4.0))
    b, a = butter(2, [500.0, 8000.0], btype="band", fs=sample_rate_hz)
    shaped = lfilter(b, a, burst)
    peak = np.abs(shaped).max()
    return shaped / peak if peak > 0 else shaped


def render_drumming_burst(p: DrummingParams, rng: np.random.Generator,
                          sample_rate_hz: int) -> np.ndarray:
    """Strike train covering the burst duration; ceil(rate * duration) strikes."""
    n_strikes = math.ceil(p.strike_rate_hz * p.burst_duration_s)
    period = 1.0 / p.strike_rate_hz
    out = np.zeros(int(round(p.burst_duration_s * sample_rate_hz)) + sample_rate_hz // 50)
    for k in range(n_strikes):
        at = k * period + rng.uniform(-p.jitter, p.jitter) * period
        start = max(0, int(round(at * sample_rate_hz)))
        strike = render_strike(rng, sample_rate_hz) * p.amplitude
        stop = min(len(out), start + len(strike))
        if stop > start:
            out[start:stop] += strike[: stop - start]
    return out


def synth_drumming(p: DrummingParams, seed: int,
                   sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """3 s clip: low noise floor plus one drumming burst at a random offset."""
    rng = np.random.default_rng(seed)
    n = int(CLIP_SECONDS * sample_rate_hz)
    noise_level = rng.uniform(0.002, 0.02)
    samples = rng.normal(scale=noise_level, size=n)
    burst = render_drumming_burst(p, rng, sample_rate_hz)
    latest = n - len(burst)
    offset = int(rng.integers(0, max(1, latest + 1)))
    stop = min(n, offset + len(burst))
    samples[offset:stop] += burst[: stop - offset]
    return AudioClip(samples=samples, sample_rate_hz=sample_rate_hz)


def _pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """1/f-shaped noise via spectral weighting of white noise."""
    white = rng.normal(size=n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n)
    weights = np.zeros_like(freqs)
    weights[1:] = 1.0 / np.sqrt(freqs[1:])
    shaped = np.fft.irfft(spectrum * weights, n=n)
    peak = np.abs(shaped).max()
    return shaped / peak if peak > 0 else shaped


def render_negative(kind: str, level: float, duration_s: float,
                    rng: np.random.Generator, sample_rate_hz: int,
                    tone_hz: float | None = None,
                    knock_rate_hz: float | None = None) -> np.ndarray:
    n = int(round(duration_s * sample_rate_hz))
    if kind == "silence":
        return np.zeros(n)
    if kind == "white_noise":
        return rng.normal(scale=level / 3.0, size=n)
    if kind == "pink_noise":
        return _pink_noise(rng, n) * level
    if kind == "steady_tone":
        if tone_hz is None:
            tone_hz = float(np.exp(rng.uniform(np.log(100.0), np.log(8000.0))))
        t = np.arange(n) / sample_rate_hz
        return level * np.sin(2 * np.pi * tone_hz * t + rng.uniform(0, 2 * np.pi))
    if kind == "slow_knock":
        if knock_rate_hz is None:
            knock_rate_hz = float(rng.uniform(1.0, 5.0))
        out = rng.normal(scale=0.005, size=n)
        period = 1.0 / knock_rate_hz
        k = 0
        while k * period < duration_s:
            start = int(round(k * period * sample_rate_hz))
            strike = render_strike(rng, sample_rate_hz) * level
            stop = min(n, start + len(strike))
            if stop > start:
                out[start:stop] += strike[: stop - start]
            k += 1
        return out
    raise ValueError(f"unknown negative kind {kind!r}")


def synth_negative(p: NegativeParams, seed: int,
                   sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """3 s interference clip, deterministic per seed."""
    rng = np.random.default_rng(seed)
    samples = render_negative(p.kind, p.level, CLIP_SECONDS, rng, sample_rate_hz,
                              tone_hz=p.tone_hz, knock_rate_hz=p.knock_rate_hz)
    return AudioClip(samples=samples, sample_rate_hz=sample_rate_hz)


@dataclass
class DatasetManifest:
    directory: str
    seed: int
    entries: list = field(default_factory=list)  # {file, id, label, source, split}

    def save(self) -> Path:
        path = Path(self.directory) / MANIFEST_FILENAME
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"seed": self.seed, "entries": self.entries}, fh,
                      sort_keys=True, indent=2)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, directory) -> "DatasetManifest":
        path = Path(directory) / MANIFEST_FILENAME
        if not path.exists():
            raise DatasetError(f"no {MANIFEST_FILENAME} in {directory}")
        with open(path, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
        return cls(directory=str(directory), seed=blob["seed"], entries=blob["entries"])


def _random_drumming_params(rng: np.random.Generator) -> DrummingParams:
    return DrummingParams(
        strike_rate_hz=float(rng.uniform(15.0, 30.0)),
        burst_duration_s=float(rng.uniform(0.2, 2.0)),
        amplitude=float(rng.uniform(0.3, 1.0)),
        jitter=float(rng.uniform(0.0, 0.12)),
    )


def _random_negative_params(rng: np.random.Generator) -> NegativeParams:
    kind = NEGATIVE_KINDS[int(rng.integers(0, len(NEGATIVE_KINDS)))]
    return NegativeParams(kind=kind, level=float(rng.uniform(0.05, 0.9)))


def clip_to_spectrogram_values(clip: AudioClip) -> np.ndarray:
    """analyzer -> window -> z-score for a single 3 s clip."""
    frames = analyze_clip(clip)
    if len(frames) < WINDOW_TICKS:
        raise DatasetError(
            f"clip too short: {len(frames)} ticks, need {WINDOW_TICKS}"
        )
    raw = frames_to_matrix(frames[:WINDOW_TICKS]).astype(np.float64) / 4095.0
    return zscore(raw)


def build_dataset(out_dir, n_total: int = 750, positive_fraction: float = 0.5,
                  seed: int = 0) -> DatasetManifest:
    """Generate a labeled spectrogram directory with a stratified 80/20 split.

    Each file gets its own RNG stream derived from (seed, index), so output
    is independent of generation order. Same (config, seed) produces a
    byte-identical directory.
    """
    if n_total < 10:
        raise ValueError("n_total must be >= 10")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    n_pos = int(round(n_total * positive_fraction))
    labels = ["drumming"] * n_pos + ["other"] * (n_total - n_pos)

    manifest = DatasetManifest(directory=str(out_dir), seed=seed)
    index_entries = []
    for i, label in enumerate(labels):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        param_seed = int(rng.integers(0, 2**63 - 1))
        if label == "drumming":
            params = _random_drumming_params(rng)
            clip = synth_drumming(params, seed=param_seed)
            source = "synth:drumming"
        else:
            params = _random_negative_params(rng)
            clip = synth_negative(params, seed=param_seed)
            source = f"synth:{params.kind}"

        values = clip_to_spectrogram_values(clip)
        meta = SpectrogramMeta(
            id=f"synth-{i:05d}",
            source=source,
            captured_at=_capture_time(i),
            label=label,
        )
        spec = Spectrogram(values=values, meta=meta)
        path = save_spectrogram(spec, out_dir)
        manifest.entries.append(
            {"file": path.name, "id": meta.id, "label": label, "source": source}
        )
        index_entries.append({"path": path.name, "id": meta.id, "label": label})

    _assign_split(manifest, seed)
    write_index(out_dir, index_entries)
    manifest.save()
    return manifest


def _capture_time(index: int) -> str:
    """Deterministic fake capture timestamps, one second apart."""
    minutes, seconds = divmod(index, 60)
    hours, minutes = divmod(minutes, 60)
    return f"2024-01-01T{hours:02d}:{minutes:02d}:{seconds:02d}Z"


def _assign_split(manifest: DatasetManifest, seed: int,
                  val_fraction: float = 0.2) -> None:
    """Stratified 80/20 split, seeded; both classes appear in both splits."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, _SPLIT_STREAM)))
    by_label: dict[str, list[int]] = {}
    for i, entry in enumerate(manifest.entries):
        by_label.setdefault(entry["label"], []).append(i)
    for members in by_label.values():
        members = list(members)
        order = rng.permutation(len(members))
        n_val = max(1, int(round(len(members) * val_fraction)))
        val_set = {members[j] for j in order[:n_val]}
        for i in members:
            manifest.entries[i]["split"] = "val" if i in val_set else "train"


def import_wav(wav_path, label: str, out_dir) -> list[dict]:
    """Slice a recording into 3 s windows (1 s hop) and add them to a dataset.

    Returns the appended index entries. Clips shorter than 3 s are
    rejected. Existing index entries are preserved.
    """
    wav_path = Path(wav_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clip = read_wav(wav_path)

    n_ticks = tick_count(len(clip.samples), clip.sample_rate_hz)
    if n_ticks < WINDOW_TICKS:
        raise DatasetError(
            f"{wav_path}: too short ({clip.duration_s:.2f} s); need >= 3 s"
        )

    frames = analyze_clip(clip)
    matrix = frames_to_matrix(frames).astype(np.float64) / 4095.0

    try:
        existing = read_index(out_dir)
    except FileNotFoundError:
        existing = []
    taken = {e["id"] for e in existing}

    appended = []
    n_windows = (n_ticks - WINDOW_TICKS) // HOP_TICKS + 1
    for w in range(n_windows):
        start = w * HOP_TICKS
        values = zscore(matrix[start : start + WINDOW_TICKS])
        base_id = f"{wav_path.stem}-t{start:06d}"
        uid = base_id
        bump = 1
        while uid in taken:
            bump += 1
            uid = f"{base_id}-{bump}"
        taken.add(uid)
        meta = SpectrogramMeta(
            id=uid,
            source=wav_path.name,
            captured_at=_capture_time(len(existing) + len(appended)),
            label=label,
        )
        path = save_spectrogram(Spectrogram(values=values, meta=meta), out_dir)
        appended.append({"path": path.name, "id": uid, "label": label})

    write_index(out_dir, existing + appended)
    return appended


def load_dataset_arrays(dataset_dir):
    """Load every labeled WPSG file listed in the index.

    Returns (x, y, split_codes, n_skipped): x is (N, 600, 7) float32, y is
    int labels (0 = other, 1 = drumming), split_codes is 0 train / 1 val
    (-1 when no manifest covers the file), and n_skipped counts unlabeled
    entries left out.
    """
    dataset_dir = Path(dataset_dir)
    entries = read_index(dataset_dir)
    split_by_id: dict[str, str] = {}
    try:
        manifest = DatasetManifest.load(dataset_dir)
        split_by_id = {e["id"]: e.get("split", "") for e in manifest.entries}
    except DatasetError:
        pass

    xs, ys, splits = [], [], []
    n_skipped = 0
    for entry in entries:
        if entry["label"] == "unlabeled":
            n_skipped += 1
            continue
        spec = load_spectrogram(dataset_dir / entry["path"])
        xs.append(spec.values)
        ys.append(1 if entry["label"] == "drumming" else 0)
        splits.append({"train": 0, "val": 1}.get(split_by_id.get(entry["id"], ""), -1))
    if not xs:
        raise DatasetError(f"{dataset_dir}: no labeled spectrograms")
    return (np.stack(xs), np.array(ys, dtype=np.int64),
            np.array(splits, dtype=np.int64), n_skipped)
