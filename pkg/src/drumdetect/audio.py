"""Mono PCM audio clips and WAV file I/O.

A clip stands in for the microphone signal: real samples in [-1, 1] at a
sample rate high enough to represent the 16 kHz analyzer band.
"""

import wave
from dataclasses import dataclass

import numpy as np

MIN_SAMPLE_RATE_HZ = 32000


@dataclass
class AudioClip:
    """Mono audio, samples clipped to [-1, 1] on construction."""

    samples: np.ndarray
    sample_rate_hz: int = 44100

    def __post_init__(self):
        if self.sample_rate_hz < MIN_SAMPLE_RATE_HZ:
            raise ValueError(
                f"sample rate {self.sample_rate_hz} Hz too low; "
                f"need >= {MIN_SAMPLE_RATE_HZ} Hz to cover the 16 kHz band"
            )
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"expected mono 1-D samples, got shape {samples.shape}")
        self.samples = np.clip(samples, -1.0, 1.0)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self) -> int:
        return len(self.samples)


def read_wav(path) -> AudioClip:
    """Read a RIFF PCM WAV file as a mono AudioClip.

    Only 16-bit signed little-endian PCM is accepted. Stereo (or any
    multi-channel) input is averaged down to mono. Sample rates below
    32 kHz are rejected; resampling is out of scope.
    """
    with wave.open(str(path), "rb") as wf:
        n_channels = wf.getnchannels()
        sample_width = wf.getsampwidth()
        rate = wf.getframerate()
        n_frames = wf.getnframes()
        raw = wf.readframes(n_frames)

    if sample_width != 2:
        raise ValueError(f"{path}: only 16-bit PCM WAV is supported, got {8 * sample_width}-bit")
    if rate < MIN_SAMPLE_RATE_HZ:
        raise ValueError(
            f"{path}: sample rate {rate} Hz unsupported (need >= {MIN_SAMPLE_RATE_HZ} Hz); "
            "resample the file first"
        )

    data = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return AudioClip(samples=data / 32768.0, sample_rate_hz=rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write a clip as 16-bit mono PCM WAV."""
    pcm = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate_hz)
        wf.writeframes(pcm.tobytes())
