"""3 s sliding window, z-score normalization, and the WPSG file format.

A spectrogram here is the 600x7 matrix of band amplitudes over the sliding
window (time-major), not an FFT product. Files are self-describing binary
records; a dataset directory is a flat folder of ``*.wpsg`` files plus an
``index.jsonl``.
"""

import json
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analyzer import ADC_MAX, N_BANDS, BandFrame
from .errors import (
    BadMagicError,
    NotWarmedUpError,
    ShapeMismatchError,
    TruncatedError,
    VersionError,
)

WINDOW_TICKS = 600  # 3 s / 5 ms
SPECTROGRAM_SHAPE = (WINDOW_TICKS, N_BANDS)

WPSG_MAGIC = b"WPSG"
WPSG_VERSION = 1
_HEADER = struct.Struct("<4sHHHBB")  # magic, version, rows, cols, label, reserved

LABELS = ("unlabeled", "drumming", "other")
LABEL_TO_CODE = {name: code for code, name in enumerate(LABELS)}

INDEX_FILENAME = "index.jsonl"


@dataclass
class SpectrogramMeta:
    id: str
    source: str = ""
    captured_at: str = ""
    label: str = "unlabeled"
    species_hint: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass
class Spectrogram:
    """600x7 matrix of reals (row = tick, column = band) plus metadata."""

    values: np.ndarray
    meta: SpectrogramMeta

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.shape != SPECTROGRAM_SHAPE:
            raise ValueError(f"expected shape {SPECTROGRAM_SHAPE}, got {values.shape}")
        self.values = values


class SlidingWindow:
    """Circular buffer of the most recent 600 band frames.

    Single producer / single consumer: one writer pushes frames, one reader
    snapshots. The lock keeps snapshots atomic at frame granularity.
    """

    def __init__(self, capacity: int = WINDOW_TICKS):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf = np.zeros((capacity, N_BANDS), dtype=np.uint16)
        self._count = 0
        self._head = 0  # next write slot
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    @property
    def full(self) -> bool:
        return self._count >= self.capacity

    def push_frame(self, frame: BandFrame) -> None:
        with self._lock:
            self._buf[self._head] = frame.amplitudes
            self._head = (self._head + 1) % self.capacity
            self._count += 1

    def snapshot_raw(self) -> np.ndarray:
        """Dequantized copy of the window, oldest frame first.

        ADC codes map to [0, 1] by dividing by 4095. Raises until the
        window has seen a full 3 s of frames (the runtime warmup).
        """
        with self._lock:
            if self._count < self.capacity:
                raise NotWarmedUpError(
                    f"window holds {self._count}/{self.capacity} frames; not warmed up"
                )
            ordered = np.roll(self._buf, -self._head, axis=0)
        return ordered.astype(np.float64) / ADC_MAX


def zscore(raw: np.ndarray) -> np.ndarray:
    """Normalize over all cells: (x - mean) / population stddev.

    Degenerate input (stddev < 1e-9, e.g. pure silence) maps to all zeros.
    Output is float32, matching the on-disk representation.
    """
    x = np.asarray(raw, dtype=np.float64)
    std = x.std()
    if std < 1e-9:
        return np.zeros_like(x, dtype=np.float32)
    return ((x - x.mean()) / std).astype(np.float32)


def write_spectrogram(s: Spectrogram, path) -> None:
    meta_blob = json.dumps(
        {
            "id": s.meta.id,
            "source": s.meta.source,
            "captured_at": s.meta.captured_at,
            "species_hint": s.meta.species_hint,
        },
        sort_keys=True,
    ).encode("utf-8")
    rows, cols = s.values.shape
    header = _HEADER.pack(WPSG_MAGIC, WPSG_VERSION, rows, cols, LABEL_TO_CODE[s.meta.label], 0)
    payload = np.ascontiguousarray(s.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", len(meta_blob)))
        fh.write(meta_blob)


def save_spectrogram(s: Spectrogram, dir_path) -> Path:
    """Write the spectrogram as ``<id>.wpsg`` inside dir_path."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    path = dir_path / f"{s.meta.id}.wpsg"
    write_spectrogram(s, path)
    return path


def load_spectrogram(path) -> Spectrogram:
    """Read one WPSG file; round-trips bit-exactly with write_spectrogram."""
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < _HEADER.size:
        raise TruncatedError(f"{path}: header truncated ({len(data)} bytes)")
    magic, version, rows, cols, label_code, _reserved = _HEADER.unpack_from(data, 0)
    if magic != WPSG_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != WPSG_VERSION:
        raise VersionError(f"{path}: unsupported version {version}")
    if (rows, cols) != SPECTROGRAM_SHAPE:
        raise ShapeMismatchError(f"{path}: shape {rows}x{cols}, expected 600x7")
    if label_code >= len(LABELS):
        raise VersionError(f"{path}: unknown label code {label_code}")

    offset = _HEADER.size
    n_payload = rows * cols * 4
    if len(data) < offset + n_payload + 4:
        raise TruncatedError(f"{path}: value payload truncated")
    values = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset).reshape(rows, cols)
    offset += n_payload
    (meta_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + meta_len:
        raise TruncatedError(f"{path}: metadata blob truncated")
    try:
        meta_dict = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TruncatedError(f"{path}: metadata blob unreadable: {exc}") from exc

    meta = SpectrogramMeta(
        id=meta_dict["id"],
        source=meta_dict.get("source", ""),
        captured_at=meta_dict.get("captured_at", ""),
        label=LABELS[label_code],
        species_hint=meta_dict.get("species_hint"),
    )
    return Spectrogram(values=values.copy(), meta=meta)


def rewrite_label_byte(path, label: str) -> None:
    """Update the label field of an existing WPSG file in place."""
    code = LABEL_TO_CODE[label]
    with open(path, "r+b") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedError(f"{path}: header truncated")
        magic = header[:4]
        if magic != WPSG_MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        fh.seek(10)  # magic(4) + version(2) + rows(2) + cols(2)
        fh.write(bytes([code]))


def index_path(dataset_dir) -> Path:
    return Path(dataset_dir) / INDEX_FILENAME


def read_index(dataset_dir) -> list[dict]:
    """Load index.jsonl: one {path, id, label} object per file."""
    entries = []
    with open(index_path(dataset_dir), "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def write_index(dataset_dir, entries) -> None:
    """Atomically replace index.jsonl (write temp file, then rename).

    A crash between the temp write and the rename leaves either the old or
    the new index on disk, never a truncated one.
    """
    target = index_path(dataset_dir)
    tmp = target.with_suffix(".jsonl.tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for entry in entries:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()
