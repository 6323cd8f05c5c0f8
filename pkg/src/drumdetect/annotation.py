"""HTTP/JSON labeling service over a spectrogram dataset directory.

A human reviews pending (unlabeled) spectrograms and assigns
drumming/other labels. Labels are durable before the request is
acknowledged: the WPSG label byte is rewritten, the index is atomically
replaced, and an append-only history line is added.
"""

import json
import logging
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import DatasetError
from .spectrogram import (
    load_spectrogram,
    read_index,
    rewrite_label_byte,
    write_index,
)

log = logging.getLogger("drumdetect.annotation")

HISTORY_FILENAME = "labels.jsonl"


def apply_label(dataset_dir, spectrogram_id: str, label: str,
                annotator: str | None = None) -> int:
    """Persist one label; returns the number of remaining unlabeled entries.

    Mutation order: WPSG label byte, then atomic index rewrite, then the
    history append. If the index rewrite fails the label byte is restored,
    so the directory is never left with a truncated index.
    """
    if label not in ("drumming", "other"):
        raise ValueError(f"label must be 'drumming' or 'other', got {label!r}")
    dataset_dir = Path(dataset_dir)
    entries = read_index(dataset_dir)
    target = next((e for e in entries if e["id"] == spectrogram_id), None)
    if target is None:
        raise KeyError(spectrogram_id)

    old_label = target["label"]
    file_path = dataset_dir / target["path"]
    rewrite_label_byte(file_path, label)
    target["label"] = label
    try:
        write_index(dataset_dir, entries)
    except Exception:
        rewrite_label_byte(file_path, old_label)
        raise

    history_line = {
        "id": spectrogram_id,
        "label": label,
        "annotated_at": datetime.now(timezone.utc).isoformat(),
        "annotator": annotator,
    }
    with open(dataset_dir / HISTORY_FILENAME, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(history_line, sort_keys=True) + "\n")
        fh.flush()
        os.fsync(fh.fileno())

    return sum(1 for e in entries if e["label"] == "unlabeled")


@dataclass
class _Item:
    id: str
    path: str
    label: str
    source: str
    captured_at: str


class LabelStore:
    """In-memory mirror of a dataset directory with one exclusive writer."""

    def __init__(self, dataset_dir):
        self.dataset_dir = Path(dataset_dir)
        self._lock = threading.Lock()
        try:
            entries = read_index(self.dataset_dir)
        except FileNotFoundError as exc:
            raise DatasetError(f"{dataset_dir}: no index.jsonl; not a dataset directory") from exc
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{dataset_dir}: corrupt index.jsonl: {exc}") from exc

        self._items: dict[str, _Item] = {}
        for entry in entries:
            spec = load_spectrogram(self.dataset_dir / entry["path"])
            self._items[entry["id"]] = _Item(
                id=entry["id"],
                path=entry["path"],
                label=entry["label"],
                source=spec.meta.source,
                captured_at=spec.meta.captured_at,
            )

    def _pending_items(self) -> list[_Item]:
        pending = [i for i in self._items.values() if i.label == "unlabeled"]
        pending.sort(key=lambda i: (i.captured_at, i.id))
        return pending

    def pending(self, limit: int) -> dict:
        with self._lock:
            pending = self._pending_items()
        return {
            "items": [
                {"id": i.id, "source": i.source, "captured_at": i.captured_at}
                for i in pending[:limit]
            ],
            "total": len(pending),
        }

    def stats(self) -> dict:
        with self._lock:
            labels = [i.label for i in self._items.values()]
        drumming = labels.count("drumming")
        other = labels.count("other")
        unlabeled = labels.count("unlabeled")
        return {
            "total": len(labels),
            "labeled": drumming + other,
            "drumming": drumming,
            "other": other,
            "unlabeled": unlabeled,
        }

    def spectrogram_payload(self, spectrogram_id: str) -> dict:
        with self._lock:
            item = self._items.get(spectrogram_id)
            if item is None:
                raise KeyError(spectrogram_id)
            spec = load_spectrogram(self.dataset_dir / item.path)
        rows, cols = spec.values.shape
        return {
            "id": spectrogram_id,
            "rows": rows,
            "cols": cols,
            "values": [[float(v) for v in row] for row in spec.values],
            "meta": {
                "id": spec.meta.id,
                "source": spec.meta.source,
                "captured_at": spec.meta.captured_at,
                "label": item.label,
                "species_hint": spec.meta.species_hint,
            },
        }

    def label(self, spectrogram_id: str, label: str, annotator: str | None) -> int:
        with self._lock:
            if spectrogram_id not in self._items:
                raise KeyError(spectrogram_id)
            remaining = apply_label(self.dataset_dir, spectrogram_id, label, annotator)
            self._items[spectrogram_id].label = label
        return remaining


class LabelRequest(BaseModel):
    id: str
    label: Literal["drumming", "other"]
    annotator: Optional[str] = None


def create_app(dataset_dir, static_dir=None) -> FastAPI:
    """Build the service; fails fast if the dataset directory is unusable."""
    store = LabelStore(dataset_dir)
    app = FastAPI(title="drumdetect annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.get("/api/pending")
    def get_pending(limit: int = 50):
        return store.pending(limit)

    @app.get("/api/spectrogram/{spectrogram_id}")
    def get_spectrogram(spectrogram_id: str):
        try:
            return store.spectrogram_payload(spectrogram_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown id {spectrogram_id!r}")

    @app.post("/api/label")
    def post_label(req: LabelRequest):
        try:
            remaining = store.label(req.id, req.label, req.annotator)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown id {req.id!r}")
        return {"ok": True, "remaining": remaining}

    @app.get("/api/stats")
    def get_stats():
        return store.stats()

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
