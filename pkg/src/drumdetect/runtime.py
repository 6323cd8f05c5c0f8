"""End-to-end detection loop: stream, classify every second, debounce, act.

The loop mirrors the deployed cadence: 5 ms ticks fill a 3 s window, the
first inference runs once the window is warm (tick 600), then every 200
ticks. A trigger policy debounces detections into deterrent events.
"""

import json
import logging
import queue
import threading
import time
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .analyzer import FilterBank, design_filter_bank, tick_boundaries, tick_count
from .audio import AudioClip
from .cnn.model import Model, drumming_probability
from .spectrogram import WINDOW_TICKS, SlidingWindow, zscore

log = logging.getLogger("drumdetect.runtime")

TICKS_PER_INFERENCE = 200  # 1 s
STATUS_EVERY_TICKS = 2000  # 10 s


@dataclass
class DetectorConfig:
    inference_period_ticks: int = TICKS_PER_INFERENCE
    warmup_ticks: int = WINDOW_TICKS
    trigger_threshold: float = 0.8
    consecutive_required: int = 2
    cooldown_s: float = 10.0
    q: float = 4.0
    release_ms: float = 15.0

    def __post_init__(self):
        if self.inference_period_ticks < 1:
            raise ValueError("inference_period_ticks must be >= 1")
        if not 0.0 < self.trigger_threshold <= 1.0:
            raise ValueError("trigger_threshold must be in (0, 1]")
        if self.consecutive_required < 1:
            raise ValueError("consecutive_required must be >= 1")

    @property
    def cooldown_ticks(self) -> int:
        return int(round(self.cooldown_s * 1000 / 5))


@dataclass
class DetectionEvent:
    at_tick: int
    probability: float
    kind: str  # detection | trigger | status
    note: str | None = None

    def as_dict(self) -> dict:
        d = {
            "tick": self.at_tick,
            "time_s": self.at_tick * 0.005,
            "kind": self.kind,
            "probability": self.probability,
        }
        if self.note is not None:
            d["note"] = self.note
        return d


@dataclass
class TimingReport:
    preprocessing_ms: list = field(default_factory=list)
    inference_ms: list = field(default_factory=list)

    def record(self, preprocessing_s: float, inference_s: float) -> None:
        self.preprocessing_ms.append(preprocessing_s * 1e3)
        self.inference_ms.append(inference_s * 1e3)

    def aggregates(self) -> dict:
        def stats(xs):
            if not xs:
                return {"mean_ms": 0.0, "p95_ms": 0.0}
            arr = np.asarray(xs)
            return {"mean_ms": float(arr.mean()), "p95_ms": float(np.percentile(arr, 95))}

        return {
            "n": len(self.inference_ms),
            "preprocessing": stats(self.preprocessing_ms),
            "inference": stats(self.inference_ms),
        }


class TriggerPolicy:
    """Debounce: N consecutive probabilities over threshold fire a trigger,
    then a cooldown suppresses repeats. A pure fold over (tick, prob)."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self._streak = 0
        self._cooldown_until = 0

    def update(self, tick: int, probability: float) -> bool:
        if probability >= self.config.trigger_threshold:
            self._streak += 1
        else:
            self._streak = 0
        if self._streak >= self.config.consecutive_required and tick >= self._cooldown_until:
            self._streak = 0
            self._cooldown_until = tick + self.config.cooldown_ticks
            return True
        return False


def trigger_decisions(detections, config: DetectorConfig) -> list[tuple[int, bool]]:
    """Fold a (tick, probability) stream into per-detection trigger flags."""
    policy = TriggerPolicy(config)
    return [(tick, policy.update(tick, prob)) for tick, prob in detections]


class DeterrentEmitter:
    """Stand-in for the deterrent GPIO: a structured log line per trigger,
    plus an optional fire-and-forget webhook POST.

    Webhook delivery runs on a worker thread behind a bounded queue so it
    can never block or crash the inference path; failures and overflow
    drops are counted.
    """

    def __init__(self, webhook_url: str | None = None, queue_size: int = 16,
                 timeout_s: float = 2.0):
        self.webhook_url = webhook_url
        self.timeout_s = timeout_s
        self.posts_sent = 0
        self.failures = 0
        self.dropped = 0
        self._queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self._worker = None
        if webhook_url:
            self._worker = threading.Thread(target=self._drain, daemon=True)
            self._worker.start()

    def emit(self, event: DetectionEvent) -> None:
        stamp = datetime.now(timezone.utc).isoformat()
        log.info("deterrent trigger at=%s tick=%d probability=%.3f",
                 stamp, event.at_tick, event.probability)
        if not self.webhook_url:
            return
        try:
            self._queue.put_nowait(event.as_dict())
        except queue.Full:
            self.dropped += 1
            log.warning("webhook queue full; dropping trigger at tick %d", event.at_tick)

    def _drain(self) -> None:
        while True:
            payload = self._queue.get()
            if payload is None:
                return
            try:
                body = json.dumps(payload).encode("utf-8")
                req = urllib.request.Request(
                    self.webhook_url, data=body,
                    headers={"Content-Type": "application/json"}, method="POST"
                )
                with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    if resp.status >= 400:
                        raise OSError(f"webhook returned {resp.status}")
                self.posts_sent += 1
            except Exception as exc:  # never take down the loop
                self.failures += 1
                log.warning("webhook delivery failed: %s", exc)

    def close(self, timeout_s: float = 5.0) -> None:
        if self._worker is not None:
            self._queue.put(None)
            self._worker.join(timeout=timeout_s)
            self._worker = None


def _frame_stream(source, config: DetectorConfig):
    """Yield BandFrames from an AudioClip or pass an iterable through."""
    if isinstance(source, AudioClip):
        bank = design_filter_bank(source.sample_rate_hz, q=config.q,
                                  release_ms=config.release_ms)
        n_ticks = tick_count(len(source.samples), source.sample_rate_hz)
        if n_ticks == 0:
            return
        bounds = tick_boundaries(n_ticks, source.sample_rate_hz)
        prev = 0
        for k in range(n_ticks):
            bank.process_block(source.samples[prev : bounds[k]])
            prev = bounds[k]
            yield bank.sample_bands(k)
    else:
        yield from source


def run_detector(source, model: Model, config: DetectorConfig | None = None,
                 emitter: DeterrentEmitter | None = None):
    """Run the full loop over a clip or frame stream.

    Returns (events, timing). Inference happens first at the warmup tick
    (600), then every inference period; each inference snapshots the
    window, normalizes, and classifies. Deterministic for file input.
    """
    config = config or DetectorConfig()
    window = SlidingWindow(config.warmup_ticks)
    policy = TriggerPolicy(config)
    timing = TimingReport()
    events: list[DetectionEvent] = []

    last_prob = 0.0
    ticks_seen = 0
    for frame in _frame_stream(source, config):
        window.push_frame(frame)
        ticks_seen += 1

        if ticks_seen % STATUS_EVERY_TICKS == 0:
            events.append(DetectionEvent(at_tick=ticks_seen, probability=last_prob,
                                         kind="status"))

        warm = ticks_seen >= config.warmup_ticks
        due = warm and (ticks_seen - config.warmup_ticks) % config.inference_period_ticks == 0
        if not due:
            continue

        t0 = time.perf_counter()
        values = zscore(window.snapshot_raw())
        t1 = time.perf_counter()
        prob = drumming_probability(model, values)
        t2 = time.perf_counter()
        timing.record(t1 - t0, t2 - t1)
        last_prob = prob

        if prob >= config.trigger_threshold:
            events.append(DetectionEvent(at_tick=ticks_seen, probability=prob,
                                         kind="detection"))
        if policy.update(ticks_seen, prob):
            trigger = DetectionEvent(at_tick=ticks_seen, probability=prob, kind="trigger")
            events.append(trigger)
            if emitter is not None:
                emitter.emit(trigger)

    if ticks_seen < config.warmup_ticks:
        events.append(DetectionEvent(at_tick=ticks_seen, probability=0.0,
                                     kind="status", note="never warmed up"))

    events.sort(key=lambda e: (e.at_tick, 0 if e.kind == "status" else 1))
    return events, timing


def benchmark(model: Model, n_runs: int = 100, seed: int = 0) -> TimingReport:
    """Measure preprocessing (z-score) and inference wall time on random windows."""
    rng = np.random.default_rng(seed)
    timing = TimingReport()
    for _ in range(n_runs):
        raw = rng.integers(0, 4096, size=(WINDOW_TICKS, 7)).astype(np.float64) / 4095.0
        t0 = time.perf_counter()
        values = zscore(raw)
        t1 = time.perf_counter()
        model.forward(values.astype(np.float32)[None], training=False)
        t2 = time.perf_counter()
        timing.record(t1 - t0, t2 - t1)
    return timing
