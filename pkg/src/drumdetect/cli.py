"""Command-line entry point wiring all subcommands.

JSON results go to stdout; human-readable summaries and the resolved
configuration header go to stderr. Exit codes: 0 success, 1 usage error,
2 data error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analyzer import analyze_clip
from .audio import read_wav
from .cnn.model import build_reference_model, load_weights, predict_proba, save_weights
from .cnn.train import TrainConfig, train
from .dataset import build_dataset, import_wav, load_dataset_arrays
from .errors import DatasetError, FormatError
from .runtime import DetectorConfig, DeterrentEmitter, benchmark, run_detector

log = logging.getLogger("drumdetect")

ENV_PREFIX = "DRUMDETECT_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class GlobalConfig:
    seed: int = 0
    dataset_dir: str | None = None
    model_path: str | None = None
    verbosity: int = 1

    @classmethod
    def resolve(cls, args) -> "GlobalConfig":
        """Flags beat environment variables beat defaults."""

        def env(name, cast=str):
            raw = os.environ.get(ENV_PREFIX + name)
            return cast(raw) if raw is not None else None

        return cls(
            seed=args.seed if args.seed is not None else (env("SEED", int) or 0),
            dataset_dir=getattr(args, "dataset", None) or env("DATASET_DIR"),
            model_path=getattr(args, "model", None) or env("MODEL"),
            verbosity=args.verbose if args.verbose is not None else (env("VERBOSITY", int) or 1),
        )

    def log_header(self, command: str) -> None:
        log.info("run config: %s", json.dumps({
            "command": command,
            "seed": self.seed,
            "dataset_dir": self.dataset_dir,
            "model_path": self.model_path,
            "verbosity": self.verbosity,
        }, sort_keys=True))


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def cmd_synth(args, cfg: GlobalConfig) -> int:
    manifest = build_dataset(args.out, n_total=args.n,
                             positive_fraction=args.positive_fraction, seed=cfg.seed)
    n_pos = sum(1 for e in manifest.entries if e["label"] == "drumming")
    log.info("wrote %d spectrograms (%d drumming / %d other) to %s",
             len(manifest.entries), n_pos, len(manifest.entries) - n_pos, args.out)
    _emit({"out": str(args.out), "n_total": len(manifest.entries),
           "drumming": n_pos, "other": len(manifest.entries) - n_pos,
           "seed": manifest.seed})
    return EXIT_OK


def cmd_import(args, cfg: GlobalConfig, label: str | None = None) -> int:
    label = label or args.label
    entries = import_wav(args.wav, label, args.out)
    log.info("imported %d windows from %s as %r", len(entries), args.wav, label)
    _emit({"out": str(args.out), "imported": len(entries), "label": label,
           "ids": [e["id"] for e in entries]})
    return EXIT_OK


def cmd_capture(args, cfg: GlobalConfig) -> int:
    return cmd_import(args, cfg, label="unlabeled")


def cmd_train(args, cfg: GlobalConfig) -> int:
    if not cfg.dataset_dir:
        raise DatasetError("no dataset directory given (--dataset or DRUMDETECT_DATASET_DIR)")
    x, y, splits, n_skipped = load_dataset_arrays(cfg.dataset_dir)
    if n_skipped:
        log.warning("excluding %d unlabeled spectrograms", n_skipped)
    model = build_reference_model(seed=cfg.seed, dropout_rate=args.dropout)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.learning_rate, seed=cfg.seed)
    split = None
    if (splits >= 0).all():
        split = (np.flatnonzero(splits == 0), np.flatnonzero(splits == 1))
    history = train(model, x, y, config, split=split)
    out = args.out or "model.wpnn"
    save_weights(model, out)
    log.info("trained %d epochs; final val accuracy %.4f; weights -> %s",
             config.epochs, history.val_accuracy[-1], out)
    _emit({"model": str(out), "epochs": config.epochs, "history": history.as_dict()})
    return EXIT_OK


def _confusion_and_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> dict:
    # rows: true class, cols: predicted; class order (other, drumming)
    matrix = np.zeros((2, 2), dtype=int)
    for t, p in zip(y_true, y_pred):
        matrix[t, p] += 1
    per_class = {}
    for idx, name in enumerate(("other", "drumming")):
        tp = matrix[idx, idx]
        fp = matrix[1 - idx, idx]
        fn = matrix[idx, 1 - idx]
        per_class[name] = {
            "precision": float(tp / (tp + fp)) if tp + fp else 0.0,
            "recall": float(tp / (tp + fn)) if tp + fn else 0.0,
        }
    return {
        "accuracy": float((y_true == y_pred).mean()),
        "confusion_matrix": matrix.tolist(),
        "per_class_precision_recall": per_class,
    }


def cmd_eval(args, cfg: GlobalConfig) -> int:
    if not cfg.model_path:
        raise DatasetError("no model path given (--model or DRUMDETECT_MODEL)")
    if not cfg.dataset_dir:
        raise DatasetError("no dataset directory given (--dataset or DRUMDETECT_DATASET_DIR)")
    model = load_weights(cfg.model_path)
    x, y, splits, n_skipped = load_dataset_arrays(cfg.dataset_dir)
    if n_skipped:
        log.warning("excluding %d unlabeled spectrograms", n_skipped)
    if (splits >= 0).any():
        keep = splits == 1
        x, y = x[keep], y[keep]
        log.info("evaluating on the %d-sample val split", len(y))
    else:
        log.warning("no split manifest; evaluating on all %d labeled samples", len(y))
    probs = predict_proba(model, x)
    report = _confusion_and_metrics(y, np.argmax(probs, axis=1))
    report["n"] = int(len(y))
    report["excluded_unlabeled"] = n_skipped
    log.info("accuracy %.4f over %d samples", report["accuracy"], report["n"])
    _emit(report)
    return EXIT_OK


def cmd_detect(args, cfg: GlobalConfig) -> int:
    if not cfg.model_path:
        raise DatasetError("no model path given (--model or DRUMDETECT_MODEL)")
    model = load_weights(cfg.model_path)
    clip = read_wav(args.wav)
    config = DetectorConfig(trigger_threshold=args.threshold,
                            consecutive_required=args.consecutive,
                            cooldown_s=args.cooldown)
    webhook = args.webhook or os.environ.get(ENV_PREFIX + "WEBHOOK")
    emitter = DeterrentEmitter(webhook_url=webhook)
    try:
        events, timing = run_detector(clip, model, config, emitter=emitter)
    finally:
        emitter.close()

    if args.status:
        for e in events:
            if e.kind == "status":
                print(f"status t={e.at_tick * 0.005:.1f}s p={e.probability:.3f}"
                      + (f" ({e.note})" if e.note else ""), file=sys.stderr)

    if args.json_events:
        with open(args.json_events, "w", encoding="utf-8") as fh:
            for e in events:
                fh.write(json.dumps(e.as_dict(), sort_keys=True) + "\n")

    counts = {kind: sum(1 for e in events if e.kind == kind)
              for kind in ("detection", "trigger", "status")}
    summary = {
        "wav": str(args.wav),
        "duration_s": clip.duration_s,
        "counts": counts,
        "timing": timing.aggregates(),
        "webhook": {"sent": emitter.posts_sent, "failed": emitter.failures,
                    "dropped": emitter.dropped},
    }
    log.info("detections=%d triggers=%d over %.1f s",
             counts["detection"], counts["trigger"], clip.duration_s)
    _emit(summary)
    return EXIT_OK


def cmd_annotate(args, cfg: GlobalConfig) -> int:
    import uvicorn

    from .annotation import create_app

    host, _, port = args.bind.partition(":")
    static_dir = args.static or _default_static_dir()
    app = create_app(cfg.dataset_dir, static_dir=static_dir)
    log.info("annotation service on http://%s (dataset: %s)", args.bind, cfg.dataset_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8077), log_level="warning")
    return EXIT_OK


def _default_static_dir():
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def cmd_bands(args, cfg: GlobalConfig) -> int:
    clip = read_wav(args.wav)
    frames = analyze_clip(clip)
    print("tick,b63,b160,b400,b1000,b2500,b6250,b16000")
    for frame in frames:
        print(f"{frame.tick_index}," + ",".join(str(int(a)) for a in frame.amplitudes))
    return EXIT_OK


def cmd_bench(args, cfg: GlobalConfig) -> int:
    if cfg.model_path:
        model = load_weights(cfg.model_path)
    else:
        model = build_reference_model(seed=cfg.seed)
        log.info("no model given; benchmarking a freshly initialized one")
    timing = benchmark(model, n_runs=args.runs, seed=cfg.seed)
    report = timing.aggregates()
    log.info("preprocessing mean %.3f ms, inference mean %.3f ms over %d runs",
             report["preprocessing"]["mean_ms"], report["inference"]["mean_ms"],
             report["n"])
    _emit(report)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="drumdetect",
                     description="Woodpecker drumming detection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("-v", "--verbose", type=int, default=None,
                        help="verbosity: 0 quiet, 1 info, 2 debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--n", type=int, default=750, help="number of spectrograms")
    p.add_argument("--positive-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("import", help="import a labeled WAV recording")
    p.add_argument("--wav", required=True)
    p.add_argument("--label", required=True, choices=["drumming", "other"])
    p.add_argument("--out", required=True, help="dataset directory to append to")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("capture", help="import a WAV as unlabeled capture data")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True, help="capture directory to append to")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("train", help="train the classifier on a dataset directory")
    p.add_argument("--dataset", help="dataset directory (or DRUMDETECT_DATASET_DIR)")
    p.add_argument("--out", help="weight file to write (default model.wpnn)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--dropout", type=float, default=0.2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset's val split")
    p.add_argument("--model", help="weight file (or DRUMDETECT_MODEL)")
    p.add_argument("--dataset", help="dataset directory (or DRUMDETECT_DATASET_DIR)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="run the detection loop over a WAV file")
    p.add_argument("--wav", required=True)
    p.add_argument("--model", help="weight file (or DRUMDETECT_MODEL)")
    p.add_argument("--webhook", help="deterrent webhook URL (or DRUMDETECT_WEBHOOK)")
    p.add_argument("--json-events", help="write events as JSON lines to this path")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--consecutive", type=int, default=2)
    p.add_argument("--cooldown", type=float, default=10.0)
    p.add_argument("--status", action="store_true", help="print status lines to stderr")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("annotate", help="serve the labeling API/UI over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--bind", default="127.0.0.1:8077")
    p.add_argument("--static", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("bands", help="print analyzer band amplitudes for a WAV as CSV")
    p.add_argument("wav")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("bench", help="measure preprocessing and inference latency")
    p.add_argument("--model", help="weight file (or DRUMDETECT_MODEL)")
    p.add_argument("--runs", type=int, default=100)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = GlobalConfig.resolve(args)

    level = {0: logging.WARNING, 1: logging.INFO}.get(cfg.verbosity, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg.log_header(args.command)

    try:
        return args.func(args, cfg)
    except (DatasetError, FormatError, FileNotFoundError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
