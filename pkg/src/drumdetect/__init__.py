"""Woodpecker drumming detection, end to end in software.

The chain mirrors the deployed device: audio -> 7-band analyzer ->
5 ms band frames -> 3 s sliding window -> z-scored 600x7 spectrogram ->
CNN classifier -> debounced deterrent trigger. Datasets are synthetic or
imported WAV recordings, labeled through the bundled annotation service.
"""

__version__ = "0.1.0"

from .audio import AudioClip, read_wav, write_wav
from .analyzer import (
    ADC_MAX,
    BAND_CENTERS_HZ,
    BandFrame,
    FilterBank,
    analyze_clip,
    design_filter_bank,
    frames_to_matrix,
)
from .spectrogram import (
    SPECTROGRAM_SHAPE,
    WINDOW_TICKS,
    SlidingWindow,
    Spectrogram,
    SpectrogramMeta,
    load_spectrogram,
    save_spectrogram,
    zscore,
)
from .cnn import (
    CLASS_NAMES,
    Model,
    TrainConfig,
    TrainHistory,
    build_reference_model,
    load_weights,
    predict,
    save_weights,
    train,
)
from .dataset import (
    DatasetManifest,
    DrummingParams,
    NegativeParams,
    build_dataset,
    import_wav,
    synth_drumming,
    synth_negative,
)
from .runtime import (
    DetectionEvent,
    DetectorConfig,
    DeterrentEmitter,
    TimingReport,
    TriggerPolicy,
    benchmark,
    run_detector,
)

__all__ = [
    "ADC_MAX",
    "AudioClip",
    "BAND_CENTERS_HZ",
    "BandFrame",
    "CLASS_NAMES",
    "DatasetManifest",
    "DetectionEvent",
    "DetectorConfig",
    "DeterrentEmitter",
    "DrummingParams",
    "FilterBank",
    "Model",
    "NegativeParams",
    "SPECTROGRAM_SHAPE",
    "SlidingWindow",
    "Spectrogram",
    "SpectrogramMeta",
    "TimingReport",
    "TrainConfig",
    "TrainHistory",
    "TriggerPolicy",
    "WINDOW_TICKS",
    "analyze_clip",
    "benchmark",
    "build_dataset",
    "build_reference_model",
    "design_filter_bank",
    "frames_to_matrix",
    "import_wav",
    "load_spectrogram",
    "load_weights",
    "predict",
    "read_wav",
    "run_detector",
    "save_spectrogram",
    "save_weights",
    "synth_drumming",
    "synth_negative",
    "train",
    "write_wav",
    "zscore",
]
