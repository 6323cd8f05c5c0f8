"""Software stand-in for the mic -> 7-band spectrum analyzer -> ADC chain.

Each band is a second-order band-pass section followed by an envelope
follower (rectifier, instantaneous attack, exponential release). Envelopes
are sampled every 5 ms and quantized to a 12-bit ADC code.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import MIN_SAMPLE_RATE_HZ, AudioClip

BAND_CENTERS_HZ = (63.0, 160.0, 400.0, 1000.0, 2500.0, 6250.0, 16000.0)
N_BANDS = len(BAND_CENTERS_HZ)
TICK_MS = 5
TICKS_PER_SECOND = 1000 // TICK_MS
ADC_MAX = 4095

# internal chunk length for the vectorized envelope recursion; bounds the
# r**-k range so the cumulative-max trick stays well conditioned
_ENV_CHUNK = 512


@dataclass
class BandFrame:
    """Quantized 7-band amplitudes for one 5 ms tick."""

    amplitudes: np.ndarray  # (7,) ints in [0, 4095]
    tick_index: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.shape != (N_BANDS,):
            raise ValueError(f"expected {N_BANDS} band amplitudes, got shape {amps.shape}")
        if amps.min() < 0 or amps.max() > ADC_MAX:
            raise ValueError("band amplitudes out of ADC range [0, 4095]")
        if self.tick_index < 0:
            raise ValueError("tick_index must be non-negative")
        self.amplitudes = amps.astype(np.uint16)


def _bandpass_coeffs(center_hz: float, sample_rate_hz: int, q: float):
    """Second-order band-pass with unit peak gain at the center frequency.

    A center at or above ~0.49 * fs (only the 16 kHz band at exactly 32 kHz)
    is pulled just below Nyquist, where a real band-pass can still resonate.
    """
    f0 = min(center_hz, 0.49 * sample_rate_hz)
    w0 = 2.0 * np.pi * f0 / sample_rate_hz
    alpha = np.sin(w0) / (2.0 * q)
    b = np.array([alpha, 0.0, -alpha])
    a = np.array([1.0 + alpha, -2.0 * np.cos(w0), 1.0 - alpha])
    return b / a[0], a / a[0]


def tick_boundaries(n_ticks: int, sample_rate_hz: int) -> np.ndarray:
    """Cumulative sample count consumed after each of the first n ticks.

    Boundary k is ceil(k * fs * 5 ms); hops alternate 221/220 samples at
    44.1 kHz so the long-run tick rate is exactly 200 Hz with no drift.
    """
    k = np.arange(1, n_ticks + 1, dtype=np.int64)
    return (k * sample_rate_hz * TICK_MS + 999) // 1000


def tick_count(n_samples: int, sample_rate_hz: int) -> int:
    """Number of complete 5 ms ticks in n_samples: floor(duration / 5 ms)."""
    return int((n_samples * 1000) // (sample_rate_hz * TICK_MS))


class FilterBank:
    """Stateful 7-band analyzer: biquad sections plus envelope followers.

    Single-threaded streaming object; the envelope states are the only
    memory besides the biquad delay lines. Processing is causal and
    block-size invariant.
    """

    def __init__(self, sample_rate_hz: int, q: float = 4.0, release_ms: float = 15.0):
        if sample_rate_hz < MIN_SAMPLE_RATE_HZ:
            raise ValueError(
                f"sample rate {sample_rate_hz} Hz too low for the 16 kHz band; "
                f"need >= {MIN_SAMPLE_RATE_HZ} Hz"
            )
        if q <= 0:
            raise ValueError("q must be positive")
        if release_ms <= 0:
            raise ValueError("release_ms must be positive")

        self.sample_rate_hz = int(sample_rate_hz)
        self.q = float(q)
        self.release_ms = float(release_ms)
        self.centers_hz = BAND_CENTERS_HZ

        coeffs = [_bandpass_coeffs(f0, sample_rate_hz, q) for f0 in BAND_CENTERS_HZ]
        self._b = np.stack([c[0] for c in coeffs])
        self._a = np.stack([c[1] for c in coeffs])
        self._zi = np.zeros((N_BANDS, 2))

        self.envelope_states = np.zeros(N_BANDS)
        self._release_coeff = float(np.exp(-1.0 / (self.release_ms * 1e-3 * sample_rate_hz)))
        # per-chunk lookup tables: r**-(j+1) and r**(j+1)
        j = np.arange(_ENV_CHUNK, dtype=np.float64) + 1.0
        self._q_table = self._release_coeff ** -j
        self._r_table = self._release_coeff ** j

    def reset(self) -> None:
        self._zi[:] = 0.0
        self.envelope_states[:] = 0.0

    def _envelope_advance(self, rect: np.ndarray, band: int) -> np.ndarray:
        """Run e[n] = max(rect[n], r * e[n-1]) for one band, vectorized.

        Returns the full envelope series and leaves the band state at the
        final value.
        """
        out = np.empty_like(rect)
        carry = self.envelope_states[band]
        pos = 0
        n = len(rect)
        while pos < n:
            m = min(_ENV_CHUNK, n - pos)
            u = np.maximum.accumulate(rect[pos : pos + m] * self._q_table[:m])
            seg = np.maximum(u, carry) * self._r_table[:m]
            out[pos : pos + m] = seg
            carry = seg[-1]
            pos += m
        self.envelope_states[band] = carry
        return out

    def process_series(self, samples: np.ndarray) -> np.ndarray:
        """Filter a block and return per-sample envelopes, shape (7, len).

        Advances all filter and envelope state; feeding the same audio in
        any block partition yields the same states (to float rounding).
        """
        samples = np.asarray(samples, dtype=np.float64)
        if samples.size == 0:
            return np.zeros((N_BANDS, 0))
        series = np.empty((N_BANDS, len(samples)))
        for i in range(N_BANDS):
            y, self._zi[i] = lfilter(self._b[i], self._a[i], samples, zi=self._zi[i])
            series[i] = self._envelope_advance(np.abs(y), i)
        return series

    def process_block(self, samples: np.ndarray) -> None:
        """Consume a block of audio, updating envelope states only."""
        self.process_series(samples)

    def sample_bands(self, tick_index: int) -> BandFrame:
        """Quantize the current envelopes to a 12-bit ADC frame.

        Envelope 1.0 maps to full scale 4095, round-half-up, saturating.
        Sampling does not reset the envelopes; release decay is the only
        forgetting mechanism.
        """
        codes = np.floor(self.envelope_states * ADC_MAX + 0.5)
        codes = np.clip(codes, 0, ADC_MAX).astype(np.uint16)
        return BandFrame(amplitudes=codes, tick_index=tick_index)


def quantize_envelopes(envelopes: np.ndarray) -> np.ndarray:
    """Map envelope values in [0, 1] to saturating 12-bit ADC codes."""
    codes = np.floor(np.asarray(envelopes, dtype=np.float64) * ADC_MAX + 0.5)
    return np.clip(codes, 0, ADC_MAX).astype(np.uint16)


def design_filter_bank(sample_rate_hz: int, q: float = 4.0, release_ms: float = 15.0) -> FilterBank:
    """Build the 7-band analyzer for a given audio rate."""
    return FilterBank(sample_rate_hz, q=q, release_ms=release_ms)


def analyze_clip(clip: AudioClip, q: float = 4.0, release_ms: float = 15.0,
                 bank: FilterBank | None = None) -> list[BandFrame]:
    """Run a whole clip through the analyzer at the 5 ms tick cadence.

    Returns floor(duration / 5 ms) frames. A fresh bank is designed at the
    clip's rate unless one is supplied (it is not reset). Deterministic:
    a pure function of (clip, configuration).
    """
    if bank is None:
        bank = design_filter_bank(clip.sample_rate_hz, q=q, release_ms=release_ms)
    elif bank.sample_rate_hz != clip.sample_rate_hz:
        raise ValueError(
            f"bank designed for {bank.sample_rate_hz} Hz cannot analyze a "
            f"{clip.sample_rate_hz} Hz clip"
        )

    n_ticks = tick_count(len(clip.samples), clip.sample_rate_hz)
    if n_ticks == 0:
        return []
    boundaries = tick_boundaries(n_ticks, clip.sample_rate_hz)
    series = bank.process_series(clip.samples[: boundaries[-1]])
    # envelope state at tick k is the value after its last consumed sample
    at_ticks = series[:, boundaries - 1]
    codes = quantize_envelopes(at_ticks)
    return [BandFrame(amplitudes=codes[:, k], tick_index=k) for k in range(n_ticks)]


def frames_to_matrix(frames) -> np.ndarray:
    """Stack frames into an (n_ticks, 7) integer matrix, oldest first."""
    return np.stack([f.amplitudes for f in frames]).astype(np.int64)
