"""Walk through the analyzer front end: audio in, 7 quantized bands out.

Synthesizes a drumming burst, streams it through the band-pass/envelope
chain at the 5 ms tick cadence, and shows why 25 Hz drumming is visible
at this time resolution.
"""

import numpy as np

from drumdetect import DrummingParams, analyze_clip, frames_to_matrix, synth_drumming
from drumdetect.analyzer import BAND_CENTERS_HZ

# A 3 s clip holding a 2 s burst of 25 Hz drumming at a random offset.
clip = synth_drumming(DrummingParams(strike_rate_hz=25.0, burst_duration_s=2.0), seed=7)
print(f"clip: {clip.duration_s:.1f} s at {clip.sample_rate_hz} Hz")

frames = analyze_clip(clip)
matrix = frames_to_matrix(frames)  # (600 ticks, 7 bands), ADC codes 0..4095
print(f"frames: {len(frames)} ticks x {matrix.shape[1]} bands")

print("\nper-band peak ADC code:")
for band, f0 in enumerate(BAND_CENTERS_HZ):
    peak = matrix[:, band].max()
    bar = "#" * int(40 * peak / 4095)
    print(f"  {f0:7.0f} Hz  {peak:4d}  {bar}")

# The drumming strikes are broadband, so sum the bands and look at the
# tick-domain periodicity: strikes 40 ms apart are 8 ticks apart.
energy = matrix.sum(axis=1).astype(float)
energy -= energy.mean()
ac = np.correlate(energy, energy, mode="full")[len(energy) - 1 :]
ac /= ac[0]
print("\nautocorrelation of band-summed energy (ticks 4..16):")
for lag in range(4, 17):
    marker = " <- 40 ms strike period" if lag == 8 else ""
    print(f"  lag {lag:2d} ({lag * 5:3d} ms): {ac[lag]:+.3f} {'*' * max(0, int(30 * ac[lag]))}{marker}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(10, 3))
    ax.imshow(matrix.T, aspect="auto", origin="lower", cmap="magma",
              extent=[0, 3, -0.5, 6.5])
    ax.set_yticks(range(7), [f"{f:.0f}" for f in BAND_CENTERS_HZ])
    ax.set_xlabel("time (s)")
    ax.set_ylabel("band center (Hz)")
    ax.set_title("drumming burst through the 7-band analyzer")
    fig.tight_layout()
    fig.savefig("analyzer_bands.png", dpi=120)
    print("\nwrote analyzer_bands.png")
except ImportError:
    print("\n(matplotlib not installed; skipping the heatmap image)")
