"""Envelope analysis: from raw audio to a control-rate force estimate.

Builds a synthetic footstep clip, then walks the analysis chain the engine
uses everywhere: analytic-signal envelope -> Laplacian smoothing ->
control-rate decimation.  Saves a comparison plot and the control JSON.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stepsynth import control_proxy, hilbert_envelope, laplacian_smooth
from stepsynth.corpus import make_burst_clip

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

clip = make_burst_clip("thud", duration=1.0, seed=7)
print(f"clip: {clip.duration:.2f} s at {clip.sample_rate} Hz")

envelope = hilbert_envelope(clip.samples)
smoothed = laplacian_smooth(envelope, iterations=256, lam=0.25)
gamma = control_proxy(clip)
print(f"control estimate: {gamma.num_frames} frames at {gamma.control_rate} Hz")
print(f"peak force estimate: {gamma.values.max():.3f}")

t_audio = np.arange(len(clip)) / clip.sample_rate
t_ctrl = np.arange(gamma.num_frames) / gamma.control_rate

fig, axes = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
axes[0].plot(t_audio, clip.samples, lw=0.3, color="gray", label="waveform")
axes[0].plot(t_audio, envelope, lw=0.8, color="tab:orange", label="envelope")
axes[0].legend(loc="upper right")
axes[0].set_ylabel("amplitude")
axes[1].plot(t_audio, smoothed, lw=1.0, color="tab:orange", label="smoothed envelope")
axes[1].step(t_ctrl, gamma.values[:, 0], where="post", color="tab:blue",
             label="control frames (250 Hz)")
axes[1].legend(loc="upper right")
axes[1].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig(OUT / "envelope_proxy.png", dpi=120)

(OUT / "gamma.json").write_text(gamma.to_json(), encoding="utf-8")
print(f"wrote {OUT / 'envelope_proxy.png'} and {OUT / 'gamma.json'}")
