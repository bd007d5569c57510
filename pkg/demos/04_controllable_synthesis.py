"""Controllability round trip on the trained desk model.

Requests audio from (surface, force curve, noise), then runs the analysis
chain on the result and overlays the requested curve against the measured
envelope, with the Pearson correlation that quantifies control fidelity.
Run 03_train_desk_model.py first.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stepsynth import (GRFParams, ModelCheckpoint, SurfaceLabel, control_proxy,
                       grf_curve, make_u_noise, synthesize, write_wav)

OUT = Path(__file__).parent / "output"
ckpt_path = OUT / "desk_model.ckpt"
if not ckpt_path.exists():
    raise SystemExit("run 03_train_desk_model.py first (missing desk_model.ckpt)")

model = ModelCheckpoint.load(ckpt_path)
print(f"model surfaces: {model.vocab}")

gamma = grf_curve(GRFParams(step_period=0.5, jitter=0.1), duration=2.0,
                  control_rate=250, seed=21)
u = make_u_noise(gamma.num_frames, model.config.n_gamma, seed=5)

fig, axes = plt.subplots(len(model.vocab), 1, figsize=(10, 5), sharex=True)
for ax, surface in zip(np.atleast_1d(axes), model.vocab):
    label = SurfaceLabel(model.vocab.index(surface))
    clip = synthesize(label, gamma, u, synth_seed=9, ckpt=model)
    write_wav(OUT / f"synth_{surface}.wav", clip)
    measured = control_proxy(clip)
    r = np.corrcoef(gamma.values[:, 0], measured.values[:, 0])[0, 1]
    print(f"{surface:>6}: requested-vs-measured correlation r = {r:.3f}")

    t = np.arange(gamma.num_frames) / 250.0
    scale = measured.values.max() or 1.0
    ax.plot(t, gamma.values[:, 0] / gamma.values.max(), label="requested force")
    ax.plot(t, measured.values[:, 0] / scale, label=f"measured envelope (r={r:.2f})")
    ax.set_ylabel(surface)
    ax.legend(loc="upper right", fontsize=8)
np.atleast_1d(axes)[-1].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig(OUT / "round_trip.png", dpi=120)
print(f"wrote {OUT / 'round_trip.png'} and synth_*.wav")
