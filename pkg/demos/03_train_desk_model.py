"""Desk-scale training: both stages on the synthetic burst corpus.

Stage 1 fits the audio autoencoder (encoder + filtered-noise decoder) with
the multi-scale spectral loss; stage 2 freezes it and fits the control
encoder to the learned latents.  Writes the checkpoint the later demos
load.  Takes a few minutes; pass --quick for a fast smoke run.
"""

import sys
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stepsynth import TrainConfig, desk_config, train_stage1, train_stage2
from stepsynth.corpus import make_burst_corpus, write_corpus
from stepsynth.training import items_from_clips, write_loss_csv

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

steps = 200 if "--quick" in sys.argv else 2000
engine = desk_config()
config = TrainConfig(engine=engine, steps=steps, batch_size=8, seed=3)

clips = make_burst_corpus(n_clips=64, seed=11)
write_corpus(OUT / "corpus", clips)
items = items_from_clips(clips, engine, seed=0)
print(f"corpus: {len(items)} clips, labels "
      f"{sorted(set(i.label_name for i in items))}")

t0 = time.time()
stage1, trace1 = train_stage1(items, config)
print(f"stage 1: {steps} steps in {time.time() - t0:.0f} s, "
      f"loss {trace1[0][1]:.2f} -> {trace1[-1][1]:.2f}")

t0 = time.time()
model, trace2 = train_stage2(items, stage1, config)
print(f"stage 2: {steps} steps in {time.time() - t0:.0f} s, "
      f"latent MSE {trace2[0][1]:.4f} -> {trace2[-1][1]:.4f}")

model.save(OUT / "desk_model.ckpt")
write_loss_csv(OUT / "stage1_loss.csv", trace1)
write_loss_csv(OUT / "stage2_loss.csv", trace2)

fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
for ax, trace, title in ((axes[0], trace1, "stage 1: spectral loss"),
                         (axes[1], trace2, "stage 2: latent MSE")):
    values = [v for _, v in trace]
    ax.plot(values, lw=0.4, alpha=0.5)
    if len(values) >= 100:
        smooth = np.convolve(values, np.ones(100) / 100, mode="valid")
        ax.plot(np.arange(len(smooth)) + 50, smooth, lw=1.5)
    ax.set_title(title)
    ax.set_xlabel("step")
    ax.set_yscale("log")
fig.tight_layout()
fig.savefig(OUT / "training_losses.png", dpi=120)
print(f"wrote {OUT / 'desk_model.ckpt'} and {OUT / 'training_losses.png'}")
