"""The classical baseline: a force-curve generator driving noise textures.

Renders the repeating heel/roll/ball force curve at a few cadences, then
synthesizes one walk cycle per bundled surface recipe.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stepsynth import GRFParams, grf_curve, load_recipes, pa_synthesize, write_wav

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

fig, ax = plt.subplots(figsize=(10, 3))
for period, jitter in [(0.5, 0.0), (0.35, 0.0), (0.5, 0.15)]:
    curve = grf_curve(GRFParams(step_period=period, jitter=jitter),
                      duration=2.0, control_rate=250, seed=4)
    t = np.arange(curve.num_frames) / 250.0
    ax.plot(t, curve.values[:, 0],
            label=f"period {period}s" + (" + jitter" if jitter else ""))
ax.set_xlabel("time [s]")
ax.set_ylabel("force")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "grf_curves.png", dpi=120)
print(f"wrote {OUT / 'grf_curves.png'}")

walk = grf_curve(GRFParams(step_period=0.5), duration=2.0, control_rate=250)
for name, recipe in sorted(load_recipes().items()):
    clip = pa_synthesize(recipe, walk, seed=11)
    path = OUT / f"pa_{name}.wav"
    write_wav(path, clip)
    rms = float(np.sqrt(np.mean(clip.samples.astype(np.float64) ** 2)))
    print(f"{name:>7}: band {recipe.band_edges}, "
          f"crackle={'yes' if recipe.crackle else 'no'}, rms {rms:.3f} -> {path.name}")
