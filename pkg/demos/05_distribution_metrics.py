"""Distribution distances: how close is each engine to the reference set?

Embeds three audio sets (held-out synthetic reference, trained model
outputs, classical baseline outputs) and prints the pairwise FAD / MMD
table.  The learned model should sit closer to the reference than the
classical baseline.  Run 03_train_desk_model.py first.
"""

from pathlib import Path

import numpy as np

from stepsynth import (GRFParams, ModelCheckpoint, SurfaceLabel, embed_clips,
                       evaluate_sets, grf_curve, load_recipes, make_u_noise,
                       pa_synthesize, synthesize)
from stepsynth.corpus import make_burst_corpus

OUT = Path(__file__).parent / "output"
ckpt_path = OUT / "desk_model.ckpt"
if not ckpt_path.exists():
    raise SystemExit("run 03_train_desk_model.py first (missing desk_model.ckpt)")

N = 300  # one-second samples per set; the acceptance suite uses 1200
model = ModelCheckpoint.load(ckpt_path)
recipes = load_recipes()
recipe_names = sorted(recipes)
rng = np.random.default_rng(77)

reference = [clip for clip, _ in make_burst_corpus(n_clips=N, seed=555)]
model_out, classic_out = [], []
for i in range(N):
    params = GRFParams(step_period=float(rng.uniform(0.3, 0.6)),
                       jitter=float(rng.uniform(0.0, 0.15)))
    gamma = grf_curve(params, 1.0, 250, seed=int(rng.integers(1 << 30)))
    u = make_u_noise(gamma.num_frames, 1, seed=10_000 + i)
    model_out.append(synthesize(SurfaceLabel(i % len(model.vocab)), gamma, u,
                                20_000 + i, model))
    classic_out.append(pa_synthesize(recipes[recipe_names[i % len(recipe_names)]],
                                     gamma, seed=30_000 + i))

sets = [embed_clips(reference, name="reference", config=model.config),
        embed_clips(model_out, name="learned", config=model.config),
        embed_clips(classic_out, name="classical", config=model.config)]
report = evaluate_sets(sets, config=model.config)
print(report.table())
report.write_csv(OUT / "metrics.csv")
(OUT / "metrics.json").write_text(report.to_json(), encoding="utf-8")

closer = (report.get("learned", "reference")["fad"]
          < report.get("classical", "reference")["fad"])
print(f"\nlearned model closer to reference than classical baseline: {closer}")
