import json

import numpy as np
import pytest

import stepsynth as ss
from stepsynth import cli, corpus, models, training
from stepsynth.dsp import ControlSignal

from conftest import pcm16_wav_bytes


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Corpus on disk plus a tiny trained checkpoint for CLI runs."""
    root = tmp_path_factory.mktemp("cliwork")
    clips = corpus.make_burst_corpus(n_clips=6, seed=4)
    manifest = corpus.write_corpus(root / "corpus", clips)

    cfg = ss.desk_config()
    items = training.items_from_clips(clips, cfg, seed=0)
    tc = training.TrainConfig(engine=cfg, steps=8, batch_size=4, seed=1)
    stage1, _ = training.train_stage1(items, tc)
    stage2, _ = training.train_stage2(items, stage1, tc)
    ckpt_path = root / "model.ckpt"
    stage2.save(ckpt_path)
    return {"root": root, "manifest": manifest, "ckpt": ckpt_path}


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_analyze_outputs_control_json(tmp_path):
    wav = tmp_path / "step.wav"
    rng = np.random.default_rng(0)
    wav.write_bytes(pcm16_wav_bytes(rng.uniform(-0.5, 0.5, 16000), 16000))
    out = tmp_path / "gamma.json"
    assert run("analyze", "--in", wav, "--out", out) == 0
    curve = ControlSignal.from_json(out.read_text())
    assert curve.num_frames == 250
    assert curve.control_rate == 250


def test_grf_curve_json(tmp_path):
    out = tmp_path / "curve.json"
    assert run("grf", "--period", 0.5, "--duration", 2, "--seed", 7,
               "--out", out) == 0
    curve = ControlSignal.from_json(out.read_text())
    assert curve.num_frames == 500
    assert curve.values[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_synth_pa_deterministic(tmp_path):
    a, b = tmp_path / "a.wav", tmp_path / "b.wav"
    for out in (a, b):
        assert run("synth-pa", "--surface", "gravel", "--duration", 1,
                   "--seed", 3, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    clip = ss.read_wav(a)
    assert len(clip) == 16000


def test_synth_pa_unknown_surface(tmp_path):
    code = run("synth-pa", "--surface", "lava", "--out", tmp_path / "x.wav")
    assert code == 1


def test_unknown_subcommand_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("transmogrify")
    assert exc.value.code == 2


def test_train_subcommands(tmp_path, work):
    ck1 = tmp_path / "s1.ckpt"
    trace1 = tmp_path / "s1.csv"
    assert run("train-stage1", "--manifest", work["manifest"], "--out", ck1,
               "--trace", trace1, "--steps", 3, "--batch", 2) == 0
    assert ck1.exists()
    assert trace1.read_text().startswith("step,loss")

    ck2 = tmp_path / "s2.ckpt"
    assert run("train-stage2", "--manifest", work["manifest"], "--stage1", ck1,
               "--out", ck2, "--steps", 3, "--batch", 2) == 0
    loaded = models.ModelCheckpoint.load(ck2)
    assert loaded.has_control_encoder


def test_synth_deterministic(tmp_path, work):
    outs = []
    for name in ("m1.wav", "m2.wav"):
        out = tmp_path / name
        assert run("synth", "--checkpoint", work["ckpt"], "--surface", "thud",
                   "--duration", 1, "--seed", 5, "--u-seed", 6,
                   "--out", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_synth_with_gamma_file(tmp_path, work):
    curve = tmp_path / "c.json"
    assert run("grf", "--duration", 1, "--out", curve) == 0
    out = tmp_path / "g.wav"
    assert run("synth", "--checkpoint", work["ckpt"], "--surface", "grit",
               "--gamma", curve, "--out", out) == 0
    assert len(ss.read_wav(out)) == 16000


def test_eval_self_distance(tmp_path, work):
    out_json = tmp_path / "report.json"
    code = run("eval", "--set-a", work["root"] / "corpus",
               "--set-b", work["root"] / "corpus",
               "--name-a", "real", "--name-b", "same",
               "--out-json", out_json, "--out-csv", tmp_path / "report.csv")
    assert code == 0
    report = json.loads(out_json.read_text())
    assert report["pairs"][0]["fad"] == pytest.approx(0.0, abs=1e-6)


def test_config_file_roundtrip(tmp_path):
    cfg = ss.EngineConfig(n_z=32)
    path = tmp_path / "engine.cfg"
    cfg.save(path)
    loaded = ss.EngineConfig.load(path)
    assert loaded == cfg
    assert loaded.config_hash() == cfg.config_hash()
