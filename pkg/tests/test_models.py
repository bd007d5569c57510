import numpy as np
import pytest

import stepsynth as ss
from stepsynth import dsp, farnell, models
from stepsynth.errors import (ContractViolation, StageError, VocabularyError)
from stepsynth.synth import NoiseSpec


@pytest.fixture(scope="module")
def paper_scale_ckpt():
    """Untrained checkpoint at the full published dimensions."""
    cfg = ss.EngineConfig()  # n_z = 512
    ckpt = models.init_stage1(cfg, ["wood", "dirt"], seed=0)
    models.add_control_encoder(ckpt, seed=1)
    return ckpt


@pytest.fixture(scope="module")
def one_second_clip():
    rng = np.random.default_rng(0)
    return ss.AudioClip(samples=rng.uniform(-0.8, 0.8, 16000), sample_rate=16000)


def test_encode_audio_shape_and_range(paper_scale_ckpt, one_second_clip):
    z = models.encode_audio(one_second_clip, paper_scale_ckpt)
    assert z.z.shape == (250, 512)
    assert np.max(np.abs(z.z)) < 1.0


def test_encode_audio_deterministic(paper_scale_ckpt, one_second_clip):
    z1 = models.encode_audio(one_second_clip, paper_scale_ckpt)
    z2 = models.encode_audio(one_second_clip, paper_scale_ckpt)
    assert np.array_equal(z1.z, z2.z)


def test_encode_audio_rejects_wrong_rate(paper_scale_ckpt):
    clip = ss.AudioClip(samples=np.zeros(8000), sample_rate=8000)
    with pytest.raises(ContractViolation):
        models.encode_audio(clip, paper_scale_ckpt)


def test_decode_shape_and_determinism(paper_scale_ckpt):
    rng = np.random.default_rng(1)
    latent = models.LatentSequence(z=np.tanh(rng.normal(size=(250, 512))))
    a = models.decode(latent, NoiseSpec(5), paper_scale_ckpt)
    b = models.decode(latent, NoiseSpec(5), paper_scale_ckpt)
    assert len(a) == 16000
    assert a.sample_rate == 16000
    assert np.array_equal(a.samples, b.samples)


def test_encode_control_shape_and_range(paper_scale_ckpt):
    gamma = farnell.grf_curve(farnell.GRFParams(), 1.0, 250)
    u = models.make_u_noise(250, 1, seed=2)
    ctl = models.ControlTuple(label=models.SurfaceLabel(0), gamma=gamma, noise=u)
    z = models.encode_control(ctl, paper_scale_ckpt)
    assert z.z.shape == (250, 512)
    assert np.max(np.abs(z.z)) < 1.0


def test_encode_control_zero_embedding_masks_input(paper_scale_ckpt):
    ckpt = paper_scale_ckpt
    original = ckpt.params["psi.embed.w"].data.copy()
    try:
        ckpt.params["psi.embed.w"].data[0, :] = 0.0
        u = models.make_u_noise(100, 1, seed=3)
        z_out = []
        for scale in (0.2, 1.0, 3.0):
            gamma = dsp.ControlSignal(values=np.full(100, scale), control_rate=250)
            ctl = models.ControlTuple(label=models.SurfaceLabel(0), gamma=gamma,
                                      noise=u)
            z_out.append(models.encode_control(ctl, ckpt).z)
        assert np.array_equal(z_out[0], z_out[1])
        assert np.array_equal(z_out[1], z_out[2])
    finally:
        ckpt.params["psi.embed.w"].data[:] = original


def test_encode_control_unknown_label(paper_scale_ckpt):
    gamma = farnell.grf_curve(farnell.GRFParams(), 0.4, 250)
    u = models.make_u_noise(gamma.num_frames, 1, seed=4)
    ctl = models.ControlTuple(label=models.SurfaceLabel(7), gamma=gamma, noise=u)
    with pytest.raises(VocabularyError):
        models.encode_control(ctl, paper_scale_ckpt)


def test_synthesize_duration_contract(paper_scale_ckpt):
    gamma = farnell.grf_curve(farnell.GRFParams(), 2.0, 250)
    u = models.make_u_noise(gamma.num_frames, 1, seed=5)
    clip = models.synthesize(models.SurfaceLabel(1), gamma, u, 6, paper_scale_ckpt)
    assert len(clip) == 32000


@pytest.mark.parametrize("seconds", [0.4, 1.0, 1.7])
def test_shape_contract_general(paper_scale_ckpt, seconds):
    k = round(250 * seconds)
    gamma = farnell.grf_curve(farnell.GRFParams(), seconds, 250)
    assert gamma.num_frames == k
    u = models.make_u_noise(k, 1, seed=8)
    clip = models.synthesize(models.SurfaceLabel(0), gamma, u, 9, paper_scale_ckpt)
    assert len(clip) == 64 * k


def test_synthesize_requires_control_encoder(one_second_clip):
    cfg = ss.desk_config()
    ckpt = models.init_stage1(cfg, ["a"], seed=0)  # no psi weights
    gamma = farnell.grf_curve(farnell.GRFParams(), 1.0, 250)
    u = models.make_u_noise(250, 1, seed=1)
    with pytest.raises(StageError):
        models.synthesize(models.SurfaceLabel(0), gamma, u, 2, ckpt)


def test_checkpoint_roundtrip_bit_identical(tmp_path, one_second_clip):
    cfg = ss.desk_config()
    ckpt = models.init_stage1(cfg, ["a", "b"], seed=3)
    models.add_control_encoder(ckpt, seed=4)
    ckpt.mfcc_mean = np.linspace(-1, 1, cfg.n_mfcc)
    ckpt.mfcc_std = np.linspace(1, 2, cfg.n_mfcc)
    path = tmp_path / "m.ckpt"
    ckpt.save(path)
    back = models.ModelCheckpoint.load(path)

    assert back.vocab == ["a", "b"]
    assert np.array_equal(back.mfcc_mean, ckpt.mfcc_mean)
    for name in ckpt.params:
        assert np.array_equal(back.params[name].data, ckpt.params[name].data)

    z1 = models.encode_audio(one_second_clip, ckpt)
    z2 = models.encode_audio(one_second_clip, back)
    assert np.array_equal(z1.z, z2.z)
    a1 = models.decode(z1, NoiseSpec(7), ckpt)
    a2 = models.decode(z2, NoiseSpec(7), back)
    assert np.array_equal(a1.samples, a2.samples)


def test_checkpoint_rejects_garbage(tmp_path):
    from stepsynth.errors import FormatError
    path = tmp_path / "x.ckpt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(FormatError):
        models.ModelCheckpoint.load(path)


def test_latent_sequence_validation():
    with pytest.raises(ContractViolation):
        models.LatentSequence(z=np.ones((10, 4)))  # |z| == 1 not allowed
    with pytest.raises(ContractViolation):
        models.LatentSequence(z=np.full((10, 4), np.nan))
    ok = models.LatentSequence(z=np.full((10, 4), 0.5))
    assert ok.num_frames == 10


def test_control_tuple_validation():
    gamma = dsp.ControlSignal(values=np.zeros(100), control_rate=250)
    short = dsp.ControlSignal(values=np.zeros(50), control_rate=250)
    with pytest.raises(ContractViolation):
        models.ControlTuple(label=models.SurfaceLabel(0), gamma=gamma, noise=short)


# -- desk-trained model properties (session fixture, trained once) -------------

def test_trained_reconstruction_beats_untrained(desk_model, desk_items):
    from stepsynth.synth import multiscale_spectral_loss
    stage1, _, _ = desk_model
    fresh = models.init_stage1(stage1.config, stage1.vocab, seed=3)
    fresh.mfcc_mean = stage1.mfcc_mean
    fresh.mfcc_std = stage1.mfcc_std

    def recon_loss(ckpt, clip):
        z = models.encode_audio(clip, ckpt)
        out = models.decode(z, NoiseSpec(123), ckpt)
        return multiscale_spectral_loss(out.samples, clip.samples).item()

    clip = desk_items[0].clip
    assert recon_loss(stage1, clip) < recon_loss(fresh, clip)


def test_label_sensitivity_after_stage2(desk_model):
    _, ckpt, _ = desk_model
    gamma = farnell.grf_curve(farnell.GRFParams(), 1.0, 250)
    u = models.make_u_noise(250, 1, seed=17)
    zs = []
    for label_id in range(len(ckpt.vocab)):
        ctl = models.ControlTuple(label=models.SurfaceLabel(label_id),
                                  gamma=gamma, noise=u)
        zs.append(models.encode_control(ctl, ckpt).z)
    msd = np.mean((zs[0] - zs[1]) ** 2)
    assert msd > 1e-4


def test_zero_gamma_is_much_quieter_than_mean_gamma(desk_model, desk_items):
    _, ckpt, _ = desk_model

    def rms_for(level):
        gamma = dsp.ControlSignal(values=np.full(250, level), control_rate=250)
        u = models.make_u_noise(250, 1, seed=3)
        clip = models.synthesize(models.SurfaceLabel(0), gamma, u, 5, ckpt)
        return float(np.sqrt(np.mean(clip.samples.astype(np.float64) ** 2)))

    mean_gamma = float(np.mean([i.gamma_hat.values.mean() for i in desk_items]))
    assert rms_for(0.0) < 0.10 * rms_for(mean_gamma)


def test_training_proxy_round_trip(desk_model, desk_items):
    """Driving the model with a training clip's own proxy reproduces it."""
    _, ckpt, _ = desk_model
    corrs = []
    for j in (0, 1, 2, 3):
        item = desk_items[j]
        u = models.make_u_noise(item.gamma_hat.num_frames, 1, seed=900 + j)
        clip = models.synthesize(models.SurfaceLabel(item.label_id),
                                 item.gamma_hat, u, 901 + j, ckpt)
        proxy = dsp.control_proxy(clip)
        corrs.append(float(np.corrcoef(item.gamma_hat.values[:, 0],
                                       proxy.values[:, 0])[0, 1]))
    assert np.mean(corrs) >= 0.8
