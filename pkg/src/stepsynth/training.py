"""Dataset assembly into (clip, label, control proxy, noise) items and the
two training stages.

Stage 1 jointly trains the audio encoder and decoder on the multi-scale
spectral reconstruction loss over random one-second excerpts.  Stage 2
freezes them and fits the control encoder to the encoder's latents with a
mean-squared loss.  Runs are seed-deterministic: identical inputs give a
byte-identical loss trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import dsp, models
from .audio_io import AudioClip, DatasetManifest, peak_normalize, read_wav, resample
from .config import EngineConfig
from .errors import ConfigurationError, ContractViolation, ManifestError, NumericalError
from .synth import NoiseSpec, filtered_noise, multiscale_spectral_loss

log = logging.getLogger("stepsynth.training")


@dataclass
class TrainingItem:
    """One 4-tuple: audio, label, control proxy, and assigned noise."""

    clip: AudioClip
    label_id: int
    label_name: str
    gamma_hat: dsp.ControlSignal
    u: dsp.ControlSignal


@dataclass
class TrainConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 8
    steps: int = 2000
    excerpt_seconds: float = 1.0
    seed: int = 0
    mag_weight: float = 1.0
    log_weight: float = 1.0
    # per-excerpt gain range, applied jointly to audio and control proxy so
    # the force-to-loudness mapping is seen across the whole control range
    # (full-scale requests normalize to ~1.8x the corpus proxy peak, so the
    # upper gain must push the trained support past that)
    gain_min: float = 0.25
    gain_max: float = 3.0
    log_every: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.steps < 0:
            raise ConfigurationError("learning rate/batch/steps must be positive")
        if self.excerpt_seconds <= 0:
            raise ConfigurationError("excerpt_seconds must be positive")
        if not 0 < self.gain_min <= self.gain_max:
            raise ConfigurationError("need 0 < gain_min <= gain_max")
        k = self.excerpt_seconds * self.engine.control_rate
        if abs(k - round(k)) > 1e-9:
            raise ConfigurationError("excerpt length must be whole control frames")

    @property
    def excerpt_frames(self) -> int:
        return int(round(self.excerpt_seconds * self.engine.control_rate))


def build_dataset(manifest: DatasetManifest, config: EngineConfig,
                  seed: int = 0) -> list:
    """Load, resample, peak-normalize, and proxy every manifest entry.

    Each item's conditioning noise u is drawn once from a stream keyed by
    seed XOR item-index, so rebuilding with the same seed is bit-identical.
    Unreadable files are skipped with a warning; an empty result is an error.
    """
    if len(manifest) == 0:
        raise ManifestError("manifest has no entries")
    items = []
    for index, (path, label) in enumerate(manifest.entries):
        try:
            clip = read_wav(path)
        except Exception as exc:  # noqa: BLE001 - skip-and-warn contract
            log.warning("skipping %s: %s", path, exc)
            continue
        clip = resample(clip, config.sample_rate)
        clip = peak_normalize(clip)
        gamma_hat = dsp.control_proxy(
            clip, smooth_iterations=config.smooth_iterations,
            lam=config.smooth_lambda, control_rate=config.control_rate)
        u = models.make_u_noise(gamma_hat.num_frames, config.n_gamma,
                                seed ^ index, config.control_rate)
        items.append(TrainingItem(
            clip=clip, label_id=manifest.label_id(label), label_name=label,
            gamma_hat=gamma_hat, u=u))
    if not items:
        raise ManifestError("all manifest entries failed to load")
    return items


def items_from_clips(labeled_clips, config: EngineConfig, seed: int = 0) -> list:
    """build_dataset for in-memory (clip, label) pairs (no file round trip)."""
    vocab = []
    for _, label in labeled_clips:
        if label not in vocab:
            vocab.append(label)
    items = []
    for index, (clip, label) in enumerate(labeled_clips):
        clip = resample(clip, config.sample_rate)
        clip = peak_normalize(clip)
        gamma_hat = dsp.control_proxy(
            clip, smooth_iterations=config.smooth_iterations,
            lam=config.smooth_lambda, control_rate=config.control_rate)
        u = models.make_u_noise(gamma_hat.num_frames, config.n_gamma,
                                seed ^ index, config.control_rate)
        items.append(TrainingItem(
            clip=clip, label_id=vocab.index(label), label_name=label,
            gamma_hat=gamma_hat, u=u))
    return items


def _vocab_from_items(items) -> list:
    vocab = []
    for item in items:
        if item.label_name not in vocab:
            vocab.append(item.label_name)
    return vocab


def _raw_mfcc(item: TrainingItem, config: EngineConfig) -> np.ndarray:
    return dsp.mfcc(item.clip, fft_size=config.mfcc_fft, hop=config.hop,
                    n_mels=config.n_mels, n_coeffs=config.n_mfcc,
                    fmin=config.mel_fmin, fmax=config.mel_fmax)


def _mel_power(item: TrainingItem, config: EngineConfig) -> np.ndarray:
    """Mel-band power frames; |FFT(g x)|^2 = g^2 |FFT(x)|^2, so excerpt
    gains turn into a multiply here and MFCCs of scaled audio stay exact."""
    frames = dsp.frame_signal_centered(item.clip.samples, config.mfcc_fft,
                                       config.hop)
    win = dsp.make_window("hann", config.mfcc_fft)
    power = np.abs(np.fft.rfft(frames * win, axis=-1)) ** 2
    bank = dsp.mel_filterbank(config.mfcc_fft, config.sample_rate,
                              config.n_mels, config.mel_fmin, config.mel_fmax)
    return power @ bank.T


def _gained_feats(mel_crop: np.ndarray, gain: float, ckpt, config) -> np.ndarray:
    """Normalized MFCC frames of a gain-scaled excerpt from cached mel power."""
    logmel = np.log(np.maximum(mel_crop * (gain * gain), 1e-5))
    feats = logmel @ dsp.dct_matrix(config.n_mfcc, config.n_mels).T
    return (feats - ckpt.mfcc_mean) / ckpt.mfcc_std


def _crop_bounds(item_frames: int, want: int, rng) -> int:
    if item_frames < want:
        raise ContractViolation("clip shorter than the training excerpt")
    if item_frames == want:
        return 0
    return int(rng.integers(0, item_frames - want + 1))


def write_loss_csv(path, trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for step, value in trace:
            fh.write(f"{step},{value!r}\n")


def train_stage1(items, config: TrainConfig):
    """Train encoder+decoder; returns (checkpoint, loss trace).

    MFCC normalization statistics are frozen into the checkpoint before
    the first step.  A non-finite loss aborts with the step number.
    """
    if not items:
        raise ContractViolation("need at least one training item")
    engine = config.engine
    vocab = _vocab_from_items(items)
    ckpt = models.init_stage1(engine, vocab, config.seed)

    feats = [_raw_mfcc(item, engine) for item in items]
    stacked = np.concatenate(feats, axis=0)
    ckpt.mfcc_mean = stacked.mean(axis=0)
    ckpt.mfcc_std = np.maximum(stacked.std(axis=0), 1e-6)

    # control normalization scale: the corpus proxy maximum, so requested
    # curves in [0, max] land inside the trained control distribution
    gammas = np.concatenate([item.gamma_hat.values for item in items], axis=0)
    ckpt.gamma_mean = gammas.mean(axis=0)
    ckpt.gamma_std = np.maximum(gammas.max(axis=0), 1e-6)

    mels = [_mel_power(item, engine) for item in items]

    ckpt.set_trainable(["theta.", "phi."])
    trainable = {k: v for k, v in ckpt.params.items() if v.requires_grad}
    state = ad.AdamState(lr=config.learning_rate, beta1=config.beta1,
                         beta2=config.beta2, eps=config.adam_eps)
    rng = np.random.Generator(np.random.Philox(config.seed))
    k_ex = config.excerpt_frames
    hop = engine.hop
    trace = []
    log.info("stage1: %d items, %d steps, seed %d", len(items), config.steps,
             config.seed)
    for step in range(config.steps):
        idxs = rng.integers(0, len(items), size=config.batch_size)
        feat_batch = np.empty((k_ex, config.batch_size, engine.n_mfcc),
                              dtype=np.float32)
        target = np.empty((config.batch_size, k_ex * hop), dtype=np.float32)
        for col, item_idx in enumerate(idxs):
            item = items[item_idx]
            start = _crop_bounds(item.gamma_hat.num_frames, k_ex, rng)
            gain = rng.uniform(config.gain_min, config.gain_max)
            feat_batch[:, col, :] = _gained_feats(
                mels[item_idx][start : start + k_ex], gain, ckpt, engine)
            target[col] = gain * item.clip.samples[start * hop : (start + k_ex) * hop]
        synth_seed = int(rng.integers(0, 2**62))

        for p in trainable.values():
            p.zero_grad()
        with ad.Tape() as tape:
            z = models.encoder_forward(ad.tensor(feat_batch), ckpt.params)
            mags = models.decoder_forward(z, ckpt.params)
            mags_bt = ad.transpose(mags, (1, 0, 2))
            audio = filtered_noise(mags_bt, NoiseSpec(synth_seed), hop,
                                   engine.ir_length)
            loss = multiscale_spectral_loss(audio, target,
                                            mag_weight=config.mag_weight,
                                            log_weight=config.log_weight)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError(f"non-finite stage-1 loss at step {step}")
        ad.backward(tape, loss)
        ad.adam_step(trainable, {k: p.grad for k, p in trainable.items()}, state)
        trace.append((step, value))
        if config.log_every and step % config.log_every == 0:
            log.info("stage1 step %d loss %.4f", step, value)
    return ckpt, trace


def train_stage2(items, stage1: models.ModelCheckpoint, config: TrainConfig):
    """Fit the control encoder to frozen-encoder latents; (checkpoint, trace).

    Stage-1 weights are never written to: they are frozen out of the
    optimizer and verified bit-identical by the caller's tests.
    """
    if not items:
        raise ContractViolation("need at least one training item")
    engine = config.engine
    vocab = _vocab_from_items(items)
    if any(v not in stage1.vocab for v in vocab):
        raise ConfigurationError("item labels missing from stage-1 vocabulary")

    ckpt = models.ModelCheckpoint(
        config=stage1.config,
        vocab=list(stage1.vocab),
        params={k: ad.Tensor(v.data.copy()) for k, v in stage1.params.items()},
        mfcc_mean=stage1.mfcc_mean.copy(),
        mfcc_std=stage1.mfcc_std.copy(),
        gamma_mean=stage1.gamma_mean.copy(),
        gamma_std=stage1.gamma_std.copy(),
    )
    models.add_control_encoder(ckpt, config.seed + 1)
    ckpt.set_trainable(["psi."])
    trainable = {k: v for k, v in ckpt.params.items() if v.requires_grad}

    mels = [_mel_power(item, engine) for item in items]
    gamma_normed = [
        (item.gamma_hat.values / ckpt.gamma_std).astype(np.float32)
        for item in items
    ]

    state = ad.AdamState(lr=config.learning_rate, beta1=config.beta1,
                         beta2=config.beta2, eps=config.adam_eps)
    rng = np.random.Generator(np.random.Philox(config.seed + 1))
    k_ex = config.excerpt_frames
    trace = []
    log.info("stage2: %d items, %d steps, seed %d", len(items), config.steps,
             config.seed)
    for step in range(config.steps):
        idxs = rng.integers(0, len(items), size=config.batch_size)
        g_batch = np.empty((k_ex, config.batch_size, engine.n_gamma), np.float32)
        u_batch = np.empty_like(g_batch)
        feat_batch = np.empty((k_ex, config.batch_size, engine.n_mfcc),
                              np.float32)
        labels = np.empty(config.batch_size, dtype=np.intp)
        for col, item_idx in enumerate(idxs):
            item = items[item_idx]
            start = _crop_bounds(item.gamma_hat.num_frames, k_ex, rng)
            gain = rng.uniform(config.gain_min, config.gain_max)
            g_batch[:, col, :] = gain * gamma_normed[item_idx][start : start + k_ex]
            u_batch[:, col, :] = item.u.values[start : start + k_ex]
            feat_batch[:, col, :] = _gained_feats(
                mels[item_idx][start : start + k_ex], gain, ckpt, engine)
            labels[col] = item.label_id
        # latent targets from the frozen encoder on the same gained excerpts
        z_batch = models.encoder_forward(ad.tensor(feat_batch), ckpt.params).data

        for p in trainable.values():
            p.zero_grad()
        with ad.Tape() as tape:
            z_hat = models.control_forward(g_batch, u_batch, labels, ckpt.params)
            diff = ad.sub(z_hat, z_batch)
            loss = ad.mean(ad.mul(diff, diff))
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError(f"non-finite stage-2 loss at step {step}")
        ad.backward(tape, loss)
        ad.adam_step(trainable, {k: p.grad for k, p in trainable.items()}, state)
        trace.append((step, value))
        if config.log_every and step % config.log_every == 0:
            log.info("stage2 step %d loss %.5f", step, value)
    return ckpt, trace
