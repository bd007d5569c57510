"""The three networks and checkpoint handling.

Audio encoder: normalized MFCC frames -> GRU -> linear -> tanh latent.
Decoder: latent -> GRU -> linear -> scaled softplus filter magnitudes ->
filtered-noise synthesis.  Control encoder: (label embedding) *
(normalized temporal control, noise) -> GRU -> linear -> tanh latent.

Checkpoints are a JSON header plus packed little-endian float32 tensors in
one file; loading is bit-identical with saving.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import dsp
from .audio_io import AudioClip
from .config import EngineConfig
from .errors import (ContractViolation, FormatError, StageError,
                     VocabularyError)
from .synth import NoiseSpec, filtered_noise

CHECKPOINT_MAGIC = b"SSCK"
CHECKPOINT_VERSION = 1

# open-interval cap for tanh outputs that saturate in float32
LATENT_CAP = float(np.nextafter(np.float32(1.0), np.float32(0.0)))

DECODER_MAG_SCALE = 2.0


@dataclass
class LatentSequence:
    """K x n_z latent control frames, entries strictly inside (-1, 1)."""

    z: np.ndarray
    control_rate: int = 250

    def __post_init__(self):
        z = np.asarray(self.z)
        if z.ndim != 2:
            raise ContractViolation("latent must be (K, n_z)")
        if not np.all(np.isfinite(z)):
            raise ContractViolation("latent must be finite")
        if np.any(np.abs(z) >= 1.0):
            raise ContractViolation("latent entries must lie strictly in (-1, 1)")
        self.z = z

    @property
    def num_frames(self) -> int:
        return self.z.shape[0]


@dataclass
class SurfaceLabel:
    id: int


@dataclass
class ControlTuple:
    """(label, temporal control, per-frame noise) at one control rate."""

    label: SurfaceLabel
    gamma: dsp.ControlSignal
    noise: dsp.ControlSignal

    def __post_init__(self):
        if self.gamma.num_frames != self.noise.num_frames:
            raise ContractViolation("gamma and noise must share K")
        if self.gamma.control_rate != self.noise.control_rate:
            raise ContractViolation("gamma and noise must share the control rate")
        if self.gamma.dims != self.noise.dims:
            raise ContractViolation("gamma and noise must share dims")


@dataclass
class ModelCheckpoint:
    config: EngineConfig
    vocab: list
    params: dict = field(default_factory=dict)
    mfcc_mean: np.ndarray | None = None
    mfcc_std: np.ndarray | None = None
    gamma_mean: np.ndarray | None = None
    gamma_std: np.ndarray | None = None
    version: int = CHECKPOINT_VERSION

    def __post_init__(self):
        n = self.config.n_mfcc
        if self.mfcc_mean is None:
            self.mfcc_mean = np.zeros(n, dtype=np.float64)
        if self.mfcc_std is None:
            self.mfcc_std = np.ones(n, dtype=np.float64)
        if self.gamma_mean is None:
            self.gamma_mean = np.zeros(self.config.n_gamma, dtype=np.float64)
        if self.gamma_std is None:
            self.gamma_std = np.ones(self.config.n_gamma, dtype=np.float64)
        if np.any(np.asarray(self.mfcc_std) <= 0) or np.any(np.asarray(self.gamma_std) <= 0):
            raise ContractViolation("normalization stds must be positive")

    @property
    def has_control_encoder(self) -> bool:
        return any(name.startswith("psi.") for name in self.params)

    def group(self, prefix: str) -> dict:
        return {k: v for k, v in self.params.items() if k.startswith(prefix)}

    def set_trainable(self, prefixes) -> None:
        for name, t in self.params.items():
            t.requires_grad = any(name.startswith(p) for p in prefixes)

    # -- serialization ------------------------------------------------------

    def save(self, path) -> None:
        names = sorted(self.params)
        tensors = {}
        offset = 0
        blobs = []
        for name in names:
            arr = np.ascontiguousarray(self.params[name].data, dtype="<f4")
            tensors[name] = {"shape": list(arr.shape), "offset": offset}
            blob = arr.tobytes()
            blobs.append(blob)
            offset += len(blob)
        header = {
            "version": self.version,
            "config": self.config.to_dict(),
            "vocab": list(self.vocab),
            "mfcc_mean": [float(v) for v in self.mfcc_mean],
            "mfcc_std": [float(v) for v in self.mfcc_std],
            "gamma_mean": [float(v) for v in self.gamma_mean],
            "gamma_std": [float(v) for v in self.gamma_std],
            "tensors": tensors,
        }
        head = json.dumps(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(head)))
            fh.write(head)
            for blob in blobs:
                fh.write(blob)

    @classmethod
    def load(cls, path) -> "ModelCheckpoint":
        data = Path(path).read_bytes()
        if data[:4] != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: not a stepsynth checkpoint")
        (head_len,) = struct.unpack_from("<I", data, 4)
        header = json.loads(data[8 : 8 + head_len].decode("utf-8"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version")
        payload = data[8 + head_len :]
        params = {}
        for name, meta in header["tensors"].items():
            shape = tuple(meta["shape"])
            count = int(np.prod(shape)) if shape else 1
            start = meta["offset"]
            arr = np.frombuffer(payload, dtype="<f4", count=count,
                                offset=start).reshape(shape)
            params[name] = ad.Tensor(arr.copy(), requires_grad=False)
        ckpt = cls(
            config=EngineConfig(**header["config"]),
            vocab=list(header["vocab"]),
            params=params,
            mfcc_mean=np.asarray(header["mfcc_mean"], dtype=np.float64),
            mfcc_std=np.asarray(header["mfcc_std"], dtype=np.float64),
            gamma_mean=np.asarray(header["gamma_mean"], dtype=np.float64),
            gamma_std=np.asarray(header["gamma_std"], dtype=np.float64),
            version=header["version"],
        )
        ckpt._check_shapes()
        return ckpt

    def _check_shapes(self) -> None:
        cfg = self.config
        checks = {
            "theta.gru.w_z": (cfg.n_mfcc, cfg.n_z),
            "theta.out.w": (cfg.n_z, cfg.n_z),
            "phi.gru.w_z": (cfg.n_z, cfg.n_z),
            "phi.out.w": (cfg.n_z, cfg.n_bands),
        }
        if self.has_control_encoder:
            checks["psi.embed.w"] = (len(self.vocab), 2 * cfg.n_gamma)
            checks["psi.out.w"] = (cfg.n_z, cfg.n_z)
        for name, shape in checks.items():
            if name in self.params and tuple(self.params[name].shape) != shape:
                raise FormatError(
                    f"checkpoint tensor {name} has shape "
                    f"{tuple(self.params[name].shape)}, config implies {shape}"
                )


# ---------------------------------------------------------------------------
# parameter construction
# ---------------------------------------------------------------------------

def _add_gru(params: dict, prefix: str, rng, n_in: int, n_hidden: int) -> None:
    gru = ad.init_gru(rng, n_in, n_hidden)
    for name, t in gru.tensors().items():
        params[f"{prefix}.{name}"] = t


def _add_linear(params: dict, prefix: str, rng, n_in: int, n_out: int) -> None:
    params[f"{prefix}.w"] = ad.init_uniform(rng, (n_in, n_out), n_in)
    params[f"{prefix}.b"] = ad.Tensor(np.zeros(n_out, dtype=ad.DEFAULT_DTYPE),
                                      requires_grad=True)


def init_stage1(config: EngineConfig, vocab, seed: int) -> ModelCheckpoint:
    """Fresh checkpoint with audio encoder (theta) and decoder (phi)."""
    rng = np.random.Generator(np.random.Philox(seed))
    params: dict = {}
    _add_gru(params, "theta.gru", rng, config.n_mfcc, config.n_z)
    _add_linear(params, "theta.out", rng, config.n_z, config.n_z)
    _add_gru(params, "phi.gru", rng, config.n_z, config.n_z)
    _add_linear(params, "phi.out", rng, config.n_z, config.n_bands)
    return ModelCheckpoint(config=config, vocab=list(vocab), params=params)


def add_control_encoder(ckpt: ModelCheckpoint, seed: int) -> None:
    """Attach freshly initialized control-encoder (psi) weights."""
    rng = np.random.Generator(np.random.Philox(seed))
    cfg = ckpt.config
    n_in = 2 * cfg.n_gamma
    ckpt.params["psi.embed.w"] = ad.Tensor(
        rng.uniform(-1.0, 1.0, size=(len(ckpt.vocab), n_in)).astype(ad.DEFAULT_DTYPE),
        requires_grad=True,
    )
    _add_gru(ckpt.params, "psi.gru", rng, n_in, cfg.n_z)
    _add_linear(ckpt.params, "psi.out", rng, cfg.n_z, cfg.n_z)


# ---------------------------------------------------------------------------
# forward passes (Tensor in, Tensor out; run with or without a tape)
# ---------------------------------------------------------------------------

def _gru_params(params: dict, prefix: str) -> ad.GRUParams:
    return ad.GRUParams(**{name: params[f"{prefix}.{name}"] for name in
                           ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r",
                            "w_h", "u_h", "b_h")})


def run_gru(x: ad.Tensor, params: dict, prefix: str) -> ad.Tensor:
    """GRU over a (K, B, n_in) sequence from a zero state -> (K, B, H).

    Input-side projections for the whole sequence are hoisted into three
    matmuls; the recurrence runs as one fused sequence op.
    """
    k, b, n_in = x.shape
    p = _gru_params(params, prefix)
    flat = ad.reshape(x, (k * b, n_in))
    xz = ad.add(ad.matmul(flat, p.w_z), p.b_z)
    xr = ad.add(ad.matmul(flat, p.w_r), p.b_r)
    xh = ad.add(ad.matmul(flat, p.w_h), p.b_h)
    return ad.gru_sequence(xz, xr, xh, p, k, b)


def linear(x: ad.Tensor, params: dict, prefix: str) -> ad.Tensor:
    k, b, n_in = x.shape
    flat = ad.reshape(x, (k * b, n_in))
    out = ad.add(ad.matmul(flat, params[f"{prefix}.w"]), params[f"{prefix}.b"])
    return ad.reshape(out, (k, b, params[f"{prefix}.w"].shape[1]))


def encoder_forward(feats: ad.Tensor, params: dict) -> ad.Tensor:
    """Normalized MFCC frames (K, B, n_mfcc) -> latent (K, B, n_z)."""
    return ad.tanh(linear(run_gru(feats, params, "theta.gru"), params, "theta.out"))


def decoder_forward(z: ad.Tensor, params: dict) -> ad.Tensor:
    """Latent (K, B, n_z) -> filter magnitudes (K, B, n_bands), >= 0."""
    raw = linear(run_gru(z, params, "phi.gru"), params, "phi.out")
    return ad.mul(ad.softplus(raw), DECODER_MAG_SCALE)


def control_forward(gamma_n: np.ndarray, u: np.ndarray, label_ids: np.ndarray,
                    params: dict) -> ad.Tensor:
    """Normalized control (K, B, n_g), noise (K, B, n_g), labels (B,) -> latent."""
    v = ad.concat([ad.tensor(gamma_n), ad.tensor(u)], axis=2)
    emb = ad.getitem(params["psi.embed.w"], np.asarray(label_ids, dtype=np.intp))
    gated = ad.mul(v, emb)
    return ad.tanh(linear(run_gru(gated, params, "psi.gru"), params, "psi.out"))


# ---------------------------------------------------------------------------
# public inference operations
# ---------------------------------------------------------------------------

def normalized_mfcc(clip: AudioClip, ckpt: ModelCheckpoint) -> np.ndarray:
    cfg = ckpt.config
    feats = dsp.mfcc(clip, fft_size=cfg.mfcc_fft, hop=cfg.hop,
                     n_mels=cfg.n_mels, n_coeffs=cfg.n_mfcc,
                     fmin=cfg.mel_fmin, fmax=cfg.mel_fmax)
    return (feats - ckpt.mfcc_mean) / ckpt.mfcc_std


def _to_latent(z: np.ndarray, control_rate: int) -> LatentSequence:
    capped = np.clip(z, -LATENT_CAP, LATENT_CAP)
    return LatentSequence(z=capped, control_rate=control_rate)


def encode_audio(clip: AudioClip, ckpt: ModelCheckpoint) -> LatentSequence:
    """Audio -> latent sequence via the trained (or initialized) encoder."""
    if clip.sample_rate != ckpt.config.sample_rate:
        raise ContractViolation(
            f"clip rate {clip.sample_rate} != engine rate {ckpt.config.sample_rate}"
        )
    feats = normalized_mfcc(clip, ckpt)
    z = encoder_forward(ad.tensor(feats[:, None, :].astype(np.float32)),
                        ckpt.params)
    return _to_latent(z.data[:, 0, :], ckpt.config.control_rate)


def decode(latent: LatentSequence, noise: NoiseSpec,
           ckpt: ModelCheckpoint) -> AudioClip:
    """Latent sequence -> audio through the filter decoder, K*hop samples."""
    cfg = ckpt.config
    z = ad.tensor(latent.z[:, None, :].astype(np.float32))
    mags = decoder_forward(z, ckpt.params)
    samples = filtered_noise(ad.reshape(mags, (mags.shape[0], mags.shape[2])),
                             noise, cfg.hop, cfg.ir_length)
    return AudioClip(samples=samples.data.astype(np.float32),
                     sample_rate=cfg.sample_rate)


def encode_control(ctl: ControlTuple, ckpt: ModelCheckpoint) -> LatentSequence:
    """(label, gamma, noise) -> latent sequence via the control encoder."""
    if not ckpt.has_control_encoder:
        raise StageError("checkpoint has no control-encoder weights")
    if not 0 <= ctl.label.id < len(ckpt.vocab):
        raise VocabularyError(f"label id {ctl.label.id} outside vocabulary")
    cfg = ckpt.config
    if ctl.gamma.dims != cfg.n_gamma:
        raise ContractViolation("control dims do not match config")
    # scale-only normalization: keeps zero force anchored at zero input
    gamma_n = ctl.gamma.values / ckpt.gamma_std
    z = control_forward(
        gamma_n[:, None, :].astype(np.float32),
        ctl.noise.values[:, None, :].astype(np.float32),
        np.array([ctl.label.id]),
        ckpt.params,
    )
    return _to_latent(z.data[:, 0, :], ctl.gamma.control_rate)


def make_u_noise(num_frames: int, n_gamma: int, seed: int,
                 control_rate: int = 250) -> dsp.ControlSignal:
    """Per-frame uniform(-1, 1) conditioning noise from a seeded stream."""
    vals = NoiseSpec(seed).uniform_frames((num_frames, n_gamma))
    return dsp.ControlSignal(values=vals, control_rate=control_rate)


def synthesize(label: SurfaceLabel, gamma: dsp.ControlSignal,
               u_noise: dsp.ControlSignal, synth_seed: int,
               ckpt: ModelCheckpoint) -> AudioClip:
    """Full control-to-audio path: control encoder then decoder.

    Deterministic given (label, gamma, u_noise, synth_seed, checkpoint).
    """
    ctl = ControlTuple(label=label, gamma=gamma, noise=u_noise)
    latent = encode_control(ctl, ckpt)
    return decode(latent, NoiseSpec(synth_seed), ckpt)
