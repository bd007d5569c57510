"""stepsynth: a controllable procedural-audio engine.

A two-stage learned synthesis model of an environmental sound class
(footsteps as the worked example): a filtered-noise decoder trained as an
audio autoencoder, then a control encoder mapping human-interpretable
controls (surface label, force curve, noise) into the learned latent
space.  Ships with the classical procedural baseline it is measured
against and FAD/MMD distribution metrics.
"""

from .audio_io import (AudioClip, DatasetManifest, load_manifest,
                       peak_normalize, read_wav, resample, wav_bytes,
                       write_wav)
from .config import EngineConfig, default_config, desk_config
from .dsp import (ControlSignal, FrameSpec, control_proxy, hilbert_envelope,
                  laplacian_smooth, mfcc, overlap_add, stft)
from .farnell import GRFParams, SurfaceRecipe, grf_curve, load_recipes, pa_synthesize
from .metrics import (EmbeddingSet, EvalReport, embed_clips, evaluate_sets,
                      fad, matrix_sqrt_psd, mmd2)
from .models import (ControlTuple, LatentSequence, ModelCheckpoint,
                     SurfaceLabel, decode, encode_audio, encode_control,
                     make_u_noise, synthesize)
from .synth import (FilterFrames, NoiseSpec, filtered_noise,
                    fir_from_magnitudes, multiscale_spectral_loss)
from .training import (TrainConfig, TrainingItem, build_dataset,
                       items_from_clips, train_stage1, train_stage2)

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "ControlSignal", "ControlTuple", "DatasetManifest",
    "EmbeddingSet", "EngineConfig", "EvalReport", "FilterFrames",
    "FrameSpec", "GRFParams", "LatentSequence", "ModelCheckpoint",
    "NoiseSpec", "SurfaceLabel", "SurfaceRecipe", "TrainConfig",
    "TrainingItem", "build_dataset", "control_proxy", "decode",
    "default_config", "desk_config", "embed_clips", "encode_audio",
    "encode_control", "evaluate_sets", "fad", "filtered_noise",
    "fir_from_magnitudes", "grf_curve", "hilbert_envelope",
    "items_from_clips", "laplacian_smooth", "load_manifest", "load_recipes",
    "make_u_noise", "matrix_sqrt_psd", "mfcc", "mmd2",
    "multiscale_spectral_loss", "overlap_add", "pa_synthesize",
    "peak_normalize", "read_wav", "resample", "stft", "synthesize",
    "train_stage1", "train_stage2", "wav_bytes", "write_wav",
]
