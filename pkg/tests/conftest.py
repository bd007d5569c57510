"""Shared fixtures: tiny WAV builders and the session-scoped desk model.

The desk model is trained once per session at the acceptance scale
(64 clips, 2000 steps per stage) and reused by every test that needs
trained weights.
"""

import struct
import time

import numpy as np
import pytest

import stepsynth as ss
from stepsynth import corpus, training


def pcm16_wav_bytes(samples: np.ndarray, rate: int, channels: int = 1) -> bytes:
    """Independent PCM16 writer (never uses the package writer)."""
    ints = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767)
    payload = ints.astype("<i2").tobytes()
    head = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, channels, rate,
                                rate * 2 * channels, 2 * channels, 16)
    return head + fmt + b"data" + struct.pack("<I", len(payload)) + payload


@pytest.fixture
def sine_clip():
    t = np.arange(16000) / 16000.0
    return ss.AudioClip(samples=0.5 * np.cos(2 * np.pi * 1000.0 * t),
                        sample_rate=16000)


@pytest.fixture(scope="session")
def desk_engine():
    return ss.desk_config()


@pytest.fixture(scope="session")
def desk_items(desk_engine):
    clips = corpus.make_burst_corpus(n_clips=64, seed=11)
    return training.items_from_clips(clips, desk_engine, seed=0)


@pytest.fixture(scope="session")
def desk_train_config(desk_engine):
    return training.TrainConfig(engine=desk_engine, steps=2000, batch_size=8,
                                seed=3)


@pytest.fixture(scope="session")
def desk_stage1(desk_items, desk_train_config):
    """(checkpoint, trace, wall_seconds) for the acceptance-scale stage 1."""
    t0 = time.time()
    ckpt, trace = training.train_stage1(desk_items, desk_train_config)
    return ckpt, trace, time.time() - t0


@pytest.fixture(scope="session")
def desk_model(desk_items, desk_stage1, desk_train_config):
    """(stage1_ckpt, stage2_ckpt, stage2 trace) on the desk corpus."""
    stage1, _, _ = desk_stage1
    ckpt, trace = training.train_stage2(desk_items, stage1, desk_train_config)
    return stage1, ckpt, trace
