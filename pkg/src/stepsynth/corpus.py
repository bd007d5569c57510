"""Synthetic footstep-like corpus for desk-scale runs.

Each clip is a walk cycle: per step, a randomized bimodal force shape
(heel/roll/ball) modulates band-limited noise, with a short impact
transient at the onset and occasionally a plain decaying scuff burst.
Two built-in "surfaces" occupy clearly separated bands so label
conditioning is learnable from a small corpus.  Everything is
Philox-seeded and platform-stable.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.signal

from .audio_io import AudioClip, peak_normalize, write_wav
from .farnell import GRFParams, _one_period

SURFACE_BANDS = {
    "thud": (150.0, 2400.0),
    "grit": (1500.0, 6500.0),
}


def _band_noise(rng, n: int, band, sample_rate: int) -> np.ndarray:
    taps = scipy.signal.firwin(129, list(band), pass_zero=False, fs=sample_rate)
    return scipy.signal.fftconvolve(rng.uniform(-1.0, 1.0, size=n), taps,
                                    mode="same")


def _step_envelope(rng, n: int) -> np.ndarray:
    """One step's force shape: randomized heel/roll/ball arcs over n samples."""
    f1 = rng.uniform(0.2, 0.4)
    f2 = rng.uniform(0.25, 0.45)
    params = GRFParams(
        step_period=1.0,
        segment_fractions=(f1, f2, 1.0 - f1 - f2),
        levels=(0.0, 1.0, float(rng.uniform(0.35, 0.75)),
                float(rng.uniform(0.65, 1.0)), 0.0),
    )
    phase = np.arange(n, dtype=np.float64) / n
    return _one_period(phase, params)


def _impact(rng, n: int, sample_rate: int = 16000) -> np.ndarray:
    """Sharp attack / exponential decay transient envelope."""
    attack = min(max(2, int(rng.uniform(0.002, 0.006) * sample_rate)), n)
    tau = rng.uniform(0.02, 0.06) * sample_rate
    t = np.arange(n, dtype=np.float64)
    env = np.exp(-np.maximum(t - attack, 0.0) / tau)
    env[:attack] *= np.linspace(0.0, 1.0, attack, endpoint=False)
    return env


def make_burst_clip(label: str, duration: float = 1.0, seed: int = 0,
                    sample_rate: int = 16000) -> AudioClip:
    """One walk-cycle clip at a jittered cadence with varying step loudness."""
    rng = np.random.Generator(np.random.Philox(seed))
    band = SURFACE_BANDS[label]
    n = int(round(duration * sample_rate))
    out = np.zeros(n, dtype=np.float64)
    period = rng.uniform(0.28, 0.65)
    onset = rng.uniform(0.0, 0.08)
    while onset < duration - 0.05:
        start = int(onset * sample_rate)
        contact = rng.uniform(0.55, 0.85) * period
        length = min(int(contact * sample_rate), n - start)
        if length < 32:
            break
        amp = rng.uniform(0.35, 1.0)
        noise = _band_noise(rng, length, band, sample_rate)
        if rng.uniform() < 0.75:
            env = _step_envelope(rng, length)
            # impact click on the heel strike
            click_len = min(length, int(0.03 * sample_rate))
            env[:click_len] += 0.8 * _impact(rng, click_len)
        else:
            env = _impact(rng, length)  # plain scuff burst
        out[start : start + length] += amp * noise * env
        onset += period * (1.0 + 0.15 * rng.uniform(-1.0, 1.0))
    return peak_normalize(AudioClip(samples=out.astype(np.float32),
                                    sample_rate=sample_rate))


def make_burst_corpus(n_clips: int = 64, duration: float = 1.0, seed: int = 0,
                      labels=("thud", "grit"), sample_rate: int = 16000) -> list:
    """(clip, label) pairs, labels round-robin, one derived seed per clip."""
    out = []
    for i in range(n_clips):
        label = labels[i % len(labels)]
        clip = make_burst_clip(label, duration=duration, seed=seed * 100003 + i,
                               sample_rate=sample_rate)
        out.append((clip, label))
    return out


def write_corpus(directory, labeled_clips) -> Path:
    """Write clips as WAVs plus a JSON-lines manifest; returns manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest_path = directory / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for i, (clip, label) in enumerate(labeled_clips):
            name = f"{label}_{i:04d}.wav"
            write_wav(directory / name, clip)
            fh.write(json.dumps({"path": name, "label": label}) + "\n")
    return manifest_path
