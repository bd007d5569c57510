"""Classical procedural-audio baseline.

A ground-reaction-force curve generator (three polynomial segments per
step period: heel strike, roll, ball push-off) drives per-surface noise
texture recipes: band-pass filtering, optional resonances, and an optional
crackle nonlinearity for granular surfaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.signal

from .audio_io import AudioClip
from .dsp import ControlSignal
from .errors import ConfigurationError, ContractViolation
from .synth import NoiseSpec

DEFAULT_LEVELS = (0.0, 1.0, 0.6, 0.9, 0.0)
DEFAULT_FRACTIONS = (0.3, 0.4, 0.3)


@dataclass
class GRFParams:
    """Shape of one footstep's force curve and its repetition."""

    step_period: float = 0.5
    segment_fractions: tuple = DEFAULT_FRACTIONS
    levels: tuple = DEFAULT_LEVELS  # start, heel peak, valley, ball peak, end
    jitter: float = 0.0

    def __post_init__(self):
        if self.step_period <= 0:
            raise ContractViolation("step_period must be positive")
        fr = tuple(float(f) for f in self.segment_fractions)
        if len(fr) != 3 or any(f <= 0 for f in fr):
            raise ContractViolation("need 3 positive segment fractions")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ContractViolation("segment fractions must sum to 1")
        lv = tuple(float(v) for v in self.levels)
        if len(lv) != 5 or any(v < 0 for v in lv):
            raise ContractViolation("need 5 non-negative levels")
        if lv[0] != 0.0 or lv[4] != 0.0:
            raise ContractViolation("start and end levels must be 0")
        if not 0.0 <= self.jitter <= 0.2:
            raise ContractViolation("jitter must lie in [0, 0.2]")
        self.segment_fractions = fr
        self.levels = lv


def _segment_values(phase: np.ndarray, y0: float, ym: float, y1: float) -> np.ndarray:
    """Quadratic arcs through (0, y0), (0.5, ym), (1, y1), extremum at 0.5.

    Two half-parabolas with zero slope at the midpoint, so the segment
    interpolates all three levels and never leaves their range.
    """
    first = ym + (y0 - ym) * (1.0 - 2.0 * phase) ** 2
    second = ym + (y1 - ym) * (2.0 * phase - 1.0) ** 2
    return np.where(phase < 0.5, first, second)


def _one_period(phase: np.ndarray, params: GRFParams) -> np.ndarray:
    """GRF level for phase in [0, 1) of one step period."""
    f1, f2, _ = params.segment_fractions
    start, heel, valley, ball, end = params.levels
    b1 = 0.5 * (heel + valley)
    b2 = 0.5 * (valley + ball)
    e1, e2 = f1, f1 + f2
    out = np.empty_like(phase)
    m1 = phase < e1
    m2 = (phase >= e1) & (phase < e2)
    m3 = phase >= e2
    out[m1] = _segment_values(phase[m1] / f1, start, heel, b1)
    out[m2] = _segment_values((phase[m2] - e1) / f2, b1, valley, b2)
    out[m3] = _segment_values((phase[m3] - e2) / (1.0 - e2), b2, ball, end)
    return out


def grf_curve(params: GRFParams, duration: float, control_rate: int = 250,
              seed: int = 0) -> ControlSignal:
    """Sampled repeating GRF curve.

    With zero jitter the curve is exactly periodic in the step period;
    jitter > 0 scales each period's length by (1 + jitter * eta_k) with
    seeded eta_k ~ U[-1, 1].
    """
    if duration <= 0:
        raise ContractViolation("duration must be positive")
    k = int(np.ceil(duration * control_rate))
    t = np.arange(k, dtype=np.float64) / control_rate
    if params.jitter == 0.0:
        phase = (t / params.step_period) % 1.0
        return ControlSignal(values=_one_period(phase, params),
                             control_rate=control_rate)

    rng = np.random.Generator(np.random.Philox(seed))
    starts = [0.0]
    while starts[-1] < duration:
        eta = rng.uniform(-1.0, 1.0)
        starts.append(starts[-1] + params.step_period * (1.0 + params.jitter * eta))
    starts = np.asarray(starts)
    idx = np.searchsorted(starts, t, side="right") - 1
    local = (t - starts[idx]) / (starts[idx + 1] - starts[idx])
    return ControlSignal(values=_one_period(np.clip(local, 0.0, 1.0 - 1e-12), params),
                         control_rate=control_rate)


@dataclass
class SurfaceRecipe:
    """Noise-texture recipe for one surface."""

    name: str
    band_edges: tuple  # (low Hz, high Hz)
    resonances: list = field(default_factory=list)  # (freq, q, gain) triples
    crackle: dict | None = None  # {threshold, exponent, mix}

    def validate(self, sample_rate: int) -> None:
        lo, hi = self.band_edges
        if not 0.0 < lo < hi < sample_rate / 2:
            raise ConfigurationError(
                f"recipe {self.name!r}: band edges must lie inside (0, Nyquist)"
            )


def load_recipes(path=None) -> dict:
    """Surface recipes keyed by name; bundled defaults when path is None."""
    if path is None:
        text = resources.files("stepsynth").joinpath(
            "recipes/default_recipes.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text)
    recipes = {}
    for obj in raw["recipes"]:
        recipes[obj["name"]] = SurfaceRecipe(
            name=obj["name"],
            band_edges=tuple(obj["band_edges"]),
            resonances=[tuple(r) for r in obj.get("resonances", [])],
            crackle=obj.get("crackle"),
        )
    return recipes


def pa_synthesize(recipe: SurfaceRecipe, gamma: ControlSignal,
                  seed: int = 0, sample_rate: int = 16000) -> AudioClip:
    """Classical texture synthesis: noise -> recipe filter -> AM by gamma.

    The control curve is linearly interpolated up to the sample rate and
    multiplies the filtered noise; granular recipes then apply a half-wave
    threshold/exponent crackle stage.  Output length is K * hop samples.
    """
    recipe.validate(sample_rate)
    if gamma.dims != 1:
        raise ContractViolation("pa_synthesize expects a scalar control curve")
    hop = sample_rate // gamma.control_rate
    k = gamma.num_frames
    n = k * hop

    noise = NoiseSpec(seed).uniform_frames(n)
    taps = scipy.signal.firwin(257, list(recipe.band_edges), pass_zero=False,
                               fs=sample_rate)
    shaped = scipy.signal.fftconvolve(noise, taps, mode="same")
    for freq, q, gain in recipe.resonances:
        b, a = scipy.signal.iirpeak(freq, q, fs=sample_rate)
        shaped = shaped + gain * scipy.signal.lfilter(b, a, shaped)

    frame_times = np.arange(k) / gamma.control_rate
    sample_times = np.arange(n) / sample_rate
    env = np.interp(sample_times, frame_times, gamma.values[:, 0])
    out = shaped * env

    if recipe.crackle:
        theta = float(recipe.crackle.get("threshold", 0.1))
        power = float(recipe.crackle.get("exponent", 2.0))
        mix = float(recipe.crackle.get("mix", 0.5))
        crackled = np.maximum(out - theta, 0.0) ** power
        out = (1.0 - mix) * out + mix * crackled

    return AudioClip(samples=out.astype(np.float32), sample_rate=sample_rate)
