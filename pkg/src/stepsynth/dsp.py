"""Deterministic signal analysis.

STFT and windowed overlap-add, analytic-signal envelopes, 1-D Laplacian
smoothing, the envelope-based control proxy, and MFCC extraction aligned
to the 250 Hz control grid.  Everything here is pure numpy/scipy and
thread-safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
import scipy.signal

from .errors import ConfigurationError, ContractViolation

COLA_TOLERANCE = 1e-6


@dataclass
class FrameSpec:
    """Frame length / hop / window triple used for OLA-style processing."""

    frame_length: int
    hop: int
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop <= self.frame_length:
            raise ConfigurationError("need 0 < hop <= frame_length")
        if self.window not in ("hann", "rect"):
            raise ConfigurationError(f"unknown window {self.window!r}")


@dataclass
class ControlSignal:
    """K x d control-rate matrix with its rate in Hz."""

    values: np.ndarray
    control_rate: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ContractViolation("control values must be 1-D or 2-D")
        if not np.all(np.isfinite(values)):
            raise ContractViolation("control values must be finite")
        self.values = values
        self.control_rate = int(self.control_rate)

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def to_json(self) -> str:
        return json.dumps({
            "control_rate": self.control_rate,
            "dims": self.dims,
            "values": [float(v) for v in self.values.reshape(-1)],
        })

    @classmethod
    def from_json(cls, text: str) -> "ControlSignal":
        obj = json.loads(text)
        dims = int(obj["dims"])
        values = np.asarray(obj["values"], dtype=np.float64).reshape(-1, dims)
        return cls(values=values, control_rate=int(obj["control_rate"]))


def make_window(name: str, length: int) -> np.ndarray:
    """Window samples for 'hann' or 'rect'.

    The Hann variant is the half-sample-offset raised cosine
    sin^2(pi (n + 1/2) / N): symmetric, strictly positive at the ends, and
    exactly constant-overlap-add at 50% hop.
    """
    if name == "rect":
        return np.ones(length, dtype=np.float64)
    if name == "hann":
        n = np.arange(length, dtype=np.float64)
        return np.sin(np.pi * (n + 0.5) / length) ** 2
    raise ConfigurationError(f"unknown window {name!r}")


def cola_ripple(window: np.ndarray, hop: int) -> float:
    """Relative ripple of the periodically tiled window-overlap sum."""
    acc = np.zeros(hop, dtype=np.float64)
    for start in range(0, len(window), hop):
        chunk = window[start : start + hop]
        acc[: len(chunk)] += chunk
    mean = acc.mean()
    if mean == 0:
        return float("inf")
    return float((acc.max() - acc.min()) / mean)


def frame_count(length: int, frame_length: int, hop: int) -> int:
    """Frames covering `length` samples: 1 + floor((L - flen)/hop) full
    frames, plus one zero-padded tail frame when they do not land exactly
    on the signal end.  A signal shorter than one frame yields a single
    zero-padded frame."""
    if length <= frame_length:
        return 1
    return 1 + math.ceil((length - frame_length) / hop)


def frame_signal(x: np.ndarray, frame_length: int, hop: int) -> np.ndarray:
    """Slice x into (n_frames, frame_length), zero-padding the tail."""
    x = np.asarray(x)
    n = frame_count(x.shape[-1], frame_length, hop)
    need = (n - 1) * hop + frame_length
    pad = need - x.shape[-1]
    if pad > 0:
        x = np.pad(x, [(0, 0)] * (x.ndim - 1) + [(0, pad)])
    view = np.lib.stride_tricks.sliding_window_view(x, frame_length, axis=-1)
    return np.ascontiguousarray(view[..., ::hop, :])


def stft(samples: np.ndarray, fft_size: int, hop: int,
         window: str = "hann") -> np.ndarray:
    """Complex spectrogram frames: FFT(window * segment) per frame.

    Frame policy matches frame_count(); the tail frame is zero-padded.
    """
    if fft_size & (fft_size - 1) != 0:
        raise ContractViolation("fft_size must be a power of two")
    if hop > fft_size:
        raise ContractViolation("hop must not exceed fft_size")
    frames = frame_signal(np.asarray(samples, dtype=np.float64), fft_size, hop)
    return np.fft.fft(frames * make_window(window, fft_size), axis=-1)


def istft(frames: np.ndarray, hop: int, window: str = "hann",
          length: int | None = None) -> np.ndarray:
    """Inverse of stft(): ifft per frame, then windowed overlap-add."""
    time_frames = np.real(np.fft.ifft(frames, axis=-1))
    out = overlap_add(time_frames, hop, window)
    if length is not None:
        out = out[:length]
    return out


def overlap_add(frames: np.ndarray, hop: int, window: str = "hann",
                trim: int | None = None) -> np.ndarray:
    """Windowed overlap-add resynthesis.

    Applies the synthesis window to each frame, sums at `hop` spacing, and
    divides by the window-overlap normalization curve (sum of squared
    windows), so frames cut with the matching analysis window reconstruct
    the original signal.  Output length is (K-1)*hop + frame_length, or
    `trim` if given (the control-grid contract trims to K*hop).
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ContractViolation("frames must be (n_frames, frame_length)")
    n_frames, frame_length = frames.shape
    win = make_window(window, frame_length)
    if cola_ripple(win, hop) > COLA_TOLERANCE:
        raise ConfigurationError(
            f"window {window!r} with hop {hop} is not constant-overlap-add"
        )
    out_len = (n_frames - 1) * hop + frame_length
    out = np.zeros(out_len, dtype=np.float64)
    norm = np.zeros(out_len, dtype=np.float64)
    win_sq = win * win
    for i in range(n_frames):
        out[i * hop : i * hop + frame_length] += frames[i] * win
        norm[i * hop : i * hop + frame_length] += win_sq
    good = norm > 1e-30
    out[good] /= norm[good]
    out[~good] = 0.0
    if trim is not None:
        out = out[:trim]
    return out


def hilbert_envelope(samples: np.ndarray) -> np.ndarray:
    """Magnitude of the analytic signal (one-sided-spectrum construction)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ContractViolation("empty input")
    return np.abs(scipy.signal.hilbert(x))


def laplacian_smooth(seq: np.ndarray, iterations: int, lam: float) -> np.ndarray:
    """Iterate x[n] += lam * (x[n-1] - 2 x[n] + x[n+1]) with replicated ends."""
    if not 0.0 < lam < 0.5:
        raise ContractViolation("lambda must lie in (0, 0.5)")
    if iterations < 0:
        raise ContractViolation("iterations must be >= 0")
    x = np.asarray(seq, dtype=np.float64).copy()
    if x.size < 3 or iterations == 0:
        return x
    for _ in range(iterations):
        left = np.concatenate(([x[0]], x[:-1]))
        right = np.concatenate((x[1:], [x[-1]]))
        x += lam * (left - 2.0 * x + right)
    return x


def decimate_mean(x: np.ndarray, bin_size: int) -> np.ndarray:
    """Mean over consecutive bins; the final partial bin averages its remainder."""
    n_full = len(x) // bin_size
    out_len = math.ceil(len(x) / bin_size)
    out = np.empty(out_len, dtype=np.float64)
    if n_full:
        out[:n_full] = x[: n_full * bin_size].reshape(n_full, bin_size).mean(axis=1)
    if out_len > n_full:
        out[n_full] = x[n_full * bin_size :].mean()
    return out


def control_proxy(clip, smooth_iterations: int = 6000, lam: float = 0.25,
                  control_rate: int = 250) -> ControlSignal:
    """Envelope-based temporal control estimate.

    Smoothed magnitude of the analytic signal, decimated to the control
    rate by per-bin averaging.  K = ceil(L * f_c / f_s); values >= 0.
    """
    if clip.sample_rate % control_rate != 0:
        raise ContractViolation(
            f"sample rate {clip.sample_rate} not divisible by control rate"
        )
    hop = clip.sample_rate // control_rate
    if len(clip) == 0:
        raise ContractViolation("empty clip")
    env = hilbert_envelope(clip.samples)
    env = laplacian_smooth(env, smooth_iterations, lam)
    gamma = decimate_mean(env, hop)
    return ControlSignal(values=np.maximum(gamma, 0.0), control_rate=control_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(fft_size: int, sample_rate: int, n_mels: int,
                   fmin: float, fmax: float) -> np.ndarray:
    """Triangular mel filterbank (n_mels, fft_size//2 + 1), peak 1."""
    n_bins = fft_size // 2 + 1
    freqs = np.arange(n_bins) * sample_rate / fft_size
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bank = np.zeros((n_mels, n_bins), dtype=np.float64)
    for i in range(n_mels):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (freqs - lo) / max(mid - lo, 1e-12)
        down = (hi - freqs) / max(hi - mid, 1e-12)
        bank[i] = np.maximum(0.0, np.minimum(up, down))
    return bank


@lru_cache(maxsize=8)
def dct_matrix(n_coeffs: int, n_mels: int) -> np.ndarray:
    """First n_coeffs rows of the orthonormal type-II DCT matrix."""
    full = scipy.fft.dct(np.eye(n_mels), type=2, norm="ortho", axis=0)
    return np.ascontiguousarray(full[:n_coeffs])


def frame_signal_centered(x: np.ndarray, frame_length: int, hop: int) -> np.ndarray:
    """Frames centered on the hop grid (centers at k*hop), zero edge padding."""
    x = np.asarray(x, dtype=np.float64)
    n_frames = math.ceil(len(x) / hop)
    half = frame_length // 2
    padded = np.pad(x, (half, frame_length))
    starts = np.arange(n_frames) * hop
    idx = starts[:, None] + np.arange(frame_length)[None, :]
    return padded[idx]


def mfcc(clip, fft_size: int = 1024, hop: int = 64, n_mels: int = 128,
         n_coeffs: int = 13, fmin: float = 20.0, fmax: float = 8000.0,
         log_floor: float = 1e-5) -> np.ndarray:
    """Mel-frequency cepstral coefficients on the control grid.

    Frames are centered at k*hop so a 1 s clip at hop 64 yields exactly
    250 frames.  Log-mel power is floored at `log_floor` before the log;
    the orthonormal type-II DCT keeps the first `n_coeffs` coefficients.
    """
    if n_coeffs > n_mels:
        raise ContractViolation("n_coeffs cannot exceed n_mels")
    frames = frame_signal_centered(clip.samples, fft_size, hop)
    win = make_window("hann", fft_size)
    spec = np.fft.rfft(frames * win, axis=-1)
    power = np.abs(spec) ** 2
    bank = mel_filterbank(fft_size, clip.sample_rate, n_mels, fmin, fmax)
    mel = power @ bank.T
    logmel = np.log(np.maximum(mel, log_floor))
    return logmel @ dct_matrix(n_coeffs, n_mels).T
