"""Differentiable filtered-noise synthesis and the multi-scale spectral loss.

The decoder's signal path: per control frame, a half-spectrum magnitude
response becomes a linear-phase FIR which filters fresh uniform noise; the
filtered tails overlap-add into the output at the control hop.  Everything
is differentiable with respect to the magnitudes through the autodiff ops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractViolation

LOSS_FFT_SIZES = (2048, 1024, 512, 256, 128, 64)
LOSS_OVERLAP = 0.75
LOG_FLOOR = 1e-7


@dataclass
class FilterFrames:
    """Per-frame half-spectrum magnitude responses, shape (K, n_bands)."""

    magnitudes: np.ndarray

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.ndim != 2:
            raise ContractViolation("magnitudes must be (K, n_bands)")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ContractViolation("magnitudes must be finite and >= 0")
        self.magnitudes = mags

    @property
    def num_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bands(self) -> int:
        return self.magnitudes.shape[1]


@dataclass
class NoiseSpec:
    """Seeded counter-based noise source (Philox), identical on all platforms."""

    seed: int
    generator: str = "philox"

    def _rng(self) -> np.random.Generator:
        if self.generator != "philox":
            raise ContractViolation(f"unknown generator {self.generator!r}")
        return np.random.Generator(np.random.Philox(self.seed))

    def uniform_frames(self, shape) -> np.ndarray:
        """Uniform(-1, 1) noise of the given shape, one deterministic stream."""
        return self._rng().uniform(-1.0, 1.0, size=shape)


def _sym_hann(length: int) -> np.ndarray:
    """Symmetric Hann with zero endpoints and unit center (odd lengths)."""
    n = np.arange(length, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / (length - 1))


def fir_from_magnitudes(mags, ir_length: int):
    """Linear-phase FIR taps realizing half-spectrum magnitudes.

    Inverse real DFT of the (zero-phase) magnitudes, circularly shifted to
    center, Hann-windowed to `ir_length` taps, and symmetrized so
    ir[n] == ir[ir_length-1-n] holds bit-exactly.

    Accepts a Tensor or array shaped (..., n_bands); returns a Tensor
    shaped (..., ir_length).
    """
    arr = mags.data if isinstance(mags, ad.Tensor) else np.asarray(mags)
    n_bands = arr.shape[-1]
    n_fft = 2 * (n_bands - 1)
    if ir_length % 2 != 1:
        raise ContractViolation("ir_length must be odd")
    if ir_length > n_fft + 1:
        raise ContractViolation("ir_length longer than the DFT period supports")
    half = ir_length // 2
    t = ad.irfft_real(mags if isinstance(mags, ad.Tensor) else ad.tensor(arr), n_fft)
    idx = (np.arange(ir_length) - half) % n_fft
    centered = ad.getitem(t, (Ellipsis, idx))
    windowed = ad.mul(centered, _sym_hann(ir_length))
    return ad.mul(ad.add(windowed, ad.flip_last(windowed)), 0.5)


def filtered_noise(filters, noise: NoiseSpec, hop: int, ir_length: int = 129):
    """Time-varying subtractive synthesis from per-frame magnitudes.

    Each control frame draws `hop` fresh uniform(-1, 1) samples, filters
    them with that frame's FIR, and overlap-adds the tail into the output,
    compensating the FIR group delay so frame k's energy lands at k*hop.
    Output length is K*hop; differentiable w.r.t. the magnitudes.

    `filters` may be FilterFrames, a (K, n_bands) array, or a Tensor with
    optional leading batch dimensions.
    """
    if isinstance(filters, FilterFrames):
        filters = ad.tensor(filters.magnitudes)
    elif not isinstance(filters, ad.Tensor):
        filters = ad.tensor(np.asarray(filters))
    k = filters.shape[-2]
    irs = fir_from_magnitudes(filters, ir_length)
    noise_frames = noise.uniform_frames(filters.shape[:-1] + (hop,))
    tails = ad.batch_conv_full(noise_frames, irs)
    return ad.ola_scatter(tails, hop, -(ir_length // 2), k * hop)


def multiscale_spectral_loss(x, y, fft_sizes=LOSS_FFT_SIZES,
                             overlap: float = LOSS_OVERLAP,
                             mag_weight: float = 1.0,
                             log_weight: float = 1.0):
    """Sum over FFT sizes of mean-L1 magnitude and log-magnitude differences.

    75% overlapped Hann frames at each size; log magnitudes are floored at
    1e-7.  Differentiable w.r.t. both inputs; returns a scalar Tensor.
    """
    xv = x.data if isinstance(x, ad.Tensor) else np.asarray(x)
    yv = y.data if isinstance(y, ad.Tensor) else np.asarray(y)
    if xv.shape != yv.shape:
        raise ContractViolation("loss inputs must have identical shape")
    total = None
    for size in fft_sizes:
        hop = max(1, int(round(size * (1.0 - overlap))))
        win = np.sin(np.pi * (np.arange(size) + 0.5) / size) ** 2
        mx = ad.fft_magnitude(ad.mul(ad.frame(x, size, hop), win))
        my = ad.fft_magnitude(ad.mul(ad.frame(y, size, hop), win))
        diff = ad.mean(ad.absolute(ad.sub(mx, my)))
        log_diff = ad.mean(ad.absolute(ad.sub(
            ad.log(ad.maximum_const(mx, LOG_FLOOR)),
            ad.log(ad.maximum_const(my, LOG_FLOOR)),
        )))
        term = ad.add(ad.mul(diff, mag_weight), ad.mul(log_diff, log_weight))
        total = term if total is None else ad.add(total, term)
    return total
