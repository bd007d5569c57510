"""Distribution distances between audio sets: Fréchet distance between
Gaussian fits and the unbiased maximum-mean-discrepancy estimator, over a
pluggable clip embedding.

The default embedding is intentionally lightweight: per-clip mean and
standard deviation of the first 13 MFCCs plus log-RMS (d = 27).  Scores
from different embedders are not comparable, so every report names its
embedder.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from . import dsp
from .config import EngineConfig
from .errors import ContractViolation, NumericalError

log = logging.getLogger("stepsynth.metrics")

MIN_CLIP_SECONDS = 0.25
LOG_RMS_FLOOR = 1e-5


@dataclass
class EmbeddingSet:
    """n_clips x d embedding matrix for one named audio set."""

    matrix: np.ndarray
    embedder: str
    name: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ContractViolation("embedding matrix must be 2-D")
        if not np.all(np.isfinite(m)):
            raise ContractViolation("embeddings must be finite")
        self.matrix = m

    def __len__(self) -> int:
        return self.matrix.shape[0]


def embed_clips(clips, name: str = "set", embedder: str = "mfcc-stats",
                config: EngineConfig | None = None) -> EmbeddingSet:
    """Embed clips at the engine rate; too-short clips are skipped."""
    if embedder != "mfcc-stats":
        raise ContractViolation(f"unknown embedder {embedder!r}")
    cfg = config or EngineConfig()
    rows = []
    for i, clip in enumerate(clips):
        if clip.duration < MIN_CLIP_SECONDS:
            log.warning("skipping clip %d: %.3f s is shorter than %.2f s",
                        i, clip.duration, MIN_CLIP_SECONDS)
            continue
        feats = dsp.mfcc(clip, fft_size=cfg.mfcc_fft, hop=cfg.hop,
                         n_mels=cfg.n_mels, n_coeffs=cfg.n_mfcc,
                         fmin=cfg.mel_fmin, fmax=cfg.mel_fmax)
        rms = float(np.sqrt(np.mean(clip.samples.astype(np.float64) ** 2)))
        rows.append(np.concatenate([
            feats.mean(axis=0),
            feats.std(axis=0),
            [np.log(max(rms, LOG_RMS_FLOOR))],
        ]))
    return EmbeddingSet(matrix=np.asarray(rows, dtype=np.float64).reshape(len(rows), -1),
                        embedder=embedder, name=name)


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """PSD square root via symmetric eigendecomposition, eigenvalues clamped at 0."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation("matrix must be square")
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise ContractViolation("matrix is not symmetric within tolerance")
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = scipy.linalg.eigh(sym)
    eigvals = np.maximum(eigvals, 0.0)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def _mean_cov(e: EmbeddingSet):
    if len(e) < 2:
        raise ContractViolation(f"set {e.name!r} needs >= 2 clips for FAD")
    mu = e.matrix.mean(axis=0)
    cov = np.cov(e.matrix, rowvar=False)
    return mu, np.atleast_2d(cov)


def fad(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    Covariance roots come from the clamped symmetric eigendecomposition;
    the cross trace uses Tr((S_a S_b)^{1/2}) = ||S_a^{1/2} S_b^{1/2}||_*
    (nuclear norm via SVD), which avoids re-rooting near-singular products
    and keeps fad(A, A) at numerical zero.
    """
    mu_a, cov_a = _mean_cov(a)
    mu_b, cov_b = _mean_cov(b)
    root_a = matrix_sqrt_psd(cov_a)
    root_b = matrix_sqrt_psd(cov_b)
    cross_trace = scipy.linalg.svdvals(root_a @ root_b).sum()
    diff = mu_a - mu_b
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b)
                  - 2.0 * cross_trace)
    if not np.isfinite(value):
        raise NumericalError(
            f"non-finite FAD; cond(S_a)={np.linalg.cond(cov_a):.3g}, "
            f"cond(S_b)={np.linalg.cond(cov_b):.3g}"
        )
    return value


def _rbf_bandwidth(pooled: np.ndarray) -> float:
    d = cdist(pooled, pooled)
    off = d[np.triu_indices(len(pooled), k=1)]
    med = float(np.median(off))
    return med if med > 0 else 1.0


def mmd2(a: EmbeddingSet, b: EmbeddingSet, kernel: str = "rbf") -> float:
    """Unbiased U-statistic MMD^2 estimator.

    Kernels: 'rbf' with bandwidth set to the median pairwise distance of
    the pooled set (k(x, y) = exp(-||x-y||^2 / (2 sigma^2))), or 'linear'.
    The unbiased estimator may be slightly negative for matching sets.
    """
    x, y = a.matrix, b.matrix
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        raise ContractViolation("mmd2 needs >= 2 clips per set")
    if kernel == "linear":
        kxx, kyy, kxy = x @ x.T, y @ y.T, x @ y.T
    elif kernel == "rbf":
        sigma = _rbf_bandwidth(np.concatenate([x, y], axis=0))
        gamma = 1.0 / (2.0 * sigma * sigma)
        kxx = np.exp(-gamma * cdist(x, x, "sqeuclidean"))
        kyy = np.exp(-gamma * cdist(y, y, "sqeuclidean"))
        kxy = np.exp(-gamma * cdist(x, y, "sqeuclidean"))
    else:
        raise ContractViolation(f"unknown kernel {kernel!r}")
    sum_xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    sum_yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    sum_xy = kxy.sum() / (m * n)
    return float(sum_xx + sum_yy - 2.0 * sum_xy)


@dataclass
class EvalReport:
    """Pairwise FAD / MMD^2 scores between named embedding sets."""

    scores: dict = field(default_factory=dict)  # (name_a, name_b) -> dict
    embedder: str = "mfcc-stats"
    config_hash: str = ""

    def add(self, name_a: str, name_b: str, fad_value: float,
            mmd2_value: float) -> None:
        key = tuple(sorted((name_a, name_b)))
        self.scores[key] = {"fad": fad_value, "mmd2": mmd2_value}

    def get(self, name_a: str, name_b: str) -> dict:
        return self.scores[tuple(sorted((name_a, name_b)))]

    def to_json(self) -> str:
        return json.dumps({
            "embedder": self.embedder,
            "config_hash": self.config_hash,
            "pairs": [
                {"set_a": a, "set_b": b, "fad": v["fad"], "mmd2": v["mmd2"]}
                for (a, b), v in sorted(self.scores.items())
            ],
        }, indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["set_a", "set_b", "fad", "mmd2", "embedder"])
            for (a, b), v in sorted(self.scores.items()):
                writer.writerow([a, b, repr(v["fad"]), repr(v["mmd2"]),
                                 self.embedder])

    def table(self) -> str:
        lines = [f"{'set_a':<16} {'set_b':<16} {'fad':>12} {'mmd2':>12}"]
        for (a, b), v in sorted(self.scores.items()):
            lines.append(f"{a:<16} {b:<16} {v['fad']:>12.5f} {v['mmd2']:>12.5f}")
        return "\n".join(lines)


def evaluate_sets(sets, kernel: str = "rbf",
                  config: EngineConfig | None = None) -> EvalReport:
    """All-pairs report over a list of EmbeddingSets."""
    cfg = config or EngineConfig()
    report = EvalReport(embedder=sets[0].embedder if sets else "mfcc-stats",
                        config_hash=cfg.config_hash())
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            report.add(sets[i].name, sets[j].name,
                       fad(sets[i], sets[j]), mmd2(sets[i], sets[j], kernel))
    return report
