"""Audio file I/O, resampling, and dataset manifests.

WAV support is deliberately narrow: RIFF/WAVE, PCM16 or float32, one or two
channels in; float32 mono out.  Stereo is collapsed by channel averaging.
Manifests are UTF-8 JSON-lines, one ``{"path": ..., "label": ...}`` object
per line.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import firwin, resample_poly

from .errors import FormatError, ManifestError, UnsupportedError

PCM16_SCALE = 32768.0


@dataclass
class AudioClip:
    """Mono audio: float samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        self.sample_rate = int(self.sample_rate)
        if self.sample_rate <= 0:
            raise FormatError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise FormatError("clip contains non-finite samples")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def read_wav(path) -> AudioClip:
    """Read a RIFF/WAVE file into a mono clip.

    PCM16 payloads are scaled by 1/32768; float32 is taken as-is.  Stereo
    is averaged down to mono.

    Raises:
        FormatError: file is not a parseable RIFF/WAVE container.
        UnsupportedError: valid WAV but an encoding the engine rejects.
    """
    return wav_from_bytes(Path(path).read_bytes(), origin=str(path))


def wav_from_bytes(data: bytes, origin: str = "<bytes>") -> AudioClip:
    """read_wav for an in-memory RIFF/WAVE payload."""
    path = origin
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise FormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedError(f"{path}: {channels} channels (want 1 or 2)")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2").astype(np.float32) / PCM16_SCALE
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    else:
        raise UnsupportedError(
            f"{path}: format tag {audio_format} with {bits} bits not supported"
        )

    if channels == 2:
        raw = raw[: len(raw) - len(raw) % 2].reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=raw, sample_rate=rate)


def wav_bytes(clip: AudioClip) -> bytes:
    """Serialize a clip as float32 mono WAV bytes."""
    samples = np.asarray(clip.samples, dtype="<f4")
    payload = samples.tobytes()
    out = io.BytesIO()
    out.write(b"RIFF")
    out.write(struct.pack("<I", 36 + len(payload)))
    out.write(b"WAVE")
    out.write(b"fmt ")
    # format 3 = IEEE float, mono, 32 bits
    out.write(struct.pack("<IHHIIHH", 16, 3, 1, clip.sample_rate,
                          clip.sample_rate * 4, 4, 32))
    out.write(b"data")
    out.write(struct.pack("<I", len(payload)))
    out.write(payload)
    return out.getvalue()


def write_wav(path, clip: AudioClip) -> None:
    Path(path).write_bytes(wav_bytes(clip))


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited resample to target_rate.

    Polyphase windowed-sinc (Kaiser beta=8) with the anti-alias cutoff at
    0.45 of the lower of the two rates, i.e. 0.9 of the limiting Nyquist.
    Output length is round(L * target / source).
    """
    if target_rate <= 0:
        raise FormatError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return AudioClip(samples=clip.samples.copy(), sample_rate=target_rate)

    source = clip.sample_rate
    g = np.gcd(source, target_rate)
    up, down = target_rate // g, source // g
    half_len = 10 * max(up, down)
    cutoff_hz = 0.45 * min(source, target_rate)
    taps = firwin(2 * half_len + 1, cutoff_hz, window=("kaiser", 8.0),
                  fs=source * up)
    out = resample_poly(clip.samples.astype(np.float64), up, down, window=taps)

    want = int(round(len(clip) * target_rate / source))
    if len(out) > want:
        out = out[:want]
    elif len(out) < want:
        out = np.pad(out, (0, want - len(out)))
    return AudioClip(samples=out.astype(np.float32), sample_rate=target_rate)


def peak_normalize(clip: AudioClip, peak: float = 1.0) -> AudioClip:
    """Scale so max |sample| equals peak; silence passes through unchanged."""
    top = float(np.max(np.abs(clip.samples))) if len(clip) else 0.0
    if top < 1e-9:
        return AudioClip(samples=clip.samples.copy(), sample_rate=clip.sample_rate)
    return AudioClip(samples=clip.samples * (peak / top), sample_rate=clip.sample_rate)


@dataclass
class DatasetManifest:
    """Corpus listing: (path, label) entries plus the derived label vocabulary."""

    entries: list
    class_name: str
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            seen = []
            for _, label in self.entries:
                if label not in seen:
                    seen.append(label)
            self.labels = seen

    def label_id(self, label: str) -> int:
        return self.labels.index(label)

    def __len__(self) -> int:
        return len(self.entries)


def load_manifest(path, class_name: str | None = None) -> DatasetManifest:
    """Load a JSON-lines manifest; label vocabulary in first-appearance order.

    Raises ManifestError naming the offending 1-based line for missing
    files, bad JSON, or missing keys.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: bad JSON ({exc.msg})")
            if "path" not in obj:
                raise ManifestError(f"{path}: line {lineno}: missing 'path'")
            if "label" not in obj:
                raise ManifestError(f"{path}: line {lineno}: missing 'label'")
            entry_path = Path(obj["path"])
            if not entry_path.is_absolute():
                entry_path = path.parent / entry_path
            if not entry_path.exists():
                raise ManifestError(
                    f"{path}: line {lineno}: file not found: {entry_path}"
                )
            entries.append((entry_path, str(obj["label"])))
    return DatasetManifest(entries=entries, class_name=class_name or path.stem)
