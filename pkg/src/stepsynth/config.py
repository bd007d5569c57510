"""Engine configuration: rates, model dimensions, analysis parameters.

Config files are plain ``key = value`` text, one entry per line, ``#`` for
comments.  The ``PROVE_CONFIG`` environment variable may point at such a
file; CLI and service consult it when no explicit path is given.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass

from .errors import ConfigurationError

PROVE_CONFIG_ENV = "PROVE_CONFIG"


@dataclass
class EngineConfig:
    sample_rate: int = 16000
    control_rate: int = 250

    # model dimensions
    n_z: int = 512
    n_gamma: int = 1
    n_mfcc: int = 13
    n_mels: int = 128
    n_bands: int = 65
    ir_length: int = 129

    # analysis parameters.  smoothing strength is set by the 100 Hz ripple
    # goal: (1 - 4*lam*sin^2(pi*100/fs))^T <= 0.1 needs T >= 5965 at lam=0.25
    mfcc_fft: int = 1024
    mel_fmin: float = 20.0
    mel_fmax: float = 8000.0
    smooth_lambda: float = 0.25
    smooth_iterations: int = 6000

    # request limits
    max_duration: float = 30.0

    def __post_init__(self):
        if self.sample_rate <= 0 or self.control_rate <= 0:
            raise ConfigurationError("rates must be positive")
        if self.sample_rate % self.control_rate != 0:
            raise ConfigurationError(
                f"sample_rate {self.sample_rate} not divisible by "
                f"control_rate {self.control_rate}"
            )
        if not 0.0 < self.smooth_lambda < 0.5:
            raise ConfigurationError("smooth_lambda must lie in (0, 0.5)")
        if self.n_mfcc > self.n_mels:
            raise ConfigurationError("n_mfcc cannot exceed n_mels")

    @property
    def hop(self) -> int:
        """Samples per control frame (f_s / f_c)."""
        return self.sample_rate // self.control_rate

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Stable short hash of the full configuration."""
        text = "\n".join(f"{k}={v!r}" for k, v in sorted(self.to_dict().items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# stepsynth engine configuration\n")
            for key, value in sorted(self.to_dict().items()):
                fh.write(f"{key} = {value}\n")

    @classmethod
    def load(cls, path) -> "EngineConfig":
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in fields:
                    raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
                kind = fields[key]
                values[key] = float(value) if kind == "float" else int(value)
        return cls(**values)


def default_config() -> EngineConfig:
    """Config from PROVE_CONFIG when set, engine defaults otherwise."""
    path = os.environ.get(PROVE_CONFIG_ENV)
    if path:
        return EngineConfig.load(path)
    return EngineConfig()


def desk_config() -> EngineConfig:
    """Small-dimension config for desk-scale training runs and tests."""
    return EngineConfig(n_z=96)
