"""Exception taxonomy shared across the engine."""


class StepSynthError(Exception):
    """Base class for all engine errors."""


class FormatError(StepSynthError):
    """Malformed container or header (e.g. a broken RIFF file)."""


class UnsupportedError(StepSynthError):
    """Well-formed input using an encoding the engine does not handle."""


class ManifestError(StepSynthError):
    """Bad dataset manifest content; message names the offending line."""


class ContractViolation(StepSynthError):
    """An API precondition was violated (shape/rate/argument misuse)."""


class ConfigurationError(StepSynthError):
    """Inconsistent engine configuration (e.g. a non-COLA window/hop pair)."""


class VocabularyError(StepSynthError):
    """A label id or name outside the model's label vocabulary."""


class StageError(StepSynthError):
    """Checkpoint is missing the weights required for the requested stage."""


class NumericalError(StepSynthError):
    """A computation produced non-finite or otherwise unusable values."""
