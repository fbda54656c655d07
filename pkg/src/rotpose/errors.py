"""Exception types shared across the package."""


class RotposeError(Exception):
    """Base class for all errors raised by rotpose."""


class ConfigError(RotposeError, ValueError):
    """A tunable violates its contract (bad step, weight, window, ...)."""


class SchemaError(RotposeError):
    """Structural mismatch: wrong joint count, schema identity, or frame tag."""


class WireFormatError(RotposeError):
    """Keypoint wire document is malformed or does not match the schema."""


class BackendError(RotposeError):
    """An estimator backend failed (nonzero exit, crash, ...)."""


class BackendTimeoutError(BackendError):
    """An external estimator call exceeded its time budget."""


class ProtocolError(RotposeError):
    """An external estimator violated the file protocol (missing/invalid output)."""


class NoCandidateError(RotposeError):
    """Selection was asked to choose from an empty candidate list."""


class GenerationError(RotposeError):
    """Synthetic sequence generation produced an invalid frame."""


class FrameProcessingError(RotposeError):
    """Every rotation of a frame failed at the backend."""
