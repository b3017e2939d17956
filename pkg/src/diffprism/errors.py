"""Exception hierarchy for diffprism.

Every error derives from PrismError and from the closest builtin, so callers
can catch either ``PrismError`` or e.g. ``ValueError``.
"""

from typing import Optional


class PrismError(Exception):
    """Base class for all diffprism errors."""


class ConfigurationError(PrismError, ValueError):
    """Invalid parameters or job configuration."""


class DimensionError(PrismError, ValueError):
    """Array shapes or dimensions do not agree."""


class ImageFormatError(PrismError, ValueError):
    """A file exists but cannot be decoded as a raster image."""


class ImageIOError(PrismError, OSError):
    """An image could not be read from or written to disk."""


class SingularityError(PrismError, ArithmeticError):
    """A division by a vanishing schedule coefficient was requested."""


class SequencingError(PrismError, ValueError):
    """Sampler steps were requested out of order."""


class NumericalDivergenceError(PrismError, ArithmeticError):
    """A tensor or metric became NaN or infinite."""


class InsufficientDataError(PrismError, ValueError):
    """Too few samples to estimate a statistic."""


class DegenerateLabelsError(PrismError, ValueError):
    """Classifier training data contains a single class."""


class DegenerateInputError(PrismError, ValueError):
    """Input has no usable magnitude (e.g. a zero vector)."""


class EmptyInputError(PrismError, ValueError):
    """No inputs were found for a job."""


class OutputExistsError(PrismError, FileExistsError):
    """The output directory already holds a run."""


class UnsupportedOperationError(PrismError, NotImplementedError):
    """The backend does not advertise the requested capability."""


class BackendError(PrismError):
    """A denoising backend failed to serve a request."""

    def __init__(
        self,
        message: str,
        status: Optional[int] = None,
        body: Optional[str] = None,
        attempts: int = 1,
        request_id: Optional[str] = None,
    ):
        super().__init__(message)
        self.status = status
        self.body = body
        self.attempts = attempts
        self.request_id = request_id


class BackendTimeoutError(BackendError):
    """The backend did not answer within the configured timeout."""


class BackendDecodeError(BackendError):
    """The backend answered with a payload that cannot be decoded."""
