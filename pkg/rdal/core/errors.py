"""Error hierarchy shared by library code and the CLI."""

from __future__ import annotations

from collections.abc import Sequence
import json

from rdal.schemas.error import ErrorDetail
from rdal.schemas.error import ErrorObject
from rdal.schemas.error import ErrorResponse


class RdalError(Exception):
    """Base exception for explicit, user-facing failures."""

    code = "rdal_error"

    def __init__(
        self,
        message: str,
        *,
        details: Sequence[ErrorDetail] | None = None,
        code: str | None = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.details = list(details) if details else None

    def to_response(self) -> ErrorResponse:
        """Render the exception as the shared error envelope."""
        return ErrorResponse(error=ErrorObject(code=self.code, message=self.message, details=self.details))


class DegenerateInputError(RdalError, ValueError):
    """Raised for audio with no usable energy or variance."""

    code = "degenerate_input"


class ShapeMismatchError(RdalError, ValueError):
    """Raised when a segment, matrix or tensor has the wrong shape."""

    code = "shape_mismatch"


class CorpusError(RdalError):
    """Raised when a corpus cannot be built or loaded."""

    code = "corpus_error"


class FeatureError(RdalError, ValueError):
    """Raised when a spectrogram or feature matrix holds invalid values."""

    code = "feature_error"


class ConfigError(RdalError, ValueError):
    """Raised when configuration fails schema validation."""

    code = "config_error"


class NonFiniteLossError(RdalError, ArithmeticError):
    """Raised when a training loss becomes NaN or infinite."""

    code = "non_finite_loss"


class CheckpointMismatchError(RdalError):
    """Raised when a checkpoint does not belong to the given manifest or config."""

    code = "checkpoint_mismatch"


class SingleClassError(RdalError, ValueError):
    """Raised when a binary metric or attacker sees only one class."""

    code = "single_class"


class LedgerCorruptionError(RdalError):
    """Raised when ledger artifacts no longer match their recorded checksums."""

    code = "ledger_corruption"


class MaskTargetsUnavailableError(RdalError):
    """Raised when mask pre-training has no event-only targets to learn from."""

    code = "mask_targets_unavailable"


def format_error(exc: RdalError) -> str:
    """Serialize an error envelope as a single JSON line."""
    payload = exc.to_response().model_dump(exclude_none=True)
    return json.dumps(payload, sort_keys=True)
