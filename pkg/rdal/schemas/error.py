"""Error envelope printed by the CLI for every ``RdalError``."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict

ErrorCode = Literal[
    "rdal_error",
    "degenerate_input",
    "shape_mismatch",
    "corpus_error",
    "feature_error",
    "config_error",
    "non_finite_loss",
    "checkpoint_mismatch",
    "single_class",
    "ledger_corruption",
    "mask_targets_unavailable",
    "missing_optional_dependency",
]


class ErrorDetail(BaseModel):
    """One offending item: a config location, a ledger cell, a loss term or a corpus check."""

    model_config = ConfigDict(frozen=True)

    field: str
    issue: str


class ErrorObject(BaseModel):
    code: ErrorCode
    message: str
    details: list[ErrorDetail] | None = None


class ErrorResponse(BaseModel):
    """``{"error": {...}}``; parsed back by scripts that wrap the CLI."""

    error: ErrorObject
