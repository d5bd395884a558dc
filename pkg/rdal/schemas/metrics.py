"""Pydantic schemas for losses, training logs, evaluation metrics and the ledger."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from rdal.schemas.config import Method

LedgerStatus = Literal["pending", "in_progress", "completed", "blocked"]


class LossBundle(BaseModel):
    """Losses of one training step; ``loss_adv`` is 0 when no D path exists."""

    model_config = ConfigDict(frozen=True)

    loss_cls: float = Field(ge=0.0)
    loss_adv: float = Field(0.0, ge=0.0)
    loss_sp: float | None = Field(None, ge=0.0)


class EpochLogRow(BaseModel):
    """One row of the append-only training log."""

    epoch: int
    lam: float
    loss_cls: float
    loss_adv: float
    val_loss_cls: float
    val_sed_accuracy: float
    val_adv_accuracy: float | None = None
    probe_loss_sp: float | None = None
    probe_accuracy: float | None = None


class ProbeCycle(BaseModel):
    """Outcome of one retrain-and-swap cycle."""

    epoch: int
    loss_sp: float
    accuracy: float
    epochs_trained: int
    swapped: bool
    improved: bool


class MetricsRecord(BaseModel):
    """Attacker and utility metrics of one evaluation run."""

    run_seed: int
    sed_accuracy: float = Field(ge=0.0, le=1.0)
    sad_accuracy: float = Field(ge=0.0, le=1.0)
    sad_auc: float = Field(ge=0.0, le=1.0)
    gd_accuracy: float = Field(ge=0.0, le=1.0)
    gd_auc: float = Field(ge=0.0, le=1.0)
    sad_density_overlap: float = Field(ge=0.0)
    sad_uncertainty: float = Field(ge=0.0)


METRIC_FIELDS: tuple[str, ...] = (
    "sed_accuracy",
    "sad_accuracy",
    "sad_auc",
    "gd_accuracy",
    "gd_auc",
    "sad_density_overlap",
    "sad_uncertainty",
)


class MetricSummary(BaseModel):
    mean: float
    std: float


class AggregateReport(BaseModel):
    """Mean and standard deviation of every metric over evaluation runs."""

    method: Method
    tau: int | None = None
    run_count: int
    metrics: dict[str, MetricSummary]
    runs: list[MetricsRecord]


class TauCandidate(BaseModel):
    """Validation evidence for one tau value."""

    tau: int
    probe_loss_sp: float
    sed_accuracy: float


class LedgerEntry(BaseModel):
    """One (method, tau, seed) cell of the experiment matrix."""

    key: str
    method: Method
    tau: int | None
    seed: int
    status: LedgerStatus = "pending"
    config_hash: str = ""
    checkpoint_path: str | None = None
    metrics_path: str | None = None
    report_path: str | None = None
    checksums: dict[str, str] = Field(default_factory=dict)
    validation: TauCandidate | None = None
    error: str | None = None
