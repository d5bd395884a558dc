"""Warm-up then sigmoid ramp for the reversal coefficient."""

from __future__ import annotations

from dataclasses import dataclass
import math

from rdal.schemas.config import ExperimentConfig


def lambda_from_beta(beta: float, gamma: float = 100.0) -> float:
    """2 / (1 + exp(-gamma * beta)) - 1 with beta clamped to [0, 1], capped at 1."""
    beta = min(max(beta, 0.0), 1.0)
    return min(2.0 / (1.0 + math.exp(-gamma * beta)) - 1.0, 1.0)


@dataclass(frozen=True)
class GrlSchedule:
    warmup_epochs: int = 30
    max_epochs: int = 5000
    gamma: float = 100.0

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> GrlSchedule:
        return cls(config.warmup_epochs, config.max_epochs, config.gamma)

    def beta(self, epoch: int) -> float:
        if epoch < self.warmup_epochs:
            return 0.0
        span = self.max_epochs - self.warmup_epochs
        return min(max((epoch - self.warmup_epochs) / span, 0.0), 1.0)

    def __call__(self, epoch: int) -> float:
        if epoch < 0:
            raise ValueError("epoch must be >= 0")
        if epoch < self.warmup_epochs:
            return 0.0
        return lambda_from_beta(self.beta(epoch), self.gamma)


def lambda_schedule(epoch: int, config: ExperimentConfig | None = None) -> float:
    """Reversal coefficient for ``epoch`` (0-based)."""
    schedule = GrlSchedule() if config is None else GrlSchedule.from_config(config)
    return schedule(epoch)
