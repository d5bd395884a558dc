"""Post-hoc attackers trained on frozen latents."""

from __future__ import annotations

from dataclasses import dataclass
import logging
from typing import Literal

import numpy as np
from numpy.typing import NDArray
import torch

from rdal.core.errors import ConfigError
from rdal.core.errors import SingleClassError
from rdal.models.networks import SpeechClassifier
from rdal.models.networks import build_speech_classifier
from rdal.privacy_eval.latents import LatentDataset
from rdal.schemas.config import AttackerConfig
from rdal.schemas.config import ModelConfig
from rdal.training.probe import ProbeSettings
from rdal.training.probe import fit_probe_on_latents

logger = logging.getLogger(__name__)

Target = Literal["speech", "gender"]


@dataclass(frozen=True)
class Attacker:
    target: Target
    classifier: SpeechClassifier
    validation_loss: float
    validation_accuracy: float
    epochs_trained: int


def attack_view(latents: LatentDataset, target: Target) -> tuple[LatentDataset, NDArray[np.float32]]:
    """Rows and binary targets an attacker sees; gender attacks use speech rows only (female = 1)."""
    if target == "speech":
        return latents, latents.speech_labels.astype(np.float32)
    if target == "gender":
        speech = latents.speech_only()
        return speech, (speech.genders == "female").astype(np.float32)
    raise ConfigError(f"unknown attack target {target!r}")


def train_attacker(
    latents: LatentDataset,
    target: Target,
    config: AttackerConfig,
    *,
    seed: int,
    model_config: ModelConfig | None = None,
) -> Attacker:
    """Fresh classifier with the discriminator's architecture, selected on the validation split."""
    model_config = model_config or ModelConfig()
    rows, targets = attack_view(latents, target)
    train_mask = rows.splits == "train"
    val_mask = rows.splits == "validation"
    if np.unique(targets[train_mask]).size < 2:
        raise SingleClassError(f"{target} attacker training split has a single class")

    result = fit_probe_on_latents(
        torch.from_numpy(rows.latents[train_mask]),
        targets[train_mask],
        torch.from_numpy(rows.latents[val_mask]),
        targets[val_mask],
        model_config=model_config,
        settings=ProbeSettings.from_attacker(config),
        seed=seed,
        hidden=config.hidden,
    )
    classifier = build_speech_classifier(model_config, seed, hidden=config.hidden)
    classifier.load_state_dict(result.state)
    classifier.eval()
    logger.debug("%s attacker: val loss %.4f acc %.3f", target, result.loss, result.accuracy)
    return Attacker(target, classifier, result.loss, result.accuracy, result.epochs_trained)


@torch.no_grad()
def attacker_probabilities(attacker: Attacker, latents: NDArray[np.float32]) -> NDArray[np.float64]:
    return torch.sigmoid(attacker.classifier(torch.from_numpy(latents))).double().numpy()
