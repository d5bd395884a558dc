"""Speech probe trained to convergence on frozen latents, and the probe swap."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import NDArray
import torch

from rdal.core.errors import SingleClassError
from rdal.models.networks import FeatureExtractor
from rdal.models.networks import SpeechClassifier
from rdal.models.networks import build_speech_classifier
from rdal.models.networks import encode
from rdal.schemas.config import AttackerConfig
from rdal.schemas.config import ExperimentConfig
from rdal.schemas.config import ModelConfig
from rdal.training.losses import loss_adv_from_logits

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeSettings:
    """Optimizer and stopping rule for a binary classifier on latents."""

    batch_size: int = 64
    learning_rate: float = 0.01
    momentum: float = 0.9
    max_epochs: int = 200
    patience: int = 10
    threshold: float = 0.5

    @classmethod
    def from_experiment(cls, config: ExperimentConfig) -> ProbeSettings:
        return cls(
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            momentum=config.momentum,
            max_epochs=config.probe_max_epochs,
            patience=config.probe_patience,
        )

    @classmethod
    def from_attacker(cls, config: AttackerConfig) -> ProbeSettings:
        return cls(
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            momentum=config.momentum,
            max_epochs=config.max_epochs,
            patience=config.patience,
            threshold=config.threshold,
        )


@dataclass(frozen=True)
class ProbeResult:
    """Best-validation parameters of a converged probe."""

    state: dict[str, torch.Tensor]
    loss: float
    accuracy: float
    epochs_trained: int


def _require_two_classes(targets: NDArray, name: str) -> None:
    if np.unique(targets).size < 2:
        raise SingleClassError(f"{name} targets contain a single class")


@torch.no_grad()
def _validation(
    classifier: SpeechClassifier, latents: torch.Tensor, targets: torch.Tensor, threshold: float
) -> tuple[float, float]:
    logits = classifier(latents)
    loss = float(loss_adv_from_logits(logits, targets))
    accuracy = float(((torch.sigmoid(logits) >= threshold).float() == targets).float().mean())
    return loss, accuracy


def fit_probe_on_latents(
    train_latents: torch.Tensor,
    train_targets: NDArray,
    val_latents: torch.Tensor,
    val_targets: NDArray,
    *,
    model_config: ModelConfig,
    settings: ProbeSettings,
    seed: int,
    hidden: tuple[int, ...] | None = None,
    init_state: dict[str, torch.Tensor] | None = None,
) -> ProbeResult:
    """Train a speech-classifier-shaped network with SGD until validation BCE stops improving."""
    _require_two_classes(train_targets, "training")
    classifier = build_speech_classifier(model_config, seed, hidden=hidden)
    if init_state is not None:
        classifier.load_state_dict(init_state)
    optimizer = torch.optim.SGD(classifier.parameters(), lr=settings.learning_rate, momentum=settings.momentum)
    rng = np.random.default_rng(seed)

    x_train = train_latents.detach().float()
    y_train = torch.as_tensor(np.asarray(train_targets), dtype=torch.float32)
    x_val = val_latents.detach().float()
    y_val = torch.as_tensor(np.asarray(val_targets), dtype=torch.float32)

    best_loss, best_accuracy = _validation(classifier, x_val, y_val, settings.threshold)
    best_state = {name: tensor.clone() for name, tensor in classifier.state_dict().items()}
    stale = 0
    epochs_trained = 0
    for epoch in range(settings.max_epochs):
        classifier.train()
        order = torch.from_numpy(rng.permutation(len(x_train)))
        for start in range(0, len(order), settings.batch_size):
            rows = order[start : start + settings.batch_size]
            optimizer.zero_grad(set_to_none=True)
            loss_adv_from_logits(classifier(x_train[rows]), y_train[rows]).backward()
            optimizer.step()
        epochs_trained = epoch + 1

        classifier.eval()
        loss, accuracy = _validation(classifier, x_val, y_val, settings.threshold)
        if loss < best_loss:
            best_loss, best_accuracy = loss, accuracy
            best_state = {name: tensor.clone() for name, tensor in classifier.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale >= settings.patience:
                break

    return ProbeResult(state=best_state, loss=best_loss, accuracy=best_accuracy, epochs_trained=epochs_trained)


def retrain_probe(
    feature_extractor: FeatureExtractor,
    train_features: torch.Tensor,
    train_speech: NDArray,
    val_features: torch.Tensor,
    val_speech: NDArray,
    *,
    model_config: ModelConfig,
    settings: ProbeSettings,
    seed: int,
    init_state: dict[str, torch.Tensor] | None = None,
) -> tuple[SpeechClassifier, ProbeResult]:
    """Fit a probe on latents of the frozen extractor; only probe parameters change."""
    train_latents = encode(feature_extractor, train_features)
    val_latents = encode(feature_extractor, val_features)
    result = fit_probe_on_latents(
        train_latents,
        train_speech,
        val_latents,
        val_speech,
        model_config=model_config,
        settings=settings,
        seed=seed,
        init_state=init_state,
    )
    probe = build_speech_classifier(model_config, seed)
    probe.load_state_dict(result.state)
    probe.eval()
    logger.debug(
        "Probe converged after %s epochs: loss=%.4f acc=%.3f", result.epochs_trained, result.loss, result.accuracy
    )
    return probe, result


def swap_probe(
    speech_classifier: SpeechClassifier,
    probe: SpeechClassifier,
    optimizer: torch.optim.Optimizer | None = None,
) -> SpeechClassifier:
    """Copy the probe's parameters into the in-loop discriminator.

    Momentum buffers of the discriminator are dropped so the next update starts
    from the copied parameters alone.
    """
    target = speech_classifier.state_dict()
    source = probe.state_dict()
    assert target.keys() == source.keys() and all(target[name].shape == source[name].shape for name in target)
    with torch.no_grad():
        for name, tensor in target.items():
            tensor.copy_(source[name])
    if optimizer is not None:
        for parameter in speech_classifier.parameters():
            optimizer.state.pop(parameter, None)
    return speech_classifier
