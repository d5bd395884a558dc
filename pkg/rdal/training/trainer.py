"""Adversarial training loop with periodic probe retraining and swaps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from dataclasses import field
import logging
import math
from pathlib import Path

import numpy as np
import torch

from rdal.core.config import get_runtime_settings
from rdal.core.errors import NonFiniteLossError
from rdal.core.reproducibility import derive_seed
from rdal.core.reproducibility import seed_everything
from rdal.features.cache import LOGMEL
from rdal.features.cache import FeatureCache
from rdal.features.cache import FeatureSet
from rdal.features.cache import load_feature_set
from rdal.models.checkpoint import save_checkpoint
from rdal.models.checkpoint import snapshot
from rdal.models.grl import grl_forward
from rdal.models.masknet import MaskNet
from rdal.models.networks import Networks
from rdal.models.networks import build_networks
from rdal.models.networks import encode
from rdal.schemas.config import ADVERSARIAL_METHODS
from rdal.schemas.config import PROBE_METHODS
from rdal.schemas.config import ExperimentConfig
from rdal.schemas.corpus import CorpusManifest
from rdal.schemas.error import ErrorDetail
from rdal.schemas.metrics import EpochLogRow
from rdal.schemas.metrics import LossBundle
from rdal.schemas.metrics import ProbeCycle
from rdal.schemas.metrics import TauCandidate
from rdal.training.losses import loss_adv_from_logits
from rdal.training.losses import loss_cls_from_logits
from rdal.training.probe import ProbeSettings
from rdal.training.probe import retrain_probe
from rdal.training.probe import swap_probe
from rdal.training.sampling import BalancedBatchSampler
from rdal.training.schedule import GrlSchedule

logger = logging.getLogger(__name__)

TRAINING_LOG = "training_log.csv"
CHECKPOINT_DIR = "checkpoints"
BEST_CHECKPOINT = "best.pt"
LOG_HEADERS = list(EpochLogRow.model_fields)
# methods that train a discriminator next to F and C
DISCRIMINATOR_METHODS = ADVERSARIAL_METHODS | {"lower_bound"}
# methods selected on converged probe loss instead of validation event loss
PROBE_SELECTED_METHODS = PROBE_METHODS | {"naive_adv"}


@dataclass
class Batch:
    features: torch.Tensor
    event_labels: torch.Tensor
    speech_labels: torch.Tensor


@dataclass
class TrainState:
    """Mutable state of one run; ``best_score`` is larger-is-better."""

    method: str
    networks: Networks
    optimizer: torch.optim.Optimizer
    epoch: int = 0
    lam: float = 0.0
    best_score: float = -math.inf
    best_epoch: int | None = None
    best_sed_accuracy: float | None = None
    cycles_since_improvement: int = 0
    cycles: list[ProbeCycle] = field(default_factory=list)
    probe_state: dict[str, torch.Tensor] | None = None


@dataclass(frozen=True)
class ValidationScores:
    loss_cls: float
    sed_accuracy: float
    adv_accuracy: float | None


@dataclass(frozen=True)
class FitResult:
    checkpoint_path: Path
    log_path: Path
    best_epoch: int
    epochs_run: int
    stopped_early: bool
    cycles: list[ProbeCycle]
    candidate: TauCandidate | None


def build_optimizer(networks: Networks, config: ExperimentConfig) -> torch.optim.SGD:
    parameters = [parameter for module in networks.modules() for parameter in module.parameters()]
    return torch.optim.SGD(parameters, lr=config.learning_rate, momentum=config.momentum)


def train_step(batch: Batch, state: TrainState) -> LossBundle:
    """One SGD update of C on L_cls, D on L_adv and F on L_cls minus lambda times L_adv.

    A single backward pass through the reversal layer produces all three gradients.
    """
    networks = state.networks
    networks.train()
    state.optimizer.zero_grad(set_to_none=True)

    latents = networks.feature_extractor(batch.features)
    cls_loss = loss_cls_from_logits(networks.event_classifier(latents), batch.event_labels)
    total = cls_loss
    adv_loss = None
    if networks.speech_classifier is not None:
        adv_input = grl_forward(latents, state.lam) if state.method in ADVERSARIAL_METHODS else latents
        adv_loss = loss_adv_from_logits(networks.speech_classifier(adv_input), batch.speech_labels)
        total = cls_loss + adv_loss

    values = {"loss_cls": float(cls_loss), "loss_adv": 0.0 if adv_loss is None else float(adv_loss)}
    if not all(math.isfinite(value) for value in values.values()):
        raise NonFiniteLossError(
            f"Non-finite loss at epoch {state.epoch}",
            details=[ErrorDetail(field=name, issue=repr(value)) for name, value in values.items()]
            + [ErrorDetail(field="lambda", issue=repr(state.lam))],
        )

    total.backward()
    state.optimizer.step()
    return LossBundle(**values)


@torch.no_grad()
def validate(
    networks: Networks,
    features: torch.Tensor,
    event_labels: torch.Tensor,
    speech_labels: torch.Tensor,
) -> ValidationScores:
    latents = encode(networks.feature_extractor, features)
    networks.event_classifier.eval()
    logits = networks.event_classifier(latents)
    loss = float(loss_cls_from_logits(logits, event_labels))
    sed_accuracy = float((logits.argmax(dim=1) == event_labels).float().mean())
    adv_accuracy = None
    if networks.speech_classifier is not None:
        networks.speech_classifier.eval()
        predicted = torch.sigmoid(networks.speech_classifier(latents)) >= 0.5
        adv_accuracy = float((predicted.float() == speech_labels).float().mean())
    return ValidationScores(loss, sed_accuracy, adv_accuracy)


class TrainingLogWriter:
    """Append-only CSV log, one row per epoch."""

    def __init__(self, path: Path) -> None:
        self.path = path
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            csv.DictWriter(handle, fieldnames=LOG_HEADERS).writeheader()

    def append(self, row: EpochLogRow) -> None:
        with self.path.open("a", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=LOG_HEADERS)
            writer.writerow({key: "" if value is None else value for key, value in row.model_dump().items()})


def read_training_log(path: Path) -> list[EpochLogRow]:
    with path.open(encoding="utf-8", newline="") as handle:
        return [
            EpochLogRow.model_validate({key: (value if value != "" else None) for key, value in row.items()})
            for row in csv.DictReader(handle)
        ]


def _tensors(data: FeatureSet, device: str) -> Batch:
    return Batch(
        features=torch.from_numpy(data.features).to(device),
        event_labels=torch.from_numpy(data.event_labels).to(device),
        speech_labels=torch.from_numpy(data.speech_labels).to(device),
    )


def is_probe_epoch(epoch: int, config: ExperimentConfig) -> bool:
    """Probe cycles run when the 1-based epoch count is a multiple of tau, never during warm-up.

    ``epoch`` is the 0-based loop index, so with tau=50 cycles land on indices 49, 99, 149 (epochs 50, 100, 150).
    """
    if config.method not in PROBE_SELECTED_METHODS or epoch < config.warmup_epochs:
        return False
    return (epoch + 1) % config.tau == 0


def fit_features(
    config: ExperimentConfig,
    data: FeatureSet,
    out_dir: Path,
    *,
    num_classes: int,
    manifest_id: str,
    config_digest: str = "",
    feature_kind: str = LOGMEL,
    mask_net: MaskNet | None = None,
) -> FitResult:
    """Train one (method, tau, seed) cell on cached features and keep the best checkpoint."""
    seed_everything(config.seed)
    device = get_runtime_settings().device
    method = config.method

    networks = build_networks(
        num_classes, config.model, seed=config.seed, with_speech=method in DISCRIMINATOR_METHODS
    ).to(device)
    state = TrainState(method=method, networks=networks, optimizer=build_optimizer(networks, config))
    schedule = GrlSchedule.from_config(config)
    probe_settings = ProbeSettings.from_experiment(config)

    train = _tensors(data.subset("train"), device)
    validation = _tensors(data.subset("validation"), device)
    sampler = BalancedBatchSampler(
        train.speech_labels.cpu().numpy(),
        config.batch_size,
        np.random.default_rng(derive_seed(config.seed, "batches")),
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    log = TrainingLogWriter(out_dir / TRAINING_LOG)
    best_path = out_dir / CHECKPOINT_DIR / BEST_CHECKPOINT

    def _save(path: Path) -> None:
        save_checkpoint(
            path,
            snapshot(
                networks,
                method=method,
                num_classes=num_classes,
                model_config=config.model,
                manifest_id=manifest_id,
                config_digest=config_digest,
                feature_kind=feature_kind,
                optimizer=state.optimizer,
                mask_net=mask_net,
                epoch=state.epoch,
                lam=state.lam,
                extra={"tau": config.tau, "seed": config.seed},
            ),
        )

    stopped_early = False
    logger.info("Training %s (tau=%s, seed=%s) for up to %s epochs", method, config.tau, config.seed, config.max_epochs)
    for epoch in range(config.max_epochs):
        state.epoch = epoch
        state.lam = schedule(epoch) if method in ADVERSARIAL_METHODS else 0.0

        bundles = []
        for rows in sampler.epoch():
            index = torch.from_numpy(rows).to(device)
            batch = Batch(train.features[index], train.event_labels[index], train.speech_labels[index])
            bundles.append(train_step(batch, state))
        scores = validate(networks, validation.features, validation.event_labels, validation.speech_labels)

        row = EpochLogRow(
            epoch=epoch,
            lam=state.lam,
            loss_cls=float(np.mean([bundle.loss_cls for bundle in bundles])),
            loss_adv=float(np.mean([bundle.loss_adv for bundle in bundles])),
            val_loss_cls=scores.loss_cls,
            val_sed_accuracy=scores.sed_accuracy,
            val_adv_accuracy=scores.adv_accuracy,
        )

        if method in PROBE_SELECTED_METHODS:
            if is_probe_epoch(epoch, config):
                probe, result = retrain_probe(
                    networks.feature_extractor,
                    train.features,
                    train.speech_labels.cpu().numpy(),
                    validation.features,
                    validation.speech_labels.cpu().numpy(),
                    model_config=config.model,
                    settings=probe_settings,
                    seed=derive_seed(config.seed, "probe", epoch),
                    init_state=state.probe_state if config.probe_reinit == "reuse" else None,
                )
                state.probe_state = result.state
                swapped = method in PROBE_METHODS
                if swapped and networks.speech_classifier is not None:
                    swap_probe(networks.speech_classifier, probe.to(device), state.optimizer)
                improved = result.loss > state.best_score
                if improved:
                    state.best_score = result.loss
                    state.best_epoch = epoch
                    state.best_sed_accuracy = scores.sed_accuracy
                    state.cycles_since_improvement = 0
                    _save(best_path)
                else:
                    state.cycles_since_improvement += 1
                cycle = ProbeCycle(
                    epoch=epoch,
                    loss_sp=result.loss,
                    accuracy=result.accuracy,
                    epochs_trained=result.epochs_trained,
                    swapped=swapped,
                    improved=improved,
                )
                state.cycles.append(cycle)
                _save(out_dir / CHECKPOINT_DIR / f"cycle_{epoch:04d}.pt")
                row = row.model_copy(update={"probe_loss_sp": result.loss, "probe_accuracy": result.accuracy})
                logger.info(
                    "Epoch %s probe cycle: L_sp=%.4f acc=%.3f improved=%s lambda=%.4f",
                    epoch,
                    result.loss,
                    result.accuracy,
                    improved,
                    state.lam,
                )
        elif -scores.loss_cls > state.best_score:
            state.best_score = -scores.loss_cls
            state.best_epoch = epoch
            state.best_sed_accuracy = scores.sed_accuracy
            state.cycles_since_improvement = 0
            _save(best_path)
        else:
            state.cycles_since_improvement += 1

        log.append(row)
        logger.info(
            "Epoch %s: lambda=%.4f L_cls=%.4f L_adv=%.4f val_L_cls=%.4f val_sed=%.3f val_adv=%s",
            epoch,
            row.lam,
            row.loss_cls,
            row.loss_adv,
            row.val_loss_cls,
            row.val_sed_accuracy,
            "-" if row.val_adv_accuracy is None else f"{row.val_adv_accuracy:.3f}",
        )
        if state.cycles_since_improvement >= config.patience:
            stopped_early = True
            logger.info("Early stop at epoch %s; best epoch %s", epoch, state.best_epoch)
            break

    if state.best_epoch is None:
        state.best_epoch = state.epoch
        state.best_sed_accuracy = scores.sed_accuracy
        _save(best_path)

    candidate = None
    if method in PROBE_SELECTED_METHODS and state.cycles:
        candidate = TauCandidate(
            tau=config.tau,
            probe_loss_sp=state.best_score,
            sed_accuracy=float(state.best_sed_accuracy or 0.0),
        )
    return FitResult(
        checkpoint_path=best_path,
        log_path=log.path,
        best_epoch=state.best_epoch,
        epochs_run=state.epoch + 1,
        stopped_early=stopped_early,
        cycles=list(state.cycles),
        candidate=candidate,
    )


def fit(
    config: ExperimentConfig,
    manifest: CorpusManifest,
    *,
    cache: FeatureCache,
    out_dir: Path,
    config_digest: str = "",
    feature_kind: str = LOGMEL,
    mask_net: MaskNet | None = None,
) -> FitResult:
    """Train on a featurized corpus; speaker metadata never reaches this function's data."""
    data = load_feature_set(manifest, cache, kind=feature_kind, include_gender=False)
    return fit_features(
        config,
        data,
        out_dir,
        num_classes=config.num_classes or manifest.num_classes,
        manifest_id=manifest.manifest_id,
        config_digest=config_digest,
        feature_kind=feature_kind,
        mask_net=mask_net,
    )
