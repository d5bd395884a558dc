"""Pre-training of the masking front-end on simulated mixtures."""

from __future__ import annotations

from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from rdal.core.errors import CheckpointMismatchError
from rdal.core.errors import MaskTargetsUnavailableError
from rdal.corpus.builder import read_segment
from rdal.features.spectral import stft_magnitude
from rdal.models.masknet import MaskNet
from rdal.models.masknet import build_mask_net
from rdal.schemas.config import FeatureConfig
from rdal.schemas.config import MaskNetConfig
from rdal.schemas.config import Split
from rdal.schemas.corpus import CorpusManifest

logger = logging.getLogger(__name__)

MASK_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MaskPretrainResult:
    mask_net: MaskNet
    validation_mse: float
    identity_mse: float
    epochs_trained: int


def _pairs(manifest: CorpusManifest, split: Split, features: FeatureConfig) -> tuple[torch.Tensor, torch.Tensor]:
    mixtures, targets = [], []
    for record in manifest.split_records(split):
        if record.event_path is None:
            raise MaskTargetsUnavailableError(f"{record.example_id} has no event-only target")
        mixtures.append(stft_magnitude(read_segment(manifest.root / record.mixture_path), features).values)
        targets.append(stft_magnitude(read_segment(manifest.root / record.event_path), features).values)
    return (
        torch.from_numpy(np.stack(mixtures).astype(np.float32)),
        torch.from_numpy(np.stack(targets).astype(np.float32)),
    )


@torch.no_grad()
def masked_mse(mask_net: MaskNet | None, mixtures: torch.Tensor, targets: torch.Tensor, batch_size: int = 16) -> float:
    """Mean squared error of (masked) mixtures against event-only magnitudes; None means no mask."""
    if mask_net is not None:
        mask_net.eval()
    total = 0.0
    for start in range(0, len(mixtures), batch_size):
        mixture = mixtures[start : start + batch_size]
        estimate = mixture if mask_net is None else mask_net(mixture) * mixture
        total += float(F.mse_loss(estimate, targets[start : start + batch_size], reduction="sum"))
    return total / targets.numel()


def pretrain_masknet(manifest: CorpusManifest, config: MaskNetConfig, features: FeatureConfig) -> MaskPretrainResult:
    """Fit the mask on train mixtures, select on validation MSE, and freeze it."""
    if not manifest.has_event_targets:
        raise MaskTargetsUnavailableError(
            "Mask pre-training needs event-only targets; build a simulated corpus with keep_event_targets"
        )
    train_x, train_y = _pairs(manifest, "train", features)
    val_x, val_y = _pairs(manifest, "validation", features)

    mask_net = build_mask_net(config.channels, seed=config.seed)
    optimizer = torch.optim.Adam(mask_net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    identity_mse = masked_mse(None, val_x, val_y)
    best_mse = masked_mse(mask_net, val_x, val_y)
    best_state = {name: tensor.clone() for name, tensor in mask_net.state_dict().items()}
    stale = 0
    epochs_trained = 0
    for epoch in range(config.epochs):
        mask_net.train()
        order = torch.from_numpy(rng.permutation(len(train_x)))
        for start in range(0, len(order), config.batch_size):
            rows = order[start : start + config.batch_size]
            optimizer.zero_grad(set_to_none=True)
            mixture = train_x[rows]
            F.mse_loss(mask_net(mixture) * mixture, train_y[rows]).backward()
            optimizer.step()
        epochs_trained = epoch + 1

        mse = masked_mse(mask_net, val_x, val_y)
        logger.info("Mask epoch %s: validation MSE %.4f (identity %.4f)", epoch, mse, identity_mse)
        if mse < best_mse:
            best_mse = mse
            best_state = {name: tensor.clone() for name, tensor in mask_net.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    mask_net.load_state_dict(best_state)
    return MaskPretrainResult(mask_net.freeze(), best_mse, identity_mse, epochs_trained)


def save_mask_net(path: Path, mask_net: MaskNet) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": MASK_FORMAT_VERSION,
        "channels": list(mask_net.channels),
        "state": mask_net.state_dict(),
    }
    torch.save(payload, path)
    return path


def load_mask_net(path: Path) -> MaskNet:
    if not path.is_file():
        raise CheckpointMismatchError(f"Mask network not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("format_version") != MASK_FORMAT_VERSION:
        raise CheckpointMismatchError(f"Unsupported mask network format in {path}")
    mask_net = build_mask_net(tuple(payload["channels"]), seed=0)  # type: ignore[arg-type]
    mask_net.load_state_dict(payload["state"])
    return mask_net.freeze()
