"""Versioned checkpoint container for trained networks."""

from __future__ import annotations

from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
import hashlib
import json
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel
import torch

from rdal.core.errors import CheckpointMismatchError
from rdal.models.masknet import MaskNet
from rdal.models.masknet import build_mask_net
from rdal.models.networks import Networks
from rdal.models.networks import build_networks
from rdal.schemas.config import ModelConfig

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def config_hash(config: BaseModel) -> str:
    """Stable sha256 of a pydantic config."""
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def file_checksum(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class ModelCheckpoint:
    """Named parameter tensors plus the metadata needed to rebuild and verify them."""

    method: str
    num_classes: int
    model_config: dict[str, Any]
    manifest_id: str
    config_hash: str
    feature_kind: str
    feature_extractor: dict[str, torch.Tensor]
    event_classifier: dict[str, torch.Tensor]
    speech_classifier: dict[str, torch.Tensor] | None = None
    mask_net: dict[str, torch.Tensor] | None = None
    mask_channels: list[int] | None = None
    optimizer: dict[str, Any] | None = None
    epoch: int = 0
    lam: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def model(self) -> ModelConfig:
        return ModelConfig.model_validate(self.model_config)


def snapshot(
    networks: Networks,
    *,
    method: str,
    num_classes: int,
    model_config: ModelConfig,
    manifest_id: str,
    config_digest: str,
    feature_kind: str,
    optimizer: torch.optim.Optimizer | None = None,
    mask_net: MaskNet | None = None,
    epoch: int = 0,
    lam: float = 0.0,
    extra: dict[str, Any] | None = None,
) -> ModelCheckpoint:
    """Copy the current parameters into a checkpoint."""

    def _copy(module: torch.nn.Module) -> dict[str, torch.Tensor]:
        return {name: tensor.detach().clone() for name, tensor in module.state_dict().items()}

    return ModelCheckpoint(
        method=method,
        num_classes=num_classes,
        model_config=model_config.model_dump(mode="json"),
        manifest_id=manifest_id,
        config_hash=config_digest,
        feature_kind=feature_kind,
        feature_extractor=_copy(networks.feature_extractor),
        event_classifier=_copy(networks.event_classifier),
        speech_classifier=None if networks.speech_classifier is None else _copy(networks.speech_classifier),
        mask_net=None if mask_net is None else _copy(mask_net),
        mask_channels=None if mask_net is None else list(mask_net.channels),
        optimizer=None if optimizer is None else optimizer.state_dict(),
        epoch=epoch,
        lam=lam,
        extra=dict(extra or {}),
    )


def save_checkpoint(path: Path, checkpoint: ModelCheckpoint) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format_version": FORMAT_VERSION, **asdict(checkpoint)}
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp_path)
    tmp_path.replace(path)
    return path


def load_checkpoint(
    path: Path,
    *,
    manifest_id: str | None = None,
    config_digest: str | None = None,
) -> ModelCheckpoint:
    """Load a checkpoint, rejecting other format versions, manifests or configs."""
    if not path.is_file():
        raise CheckpointMismatchError(f"Checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.pop("format_version", None)
    if version != FORMAT_VERSION:
        raise CheckpointMismatchError(f"Unsupported checkpoint format {version!r} in {path}")
    checkpoint = ModelCheckpoint(**payload)
    if manifest_id is not None and checkpoint.manifest_id != manifest_id:
        raise CheckpointMismatchError(
            f"Checkpoint {path} was trained on manifest {checkpoint.manifest_id}, not {manifest_id}"
        )
    if config_digest is not None and checkpoint.config_hash != config_digest:
        raise CheckpointMismatchError(f"Checkpoint {path} was trained with a different configuration")
    return checkpoint


def restore_networks(checkpoint: ModelCheckpoint) -> Networks:
    """Rebuild F, C and (when stored) D from a checkpoint."""
    networks = build_networks(
        checkpoint.num_classes,
        checkpoint.model(),
        seed=0,
        with_speech=checkpoint.speech_classifier is not None,
    )
    networks.feature_extractor.load_state_dict(checkpoint.feature_extractor)
    networks.event_classifier.load_state_dict(checkpoint.event_classifier)
    if networks.speech_classifier is not None and checkpoint.speech_classifier is not None:
        networks.speech_classifier.load_state_dict(checkpoint.speech_classifier)
    networks.eval()
    return networks


def restore_mask_net(checkpoint: ModelCheckpoint) -> MaskNet | None:
    if checkpoint.mask_net is None or checkpoint.mask_channels is None:
        return None
    mask_net = build_mask_net(tuple(checkpoint.mask_channels), seed=0)  # type: ignore[arg-type]
    mask_net.load_state_dict(checkpoint.mask_net)
    return mask_net.freeze()
