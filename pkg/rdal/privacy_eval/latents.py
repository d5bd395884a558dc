"""Latent vectors of a frozen feature extractor, with labels for attackers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
import torch

from rdal.core.config import get_runtime_settings
from rdal.core.errors import CheckpointMismatchError
from rdal.features.cache import FeatureCache
from rdal.features.cache import load_feature_set
from rdal.models.checkpoint import ModelCheckpoint
from rdal.models.checkpoint import restore_networks
from rdal.models.networks import encode
from rdal.schemas.config import Split
from rdal.schemas.corpus import CorpusManifest


@dataclass(frozen=True)
class LatentDataset:
    """One latent per manifest example; ``genders`` is empty for non-speech rows."""

    example_ids: NDArray[np.str_]
    latents: NDArray[np.float32]
    event_labels: NDArray[np.int64]
    speech_labels: NDArray[np.float32]
    genders: NDArray[np.str_]
    splits: NDArray[np.str_]

    def __len__(self) -> int:
        return int(self.latents.shape[0])

    def select(self, mask: NDArray[np.bool_]) -> LatentDataset:
        return LatentDataset(
            example_ids=self.example_ids[mask],
            latents=self.latents[mask],
            event_labels=self.event_labels[mask],
            speech_labels=self.speech_labels[mask],
            genders=self.genders[mask],
            splits=self.splits[mask],
        )

    def subset(self, split: Split) -> LatentDataset:
        return self.select(self.splits == split)

    def speech_only(self) -> LatentDataset:
        return self.select(self.speech_labels > 0.5)

    def save(self, path: Path) -> Path:
        """Lossless ``.npz`` export, e.g. for external embedding tools."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as handle:
            np.savez(
                handle,
                example_ids=self.example_ids,
                latents=self.latents,
                event_labels=self.event_labels,
                speech_labels=self.speech_labels,
                genders=self.genders,
                splits=self.splits,
            )
        return path

    @classmethod
    def load(cls, path: Path) -> LatentDataset:
        with np.load(path, allow_pickle=False) as payload:
            return cls(**{name: payload[name] for name in payload.files})


def extract_latents(checkpoint: ModelCheckpoint, manifest: CorpusManifest, cache: FeatureCache) -> LatentDataset:
    """Encode every manifest example with the checkpoint's frozen extractor."""
    if checkpoint.manifest_id != manifest.manifest_id:
        raise CheckpointMismatchError(
            f"Checkpoint belongs to manifest {checkpoint.manifest_id}, not {manifest.manifest_id}"
        )
    data = load_feature_set(manifest, cache, kind=checkpoint.feature_kind, include_gender=True)
    networks = restore_networks(checkpoint)
    device = get_runtime_settings().device
    networks.to(device)
    latents = encode(networks.feature_extractor, torch.from_numpy(data.features).to(device)).cpu().numpy()
    assert data.genders is not None
    return LatentDataset(
        example_ids=np.array(data.example_ids),
        latents=latents.astype(np.float32),
        event_labels=data.event_labels,
        speech_labels=data.speech_labels,
        genders=data.genders,
        splits=data.splits,
    )
