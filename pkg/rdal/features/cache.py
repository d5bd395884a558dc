"""On-disk feature cache and the array view used by training and evaluation."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from rdal.core.config import get_runtime_settings
from rdal.corpus.builder import read_segment
from rdal.features.spectral import MagnitudeSpectrogram
from rdal.features.spectral import log_mel
from rdal.features.spectral import stft_magnitude
from rdal.schemas.config import FeatureConfig
from rdal.schemas.config import Split
from rdal.schemas.corpus import CorpusManifest

logger = logging.getLogger(__name__)

LOGMEL = "logmel"

SpectrogramTransform = Callable[[MagnitudeSpectrogram], MagnitudeSpectrogram]


class FeatureCache:
    """``.npy`` matrices keyed by (manifest id, kind, example id)."""

    def __init__(self, manifest_id: str, root: Path | None = None) -> None:
        self.root = (root or get_runtime_settings().cache_dir) / manifest_id
        self.manifest_id = manifest_id

    def path(self, kind: str, example_id: str) -> Path:
        return self.root / kind / f"{example_id}.npy"

    def has(self, kind: str, example_id: str) -> bool:
        return self.path(kind, example_id).is_file()

    def store(self, kind: str, example_id: str, values: NDArray) -> None:
        path = self.path(kind, example_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, values, allow_pickle=False)

    def load(self, kind: str, example_id: str) -> NDArray:
        return np.load(self.path(kind, example_id), allow_pickle=False)


def featurize_manifest(
    manifest: CorpusManifest,
    cache: FeatureCache,
    config: FeatureConfig,
    *,
    kind: str = LOGMEL,
    transform: SpectrogramTransform | None = None,
) -> int:
    """Compute missing log-mel matrices; ``transform`` runs on the magnitude STFT first."""
    computed = 0
    for record in manifest.records:
        if cache.has(kind, record.example_id):
            continue
        spectrogram = stft_magnitude(read_segment(manifest.root / record.mixture_path), config)
        if transform is not None:
            spectrogram = transform(spectrogram)
        cache.store(kind, record.example_id, log_mel(spectrogram, config).values.astype(np.float32))
        computed += 1
    logger.info("Featurized %s/%s examples into %s/%s", computed, len(manifest.records), cache.root, kind)
    return computed


@dataclass(frozen=True)
class FeatureSet:
    """Stacked features with labels; ``genders`` is only filled for evaluation."""

    example_ids: tuple[str, ...]
    features: NDArray[np.float32]
    event_labels: NDArray[np.int64]
    speech_labels: NDArray[np.float32]
    splits: NDArray[np.str_]
    genders: NDArray[np.str_] | None = None

    def __len__(self) -> int:
        return len(self.example_ids)

    def subset(self, split: Split) -> FeatureSet:
        mask = self.splits == split
        return self.select(mask)

    def select(self, mask: NDArray[np.bool_]) -> FeatureSet:
        return FeatureSet(
            example_ids=tuple(example_id for example_id, keep in zip(self.example_ids, mask) if keep),
            features=self.features[mask],
            event_labels=self.event_labels[mask],
            speech_labels=self.speech_labels[mask],
            splits=self.splits[mask],
            genders=None if self.genders is None else self.genders[mask],
        )


def load_feature_set(
    manifest: CorpusManifest,
    cache: FeatureCache,
    *,
    kind: str = LOGMEL,
    include_gender: bool = False,
) -> FeatureSet:
    """Stack cached features; event labels become 0-based class indices."""
    records = manifest.records if include_gender else manifest.training_records()
    features = np.stack([cache.load(kind, record.example_id) for record in records]).astype(np.float32)
    genders = None
    if include_gender:
        genders = np.array([record.speaker_gender or "" for record in manifest.records])
    return FeatureSet(
        example_ids=tuple(record.example_id for record in records),
        features=features,
        event_labels=np.array([record.event_class - 1 for record in records], dtype=np.int64),
        speech_labels=np.array([float(record.has_speech) for record in records], dtype=np.float32),
        splits=np.array([record.split for record in records]),
        genders=genders,
    )
