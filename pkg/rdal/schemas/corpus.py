"""Pydantic schemas for corpus manifests."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import model_validator

from rdal.schemas.config import Split

Gender = Literal["male", "female"]
SPLITS: tuple[Split, ...] = ("train", "validation", "test")


class TrainingRecord(BaseModel):
    """Manifest row as seen by training code: no speaker metadata."""

    model_config = ConfigDict(frozen=True)

    example_id: str
    split: Split
    event_class: int
    has_speech: bool


class MixtureRecord(TrainingRecord):
    """One simulated one-second mixture."""

    class_name: str
    speaker_gender: Gender | None = None
    speaker_id: str | None = None
    mixture_path: str
    event_path: str | None = None
    source: str = ""

    @model_validator(mode="after")
    def _gender_iff_speech(self) -> MixtureRecord:
        if self.has_speech and self.speaker_gender is None:
            raise ValueError(f"{self.example_id}: speech mixture without speaker_gender")
        if not self.has_speech and self.speaker_gender is not None:
            raise ValueError(f"{self.example_id}: speaker_gender set on a non-speech mixture")
        if self.event_class < 1:
            raise ValueError(f"{self.example_id}: event_class must be >= 1")
        return self

    def training_view(self) -> TrainingRecord:
        """Drop speaker metadata before handing the row to training code."""
        return TrainingRecord(
            example_id=self.example_id,
            split=self.split,
            event_class=self.event_class,
            has_speech=self.has_speech,
        )


class CorpusManifest(BaseModel):
    """Manifest of a built corpus; paths are relative to ``root``."""

    model_config = ConfigDict(frozen=True)

    manifest_id: str
    root: Path
    class_names: list[str]
    records: list[MixtureRecord]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def has_event_targets(self) -> bool:
        return bool(self.records) and all(record.event_path for record in self.records)

    def split_records(self, split: Split) -> list[MixtureRecord]:
        return [record for record in self.records if record.split == split]

    def training_records(self) -> list[TrainingRecord]:
        """Rows without gender, for every training-side consumer."""
        return [record.training_view() for record in self.records]

    def per_class_counts(self) -> dict[str, dict[str, int]]:
        """Event mixtures per class and split."""
        counts: dict[str, dict[str, int]] = {name: {split: 0 for split in SPLITS} for name in self.class_names}
        for record in self.records:
            counts[record.class_name][record.split] += 1
        return counts

    def per_split_speech_counts(self) -> dict[str, int]:
        counter = Counter(record.split for record in self.records if record.has_speech)
        return {split: counter.get(split, 0) for split in SPLITS}

    def per_split_gender_counts(self) -> dict[str, dict[str, int]]:
        counts = {split: {"male": 0, "female": 0} for split in SPLITS}
        for record in self.records:
            if record.speaker_gender is not None:
                counts[record.split][record.speaker_gender] += 1
        return counts
