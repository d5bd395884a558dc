"""Corpus construction: balanced speech/non-speech mixtures plus a CSV manifest."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable
from collections.abc import Iterator
import csv
from dataclasses import dataclass
import hashlib
import json
import logging
from pathlib import Path

import numpy as np
import soundfile as sf

from rdal.core.errors import CorpusError
from rdal.core.errors import DegenerateInputError
from rdal.core.reproducibility import derive_seed
from rdal.corpus.segments import SAMPLE_RATE
from rdal.corpus.segments import AudioSegment
from rdal.corpus.segments import extract_energetic_segments
from rdal.corpus.segments import mix
from rdal.corpus.synthetic import Gender
from rdal.corpus.synthetic import generate_synthetic_event
from rdal.corpus.synthetic import generate_synthetic_speech
from rdal.schemas.config import CorpusConfig
from rdal.schemas.config import Split
from rdal.schemas.corpus import CorpusManifest
from rdal.schemas.corpus import MixtureRecord
from rdal.schemas.error import ErrorDetail

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.csv"
SUMMARY_FILE = "manifest.json"
SEGMENT_DIR = "segments"
MANIFEST_HEADERS = [
    "example_id",
    "split",
    "event_class",
    "class_name",
    "has_speech",
    "speaker_gender",
    "speaker_id",
    "mixture_path",
    "event_path",
    "source",
]
GENDERS: tuple[Gender, Gender] = ("male", "female")


@dataclass(frozen=True)
class _EventSlot:
    class_id: int
    index: int
    split: Split
    load: Callable[[], AudioSegment]
    source: str


@dataclass(frozen=True)
class _SpeechDraw:
    speaker_id: str
    segment: AudioSegment
    source: str


def read_wav(path: Path) -> np.ndarray:
    """Read a 44.1 kHz WAV as float64 mono; multi-channel input is averaged."""
    try:
        samples, sample_rate = sf.read(path, dtype="float64", always_2d=False)
    except RuntimeError as exc:
        raise CorpusError(f"Cannot read audio file {path}: {exc}") from exc
    if sample_rate != SAMPLE_RATE:
        raise CorpusError(f"{path} has sample rate {sample_rate}; expected {SAMPLE_RATE} (resample beforehand)")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples


def write_segment(path: Path, segment: AudioSegment) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(path, segment.samples, segment.sample_rate, subtype="DOUBLE")


def read_segment(path: Path) -> AudioSegment:
    samples, sample_rate = sf.read(path, dtype="float64", always_2d=False)
    return AudioSegment(samples, sample_rate)


def _split_sizes(total: int, config: CorpusConfig) -> dict[Split, int]:
    n_test = max(1, round(total * config.test_fraction))
    n_dev = total - n_test
    n_validation = max(1, round(n_dev * config.validation_fraction))
    n_train = n_dev - n_validation
    if n_train < 2:
        raise CorpusError(f"{total} segments per class are too few for a train/validation/test split")
    return {"train": n_train, "validation": n_validation, "test": n_test}


def _assign_speech(
    slots: list[_EventSlot],
    class_id: int,
    rng: np.random.Generator,
) -> dict[int, Gender | None]:
    """Half of every split gets speech; genders alternate within the class."""
    assignment: dict[int, Gender | None] = {slot.index: None for slot in slots}
    toggle = class_id % 2
    for split in ("train", "validation", "test"):
        members = [slot.index for slot in slots if slot.split == split]
        chosen = sorted(rng.permutation(members)[: len(members) // 2].tolist())
        for index in chosen:
            assignment[index] = GENDERS[toggle]
            toggle ^= 1
    return assignment


class _SyntheticSpeechPool:
    def __init__(self, config: CorpusConfig) -> None:
        self._seed = config.seed
        self._speakers = {
            "development": config.dev_speakers_per_gender,
            "test": config.test_speakers_per_gender,
        }
        self._counters: dict[tuple[str, str], int] = defaultdict(int)

    def draw(self, group: str, gender: Gender) -> _SpeechDraw:
        count = self._counters[(group, gender)]
        self._counters[(group, gender)] += 1
        speaker = count % self._speakers[group]
        speaker_seed = derive_seed(self._seed, "speaker", group, gender, speaker)
        utterance_seed = derive_seed(self._seed, "utterance", group, gender, count)
        segment = generate_synthetic_speech(gender, utterance_seed, speaker_seed=speaker_seed)
        speaker_id = f"{group[:3]}-{gender[0]}{speaker:02d}"
        return _SpeechDraw(speaker_id=speaker_id, segment=segment, source=f"synthetic:{utterance_seed}")


class _RecordedSpeechPool:
    def __init__(self, config: CorpusConfig, rng: np.random.Generator) -> None:
        assert config.speech_dir is not None and config.speakers_file is not None
        self._pools: dict[tuple[str, str], list[_SpeechDraw]] = defaultdict(list)
        speech_dir = config.speech_dir

        with config.speakers_file.open(newline="", encoding="utf-8") as handle:
            rows = [row for row in csv.DictReader(handle) if row.get("path")]
        if not rows:
            raise CorpusError(f"No speaker rows found in {config.speakers_file}")

        for row in sorted(rows, key=lambda item: item["path"]):
            relative = Path(row["path"])
            group = relative.parts[0]
            gender = (row.get("gender") or "").strip().lower()
            if group not in ("development", "test"):
                raise CorpusError(f"speech path {relative} must start with development/ or test/")
            if gender not in GENDERS:
                raise CorpusError(f"speech path {relative} has unknown gender {row.get('gender')!r}")
            try:
                segments = extract_energetic_segments(
                    read_wav(speech_dir / relative),
                    config.speech_segments_per_recording,
                    hop_seconds=config.search_hop_seconds,
                )
            except DegenerateInputError:
                logger.warning("Skipping silent speech recording %s", relative)
                continue
            for segment in segments:
                self._pools[(group, gender)].append(
                    _SpeechDraw(speaker_id=str(row.get("speaker_id", "")), segment=segment, source=str(relative))
                )

        for key, pool in self._pools.items():
            order = rng.permutation(len(pool))
            self._pools[key] = [pool[i] for i in order]

    def draw(self, group: str, gender: Gender) -> _SpeechDraw:
        pool = self._pools.get((group, gender))
        if not pool:
            raise CorpusError(f"Not enough {gender} speech segments in the {group} pool")
        return pool.pop()


def _synthetic_slots(config: CorpusConfig, class_id: int, rng: np.random.Generator) -> list[_EventSlot]:
    total = config.events_per_class
    sizes = _split_sizes(total, config)
    positions = np.argsort(rng.permutation(total))
    splits: list[Split] = ["train"] * sizes["train"] + ["validation"] * sizes["validation"] + ["test"] * sizes["test"]

    slots: list[_EventSlot] = []
    for index in range(total):
        event_seed = derive_seed(config.seed, "event", class_id, index)
        slots.append(
            _EventSlot(
                class_id=class_id,
                index=index,
                split=splits[int(positions[index])],
                load=lambda class_id=class_id, event_seed=event_seed: generate_synthetic_event(class_id, event_seed),
                source=f"synthetic:{event_seed}",
            )
        )
    return slots


def _recorded_slots(
    config: CorpusConfig,
    class_id: int,
    class_name: str,
    rng: np.random.Generator,
) -> list[_EventSlot]:
    assert config.events_dir is not None
    segments: dict[str, list[tuple[AudioSegment, str]]] = {}
    for group in ("development", "test"):
        class_dir = config.events_dir / group / class_name
        if not class_dir.is_dir():
            raise CorpusError(f"Missing class directory {class_dir}")
        collected: list[tuple[AudioSegment, str]] = []
        for path in sorted(class_dir.glob("*.wav")):
            try:
                extracted = extract_energetic_segments(
                    read_wav(path),
                    config.segments_per_recording,
                    hop_seconds=config.search_hop_seconds,
                )
            except DegenerateInputError:
                logger.warning("Skipping silent event recording %s", path)
                continue
            source = path.relative_to(config.events_dir)
            collected.extend((segment, f"{source}#{i}") for i, segment in enumerate(extracted))
        segments[group] = collected

    development = segments["development"]
    if len(development) < 3 or not segments["test"]:
        raise CorpusError(f"Class {class_name} has too few usable segments")

    n_validation = max(1, round(len(development) * config.validation_fraction))
    order = rng.permutation(len(development)).tolist()
    validation_positions = set(order[:n_validation])

    slots: list[_EventSlot] = []
    index = 0
    for position, (segment, source) in enumerate(development):
        split: Split = "validation" if position in validation_positions else "train"
        slots.append(_EventSlot(class_id, index, split, lambda segment=segment: segment, source))
        index += 1
    for segment, source in segments["test"]:
        slots.append(_EventSlot(class_id, index, "test", lambda segment=segment: segment, source))
        index += 1
    return slots


def _iter_records(
    config: CorpusConfig,
    root: Path,
    class_names: list[str],
) -> Iterator[MixtureRecord]:
    rng = np.random.default_rng([config.seed, 1])
    speech_pool = (
        _SyntheticSpeechPool(config)
        if config.mode == "synthetic"
        else _RecordedSpeechPool(config, np.random.default_rng([config.seed, 2]))
    )

    for class_id, class_name in enumerate(class_names, start=1):
        if config.mode == "synthetic":
            slots = _synthetic_slots(config, class_id, rng)
        else:
            slots = _recorded_slots(config, class_id, class_name, rng)
        genders = _assign_speech(slots, class_id, rng)

        for slot in slots:
            example_id = f"c{class_id:02d}-{slot.index:05d}"
            event = slot.load()
            gender = genders[slot.index]
            speaker_id: str | None = None
            speech = None
            if gender is not None:
                group = "test" if slot.split == "test" else "development"
                draw = speech_pool.draw(group, gender)
                speaker_id = draw.speaker_id
                speech = draw.segment

            mixture = mix(event, speech, attenuation_db=config.attenuation_db)
            mixture_path = f"{SEGMENT_DIR}/{example_id}.mix.wav"
            write_segment(root / mixture_path, mixture)
            event_path: str | None = None
            if config.keep_event_targets:
                event_path = f"{SEGMENT_DIR}/{example_id}.event.wav"
                write_segment(root / event_path, event)

            yield MixtureRecord(
                example_id=example_id,
                split=slot.split,
                event_class=class_id,
                class_name=class_name,
                has_speech=gender is not None,
                speaker_gender=gender,
                speaker_id=speaker_id,
                mixture_path=mixture_path,
                event_path=event_path,
                source=slot.source,
            )


def _record_row(record: MixtureRecord) -> dict[str, str]:
    return {
        "example_id": record.example_id,
        "split": record.split,
        "event_class": str(record.event_class),
        "class_name": record.class_name,
        "has_speech": "true" if record.has_speech else "false",
        "speaker_gender": record.speaker_gender or "",
        "speaker_id": record.speaker_id or "",
        "mixture_path": record.mixture_path,
        "event_path": record.event_path or "",
        "source": record.source,
    }


def _manifest_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def write_manifest(root: Path, class_names: list[str], records: list[MixtureRecord]) -> CorpusManifest:
    """Write manifest.csv and its JSON summary; return the loaded manifest."""
    root.mkdir(parents=True, exist_ok=True)
    manifest_path = root / MANIFEST_FILE
    with manifest_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=MANIFEST_HEADERS)
        writer.writeheader()
        for record in records:
            writer.writerow(_record_row(record))

    manifest = CorpusManifest(
        manifest_id=_manifest_digest(manifest_path),
        root=root,
        class_names=list(class_names),
        records=records,
    )
    summary = {
        "manifest_id": manifest.manifest_id,
        "class_names": manifest.class_names,
        "examples": len(records),
        "per_class_counts": manifest.per_class_counts(),
        "per_split_speech_counts": manifest.per_split_speech_counts(),
        "per_split_gender_counts": manifest.per_split_gender_counts(),
    }
    with (root / SUMMARY_FILE).open("w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest


def read_manifest(root: Path) -> CorpusManifest:
    """Load a manifest previously written by :func:`write_manifest`."""
    manifest_path = root / MANIFEST_FILE
    summary_path = root / SUMMARY_FILE
    if not manifest_path.is_file() or not summary_path.is_file():
        raise CorpusError(f"No corpus manifest under {root}")

    with summary_path.open(encoding="utf-8") as handle:
        summary = json.load(handle)
    with manifest_path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != MANIFEST_HEADERS:
            raise CorpusError(f"{manifest_path} has unexpected header {reader.fieldnames}")
        records = [
            MixtureRecord(
                example_id=row["example_id"],
                split=row["split"],
                event_class=int(row["event_class"]),
                class_name=row["class_name"],
                has_speech=row["has_speech"] == "true",
                speaker_gender=row["speaker_gender"] or None,
                speaker_id=row["speaker_id"] or None,
                mixture_path=row["mixture_path"],
                event_path=row["event_path"] or None,
                source=row["source"],
            )
            for row in reader
        ]

    return CorpusManifest(
        manifest_id=_manifest_digest(manifest_path),
        root=root,
        class_names=list(summary["class_names"]),
        records=records,
    )


def check_balance(manifest: CorpusManifest) -> list[str]:
    """Return balance violations; an empty list means the manifest is valid."""
    issues: list[str] = []
    groups: dict[tuple[str, int], list[MixtureRecord]] = defaultdict(list)
    for record in manifest.records:
        groups[(record.split, record.event_class)].append(record)

    for (split, event_class), members in sorted(groups.items()):
        speech = sum(record.has_speech for record in members)
        if abs(2 * speech - len(members)) > 1:
            issues.append(f"{split}/class {event_class}: {speech} speech of {len(members)}")

    for event_class in range(1, manifest.num_classes + 1):
        genders = [
            record.speaker_gender
            for record in manifest.records
            if record.event_class == event_class and record.speaker_gender is not None
        ]
        if abs(genders.count("male") - genders.count("female")) > 1:
            issues.append(f"class {event_class}: gender imbalance {genders.count('male')}/{genders.count('female')}")
    return issues


def build_corpus(config: CorpusConfig, root: Path) -> CorpusManifest:
    """Build the mixture corpus under ``root`` and write its manifest."""
    class_names = config.resolved_class_names()
    logger.info("Building %s corpus with %s classes under %s", config.mode, len(class_names), root)

    records = list(_iter_records(config, root, class_names))
    manifest = write_manifest(root, class_names, records)

    issues = check_balance(manifest)
    if issues:
        raise CorpusError(
            "Corpus violates the speech balance rules",
            details=[ErrorDetail(field="balance", issue=issue) for issue in issues],
        )
    logger.info(
        "Corpus %s written: %s examples, speech per split %s",
        manifest.manifest_id,
        len(records),
        manifest.per_split_speech_counts(),
    )
    return manifest
