"""Unit tests for corpus construction and the manifest."""

from __future__ import annotations

from collections import Counter
import csv
from pathlib import Path

import numpy as np
import pytest
import soundfile as sf

from rdal.core.errors import CorpusError
from rdal.corpus.builder import MANIFEST_FILE
from rdal.corpus.builder import MANIFEST_HEADERS
from rdal.corpus.builder import _assign_speech
from rdal.corpus.builder import _split_sizes
from rdal.corpus.builder import _synthetic_slots
from rdal.corpus.builder import build_corpus
from rdal.corpus.builder import check_balance
from rdal.corpus.builder import read_manifest
from rdal.corpus.builder import read_segment
from rdal.corpus.builder import read_wav
from rdal.corpus.segments import SAMPLE_RATE
from rdal.corpus.segments import speech_gain
from rdal.schemas.config import CorpusConfig


def test_split_sizes_follow_fractions():
    sizes = _split_sizes(100, CorpusConfig())

    assert sizes == {"train": 72, "validation": 8, "test": 20}


def test_split_sizes_reject_tiny_classes():
    with pytest.raises(CorpusError):
        _split_sizes(3, CorpusConfig(events_per_class=8))


def test_four_classes_of_hundred_give_half_speech_and_balanced_genders():
    config = CorpusConfig(num_classes=4, events_per_class=100)
    rng = np.random.default_rng(0)
    genders: list[str] = []
    for class_id in range(1, 5):
        slots = _synthetic_slots(config, class_id, rng)
        assignment = _assign_speech(slots, class_id, rng)
        genders.extend(gender for gender in assignment.values() if gender is not None)

    assert len(genders) == 200
    assert Counter(genders) == {"male": 100, "female": 100}


def test_tiny_corpus_counts(tiny_corpus):
    assert len(tiny_corpus.records) == 40
    assert tiny_corpus.per_class_counts() == {
        "dog_barking": {"train": 14, "validation": 2, "test": 4},
        "glass_breaking": {"train": 14, "validation": 2, "test": 4},
    }
    assert tiny_corpus.per_split_speech_counts() == {"train": 14, "validation": 2, "test": 4}
    assert check_balance(tiny_corpus) == []


def test_gender_only_on_speech_rows(tiny_corpus):
    for record in tiny_corpus.records:
        assert (record.speaker_gender is not None) == record.has_speech
    test_genders = {record.speaker_gender for record in tiny_corpus.split_records("test") if record.has_speech}
    assert test_genders == {"male", "female"}


def test_training_view_drops_speaker_metadata(tiny_corpus):
    view = tiny_corpus.training_records()[0]

    assert not hasattr(view, "speaker_gender")
    assert not hasattr(view, "speaker_id")


def test_test_speakers_are_disjoint_from_development(tiny_corpus):
    development = {r.speaker_id for r in tiny_corpus.records if r.has_speech and r.split != "test"}
    test = {r.speaker_id for r in tiny_corpus.records if r.has_speech and r.split == "test"}

    assert development and test
    assert development.isdisjoint(test)


def test_mixture_is_event_plus_attenuated_speech(tiny_corpus):
    silent = next(r for r in tiny_corpus.records if not r.has_speech)
    voiced = next(r for r in tiny_corpus.records if r.has_speech)

    np.testing.assert_array_equal(
        read_segment(tiny_corpus.root / silent.mixture_path).samples,
        read_segment(tiny_corpus.root / silent.event_path).samples,
    )
    residual = (
        read_segment(tiny_corpus.root / voiced.mixture_path).samples
        - read_segment(tiny_corpus.root / voiced.event_path).samples
    )
    assert np.std(residual) == pytest.approx(speech_gain(5.0), rel=1e-6)


def test_manifest_round_trip(tiny_corpus):
    reloaded = read_manifest(tiny_corpus.root)

    assert reloaded.manifest_id == tiny_corpus.manifest_id
    assert reloaded.records == tiny_corpus.records
    with (tiny_corpus.root / MANIFEST_FILE).open(newline="", encoding="utf-8") as handle:
        assert next(csv.reader(handle)) == MANIFEST_HEADERS


def test_read_manifest_requires_files(tmp_path):
    with pytest.raises(CorpusError):
        read_manifest(tmp_path)


def test_build_is_deterministic(tmp_path):
    config = CorpusConfig(num_classes=2, events_per_class=8, seed=1)
    first = build_corpus(config, tmp_path / "a")
    second = build_corpus(config, tmp_path / "b")

    assert first.manifest_id == second.manifest_id


def test_read_wav_downmixes_stereo(tmp_path):
    left = np.linspace(-0.5, 0.5, 100)
    path = tmp_path / "stereo.wav"
    sf.write(path, np.stack([left, -left], axis=1), SAMPLE_RATE, subtype="DOUBLE")

    np.testing.assert_allclose(read_wav(path), np.zeros(100), atol=1e-12)


def test_read_wav_rejects_other_sample_rates(tmp_path):
    path = tmp_path / "slow.wav"
    sf.write(path, np.zeros(100), 16000)

    with pytest.raises(CorpusError):
        read_wav(path)


def _write_recording(path: Path, frequency: float, seed: int) -> None:
    rng = np.random.default_rng(seed)
    t = np.arange(int(2.5 * SAMPLE_RATE)) / SAMPLE_RATE
    samples = 0.3 * np.sin(2 * np.pi * frequency * t) + 0.05 * rng.standard_normal(t.shape[0])
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(path, samples, SAMPLE_RATE, subtype="DOUBLE")


def test_recorded_mode_builds_balanced_corpus(tmp_path):
    events = tmp_path / "events"
    speech = tmp_path / "speech"
    for class_index, name in enumerate(["bark", "bell"]):
        for group, count in (("development", 3), ("test", 2)):
            for i in range(count):
                _write_recording(events / group / name / f"{i}.wav", 500.0 * (class_index + 1), 10 * class_index + i)

    rows = []
    for group in ("development", "test"):
        for gender, f0 in (("male", 120.0), ("female", 210.0)):
            for i in range(2):
                relative = f"{group}/{gender}{i}.wav"
                _write_recording(speech / relative, f0 * (1 + 0.05 * i), 100 + len(rows))
                rows.append({"path": relative, "gender": gender, "speaker_id": f"{group[:3]}-{gender}{i}"})
    speakers = tmp_path / "speakers.csv"
    with speakers.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["path", "gender", "speaker_id"])
        writer.writeheader()
        writer.writerows(rows)

    config = CorpusConfig(
        mode="real",
        class_names=["bark", "bell"],
        events_dir=events,
        speech_dir=speech,
        speakers_file=speakers,
    )
    manifest = build_corpus(config, tmp_path / "corpus")

    assert manifest.per_class_counts() == {
        "bark": {"train": 5, "validation": 1, "test": 4},
        "bell": {"train": 5, "validation": 1, "test": 4},
    }
    assert manifest.per_split_speech_counts() == {"train": 4, "validation": 0, "test": 4}
    assert check_balance(manifest) == []


def test_recorded_mode_requires_class_directories(tmp_path):
    speakers = tmp_path / "speakers.csv"
    speakers.write_text("path,gender,speaker_id\ndevelopment/a.wav,male,a\n", encoding="utf-8")
    _write_recording(tmp_path / "speech" / "development" / "a.wav", 120.0, 0)
    config = CorpusConfig(
        mode="real",
        class_names=["missing", "other"],
        events_dir=tmp_path / "events",
        speech_dir=tmp_path / "speech",
        speakers_file=speakers,
    )

    with pytest.raises(CorpusError):
        build_corpus(config, tmp_path / "corpus")
