"""Unit tests for the STFT/log-mel front-end and the feature cache."""

from __future__ import annotations

import numpy as np
import pytest

from rdal.core.errors import FeatureError
from rdal.core.errors import ShapeMismatchError
from rdal.corpus.segments import SAMPLE_RATE
from rdal.corpus.segments import SEGMENT_SAMPLES
from rdal.corpus.segments import AudioSegment
from rdal.features.cache import FeatureCache
from rdal.features.cache import featurize_manifest
from rdal.features.cache import load_feature_set
from rdal.features.spectral import MagnitudeSpectrogram
from rdal.features.spectral import expected_bins
from rdal.features.spectral import expected_frames
from rdal.features.spectral import featurize
from rdal.features.spectral import log_mel
from rdal.features.spectral import stft_magnitude
from rdal.schemas.config import FeatureConfig


def _sine(frequency: float, amplitude: float = 1.0) -> AudioSegment:
    t = np.arange(SEGMENT_SAMPLES) / SAMPLE_RATE
    return AudioSegment(amplitude * np.sin(2 * np.pi * frequency * t))


def test_stft_shape():
    spec = stft_magnitude(_sine(440.0))

    assert spec.shape == (706, 101)
    assert (expected_bins(), expected_frames()) == (706, 101)


def test_zero_segment_gives_zero_magnitude_and_log_floor():
    spec = stft_magnitude(AudioSegment(np.zeros(SEGMENT_SAMPLES)))
    feature = log_mel(spec)

    assert not np.any(spec.values)
    np.testing.assert_allclose(feature.values, -100.0)


def test_one_kilohertz_tone_peaks_at_bin_32():
    spec = stft_magnitude(_sine(1000.0))

    assert int(np.argmax(spec.values[:, 50])) == 32


def test_log_mel_shape():
    assert featurize(_sine(440.0)).shape == (64, 101)


def test_ten_times_louder_adds_twenty_decibels():
    rng = np.random.default_rng(0)
    samples = rng.standard_normal(SEGMENT_SAMPLES)
    quiet = featurize(AudioSegment(samples)).values
    loud = featurize(AudioSegment(10.0 * samples)).values

    assert np.all(quiet > -90.0)
    np.testing.assert_allclose(loud - quiet, 20.0, atol=1e-6)


def test_magnitude_input_mode_scales_by_ten_decibels():
    rng = np.random.default_rng(1)
    samples = rng.standard_normal(SEGMENT_SAMPLES)
    config = FeatureConfig(mel_input="magnitude")
    quiet = featurize(AudioSegment(samples), config).values
    loud = featurize(AudioSegment(10.0 * samples), config).values

    np.testing.assert_allclose(loud - quiet, 10.0, atol=1e-6)


def test_short_segment_is_rejected():
    with pytest.raises(ShapeMismatchError):
        stft_magnitude(AudioSegment(np.ones(1000)))


def test_log_mel_rejects_wrong_bin_count():
    with pytest.raises(ShapeMismatchError):
        log_mel(MagnitudeSpectrogram(np.ones((100, 101))))


def test_magnitude_spectrogram_must_be_non_negative():
    with pytest.raises(FeatureError) as exc_info:
        MagnitudeSpectrogram(-np.ones((706, 101)))

    assert exc_info.value.code == "feature_error"


def test_magnitude_spectrogram_must_be_finite():
    values = np.ones((706, 101))
    values[3, 4] = np.nan

    with pytest.raises(FeatureError):
        MagnitudeSpectrogram(values)


def test_feature_cache_is_filled_once(tiny_corpus, tmp_path):
    cache = FeatureCache(tiny_corpus.manifest_id, tmp_path)

    assert featurize_manifest(tiny_corpus, cache, FeatureConfig()) == len(tiny_corpus.records)
    assert featurize_manifest(tiny_corpus, cache, FeatureConfig()) == 0
    assert cache.root == tmp_path / tiny_corpus.manifest_id


def test_feature_set_hides_gender_unless_asked(tiny_corpus, tiny_cache):
    training = load_feature_set(tiny_corpus, tiny_cache)
    evaluation = load_feature_set(tiny_corpus, tiny_cache, include_gender=True)

    assert training.genders is None
    assert training.features.shape == (40, 64, 101)
    assert training.features.dtype == np.float32
    assert set(training.event_labels.tolist()) == {0, 1}
    assert training.speech_labels.sum() == 20
    assert set(evaluation.genders.tolist()) == {"", "male", "female"}


def test_feature_set_subset_by_split(tiny_corpus, tiny_cache):
    features = load_feature_set(tiny_corpus, tiny_cache)
    test = features.subset("test")

    assert len(test) == 8
    assert set(test.splits.tolist()) == {"test"}
    assert test.speech_labels.sum() == 4
