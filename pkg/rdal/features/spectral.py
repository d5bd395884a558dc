"""Magnitude STFT and log-mel front-end."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import librosa
import numpy as np
from numpy.typing import NDArray

from rdal.core.errors import FeatureError
from rdal.core.errors import ShapeMismatchError
from rdal.corpus.segments import SEGMENT_SAMPLES
from rdal.corpus.segments import AudioSegment
from rdal.schemas.config import FeatureConfig

DEFAULT_FEATURES = FeatureConfig()


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    """Non-negative (freq_bins, frames) matrix."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatchError(f"spectrogram must be 2-D, got shape {values.shape}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise FeatureError("spectrogram entries must be finite and non-negative")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class LogMelFeature:
    """(n_mels, frames) log-mel matrix; the model input."""

    values: NDArray[np.float64]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


def expected_frames(config: FeatureConfig = DEFAULT_FEATURES) -> int:
    return SEGMENT_SAMPLES // config.hop_length + 1


def expected_bins(config: FeatureConfig = DEFAULT_FEATURES) -> int:
    return config.n_fft // 2 + 1


def stft_magnitude(segment: AudioSegment, config: FeatureConfig = DEFAULT_FEATURES) -> MagnitudeSpectrogram:
    """Hamming-window STFT magnitude with reflect padding (101 frames per second)."""
    segment.require_full_length()
    spectrum = librosa.stft(
        segment.samples,
        n_fft=config.n_fft,
        hop_length=config.hop_length,
        win_length=config.n_fft,
        window=config.window,
        center=True,
        pad_mode="reflect",
    )
    return MagnitudeSpectrogram(np.abs(spectrum))


@lru_cache(maxsize=8)
def mel_filterbank(config: FeatureConfig = DEFAULT_FEATURES) -> NDArray[np.float64]:
    """HTK-scale mel projection matrix of shape (n_mels, freq_bins)."""
    return librosa.filters.mel(
        sr=config.sample_rate,
        n_fft=config.n_fft,
        n_mels=config.n_mels,
        fmin=config.fmin,
        fmax=config.fmax,
        htk=True,
        dtype=np.float64,
    )


def log_mel(spec: MagnitudeSpectrogram, config: FeatureConfig = DEFAULT_FEATURES) -> LogMelFeature:
    """Mel projection of the power (or magnitude) spectrogram, in dB with a floor."""
    basis = mel_filterbank(config)
    if spec.shape[0] != basis.shape[1]:
        raise ShapeMismatchError(f"spectrogram has {spec.shape[0]} bins, filterbank expects {basis.shape[1]}")
    energy = spec.values**2 if config.mel_input == "power" else spec.values
    mel = basis @ energy
    return LogMelFeature(librosa.power_to_db(mel, ref=1.0, amin=config.log_floor, top_db=None))


def featurize(segment: AudioSegment, config: FeatureConfig = DEFAULT_FEATURES) -> LogMelFeature:
    return log_mel(stft_magnitude(segment, config), config)
