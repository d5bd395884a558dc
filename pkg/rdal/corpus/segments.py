"""One-second segment extraction, normalization and mixing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from rdal.core.errors import CorpusError
from rdal.core.errors import DegenerateInputError
from rdal.core.errors import ShapeMismatchError

SAMPLE_RATE = 44100
SEGMENT_SAMPLES = SAMPLE_RATE
SPEECH_ATTENUATION_DB = 5.0


@dataclass(frozen=True)
class AudioSegment:
    """Mono one-second excerpt at 44.1 kHz."""

    samples: NDArray[np.float64]
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ShapeMismatchError(f"segment must be 1-D, got shape {samples.shape}")
        if self.sample_rate != SAMPLE_RATE:
            raise ShapeMismatchError(f"segment sample rate must be {SAMPLE_RATE}, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise DegenerateInputError("segment contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    def require_full_length(self) -> None:
        if len(self) != SEGMENT_SAMPLES:
            raise ShapeMismatchError(f"segment must have {SEGMENT_SAMPLES} samples, got {len(self)}")


def speech_gain(attenuation_db: float = SPEECH_ATTENUATION_DB) -> float:
    """Linear amplitude factor for an attenuation in dB."""
    return float(10.0 ** (-attenuation_db / 20.0))


def _normalized(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    std = float(np.std(samples))
    if std == 0.0 or not np.isfinite(std):
        raise DegenerateInputError("cannot normalize a zero-variance signal")
    return (samples - np.mean(samples)) / std


def normalize(segment: AudioSegment) -> AudioSegment:
    """Zero mean, unit population standard deviation."""
    return AudioSegment(_normalized(segment.samples), segment.sample_rate)


def pad_to_segment(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    """Zero-pad at the end up to one second."""
    if samples.shape[0] >= SEGMENT_SAMPLES:
        return samples[:SEGMENT_SAMPLES]
    return np.pad(samples, (0, SEGMENT_SAMPLES - samples.shape[0]))


def _window_starts(length: int, hop: int) -> NDArray[np.int64]:
    last = length - SEGMENT_SAMPLES
    starts = np.arange(0, last + 1, hop, dtype=np.int64)
    if starts[-1] != last:
        starts = np.append(starts, last)
    return starts


def extract_energetic_segments(
    recording: ArrayLike,
    count: int,
    *,
    hop_seconds: float = 0.1,
) -> list[AudioSegment]:
    """Return up to ``count`` non-overlapping one-second windows, most energetic first.

    Every returned segment is normalized; recordings shorter than one second are
    normalized whole and then zero-padded at the end. Windows without energy are
    never returned.
    """
    samples = np.asarray(recording, dtype=np.float64)
    if samples.ndim != 1 or samples.shape[0] == 0:
        raise ShapeMismatchError("recording must be a non-empty 1-D signal")
    if count < 1:
        raise CorpusError(f"segment count must be >= 1, got {count}")
    if not np.all(np.isfinite(samples)):
        raise DegenerateInputError("recording contains non-finite samples")
    if not np.any(samples):
        raise DegenerateInputError("recording is all zeros; no energy ranking possible")

    if samples.shape[0] <= SEGMENT_SAMPLES:
        return [AudioSegment(pad_to_segment(_normalized(samples)))]

    hop = max(1, int(round(hop_seconds * SAMPLE_RATE)))
    starts = _window_starts(samples.shape[0], hop)
    cumulative = np.concatenate(([0.0], np.cumsum(samples**2)))
    energies = cumulative[starts + SEGMENT_SAMPLES] - cumulative[starts]

    # stable sort keeps the earliest start first among equal energies
    order = np.argsort(-energies, kind="stable")
    chosen: list[int] = []
    for index in order:
        if len(chosen) == count:
            break
        start = int(starts[index])
        if energies[index] <= 0.0:
            break
        if any(abs(start - other) < SEGMENT_SAMPLES for other in chosen):
            continue
        window = samples[start : start + SEGMENT_SAMPLES]
        if np.std(window) == 0.0:
            continue
        chosen.append(start)

    return [AudioSegment(_normalized(samples[start : start + SEGMENT_SAMPLES])) for start in chosen]


def mix(
    event: AudioSegment,
    speech: AudioSegment | None,
    *,
    attenuation_db: float = SPEECH_ATTENUATION_DB,
) -> AudioSegment:
    """Add attenuated speech to an event segment; no speech returns the event unchanged."""
    event.require_full_length()
    if speech is None:
        return event
    speech.require_full_length()
    return AudioSegment(event.samples + speech_gain(attenuation_db) * speech.samples)
