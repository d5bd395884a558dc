"""Deterministic desk-scale stand-ins for sound-event and speech recordings."""

from __future__ import annotations

from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy import signal

from rdal.core.errors import CorpusError
from rdal.corpus.segments import SAMPLE_RATE
from rdal.corpus.segments import SEGMENT_SAMPLES
from rdal.corpus.segments import AudioSegment
from rdal.corpus.segments import normalize
from rdal.schemas.config import DEFAULT_EVENT_CLASSES

Gender = Literal["male", "female"]

MAX_CLASSES = len(DEFAULT_EVENT_CLASSES)
LOWEST_CENTER_HZ = 250.0
HIGHEST_CENTER_HZ = 12000.0
# interleaved so that the first few classes are spread over the whole range
_CENTER_RANK = (0, 6, 3, 9, 1, 7, 4, 10, 2, 8, 5, 11)

F0_RANGES_HZ: dict[str, tuple[float, float]] = {
    "male": (100.0, 150.0),
    "female": (180.0, 250.0),
}
_FORMANT_SCALE = {"male": 1.0, "female": 1.17}
_VOWELS_HZ = (
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (300.0, 870.0, 2240.0),
    (530.0, 1840.0, 2480.0),
    (570.0, 840.0, 2410.0),
)
_FORMANT_BANDWIDTHS_HZ = (80.0, 100.0, 140.0)
_VIBRATO_DEPTH = 0.02
_BACKGROUND_LEVEL = 0.02


def class_center_hz(class_id: int) -> float:
    """Characteristic frequency of an event class (1-based id)."""
    if not 1 <= class_id <= MAX_CLASSES:
        raise CorpusError(f"class_id must be in 1..{MAX_CLASSES}, got {class_id}")
    rank = _CENTER_RANK[class_id - 1]
    ratio = HIGHEST_CENTER_HZ / LOWEST_CENTER_HZ
    return LOWEST_CENTER_HZ * ratio ** (rank / (MAX_CLASSES - 1))


def _burst_envelope(rng: np.random.Generator, n_bursts: int) -> NDArray[np.float64]:
    t = np.arange(SEGMENT_SAMPLES) / SAMPLE_RATE
    envelope = np.zeros(SEGMENT_SAMPLES)
    for _ in range(n_bursts):
        onset = rng.uniform(0.0, 0.7)
        decay = rng.uniform(0.05, 0.25)
        active = t >= onset
        envelope[active] += np.exp(-(t[active] - onset) / decay)
    return envelope


def _band_noise(rng: np.random.Generator, center: float) -> NDArray[np.float64]:
    low = center / 2 ** (1 / 6)
    high = min(center * 2 ** (1 / 6), 0.95 * SAMPLE_RATE / 2)
    sos = signal.butter(4, [low, high], btype="bandpass", fs=SAMPLE_RATE, output="sos")
    noise = rng.standard_normal(SEGMENT_SAMPLES)
    return signal.sosfiltfilt(sos, noise)


def _tone(rng: np.random.Generator, center: float) -> NDArray[np.float64]:
    t = np.arange(SEGMENT_SAMPLES) / SAMPLE_RATE
    frequency = center * rng.uniform(0.98, 1.02)
    phase = rng.uniform(0.0, 2 * np.pi)
    tone = np.sin(2 * np.pi * frequency * t + phase)
    if 2 * frequency < 0.95 * SAMPLE_RATE / 2:
        tone += 0.3 * np.sin(4 * np.pi * frequency * t + phase)
    return tone


def generate_synthetic_event(class_id: int, rng_seed: int) -> AudioSegment:
    """Normalized one-second event with a class-specific spectral signature.

    Even class ids are band-limited noise bursts, odd ids are tone bursts; both
    sit around :func:`class_center_hz`.
    """
    center = class_center_hz(class_id)
    rng = np.random.default_rng([class_id, rng_seed])

    carrier = _band_noise(rng, center) if class_id % 2 == 0 else _tone(rng, center)
    carrier /= np.std(carrier)
    envelope = _burst_envelope(rng, int(rng.integers(1, 4)))
    background = _BACKGROUND_LEVEL * rng.standard_normal(SEGMENT_SAMPLES)
    return normalize(AudioSegment(carrier * envelope + background))


def _pulse_train(rng: np.random.Generator, f0: float) -> NDArray[np.float64]:
    t = np.arange(SEGMENT_SAMPLES) / SAMPLE_RATE
    rate = rng.uniform(3.0, 6.0)
    contour = f0 * (1.0 + _VIBRATO_DEPTH * np.sin(2 * np.pi * rate * t + rng.uniform(0.0, 2 * np.pi)))
    phase = np.cumsum(contour) / SAMPLE_RATE
    pulses = np.zeros(SEGMENT_SAMPLES)
    pulses[1:][np.diff(np.floor(phase)) > 0] = 1.0
    # glottal spectral tilt
    return signal.lfilter([1.0], [1.0, -0.9], pulses)


def _resonate(excitation: NDArray[np.float64], formants: tuple[float, ...]) -> NDArray[np.float64]:
    output = excitation
    for frequency, bandwidth in zip(formants, _FORMANT_BANDWIDTHS_HZ):
        radius = np.exp(-np.pi * bandwidth / SAMPLE_RATE)
        theta = 2 * np.pi * frequency / SAMPLE_RATE
        output = signal.lfilter([1.0 - radius], [1.0, -2 * radius * np.cos(theta), radius**2], output)
    return output


def speaker_f0(gender: Gender, speaker_seed: int) -> float:
    """Fundamental frequency of a synthetic speaker, kept clear of the band edges."""
    low, high = F0_RANGES_HZ[gender]
    margin = 1.0 + _VIBRATO_DEPTH + 0.01
    rng = np.random.default_rng([speaker_seed, 0 if gender == "male" else 1])
    return float(rng.uniform(low * margin, high / margin))


def generate_synthetic_speech(
    gender: Gender,
    rng_seed: int,
    *,
    speaker_seed: int | None = None,
) -> AudioSegment:
    """Normalized one second of voiced "speech": formant-filtered glottal pulses.

    The speaker (fundamental frequency, formant scale) comes from
    ``speaker_seed`` when given, otherwise from ``rng_seed``; syllable timing
    and vowels always come from ``rng_seed``.
    """
    if gender not in F0_RANGES_HZ:
        raise CorpusError(f"gender must be one of {sorted(F0_RANGES_HZ)}, got {gender!r}")

    identity_seed = rng_seed if speaker_seed is None else speaker_seed
    f0 = speaker_f0(gender, identity_seed)
    identity_rng = np.random.default_rng([identity_seed, 7])
    formant_scale = _FORMANT_SCALE[gender] * identity_rng.uniform(0.95, 1.05)

    rng = np.random.default_rng([rng_seed, 11])
    excitation = _pulse_train(rng, f0)
    output = np.zeros(SEGMENT_SAMPLES)

    cursor = int(rng.integers(0, int(0.05 * SAMPLE_RATE)))
    while cursor < SEGMENT_SAMPLES:
        length = int(rng.uniform(0.15, 0.30) * SAMPLE_RATE)
        stop = min(cursor + length, SEGMENT_SAMPLES)
        vowel = _VOWELS_HZ[int(rng.integers(0, len(_VOWELS_HZ)))]
        formants = tuple(frequency * formant_scale for frequency in vowel)
        voiced = _resonate(excitation[cursor:stop], formants)
        output[cursor:stop] = voiced * np.hanning(stop - cursor)
        cursor = stop + int(rng.uniform(0.03, 0.10) * SAMPLE_RATE)

    output += 1e-3 * np.std(output) * rng.standard_normal(SEGMENT_SAMPLES)
    return normalize(AudioSegment(output))
