"""Mixture corpus construction."""

from rdal.corpus.builder import build_corpus
from rdal.corpus.builder import read_manifest
from rdal.corpus.segments import AudioSegment
from rdal.corpus.segments import extract_energetic_segments
from rdal.corpus.segments import mix
from rdal.corpus.segments import normalize
from rdal.corpus.synthetic import generate_synthetic_event
from rdal.corpus.synthetic import generate_synthetic_speech

__all__ = [
    "AudioSegment",
    "build_corpus",
    "extract_energetic_segments",
    "generate_synthetic_event",
    "generate_synthetic_speech",
    "mix",
    "normalize",
    "read_manifest",
]
