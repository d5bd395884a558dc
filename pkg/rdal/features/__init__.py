"""Spectral features for the mixture corpus."""

from rdal.features.cache import FeatureCache
from rdal.features.cache import FeatureSet
from rdal.features.cache import featurize_manifest
from rdal.features.cache import load_feature_set
from rdal.features.spectral import LogMelFeature
from rdal.features.spectral import MagnitudeSpectrogram
from rdal.features.spectral import log_mel
from rdal.features.spectral import stft_magnitude

__all__ = [
    "FeatureCache",
    "FeatureSet",
    "LogMelFeature",
    "MagnitudeSpectrogram",
    "featurize_manifest",
    "load_feature_set",
    "log_mel",
    "stft_magnitude",
]
