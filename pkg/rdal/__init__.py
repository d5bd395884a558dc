"""Robust discriminative adversarial learning for speech-private audio representations."""

__version__ = "0.1.0"
