"""Core runtime settings, errors, logging and reproducibility helpers."""
