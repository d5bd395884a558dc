"""Seeding helpers for bit-reproducible runs."""

from __future__ import annotations

import hashlib
import random

import numpy as np
import torch

from rdal.core.config import get_runtime_settings


def seed_everything(seed: int) -> None:
    """Seed python, numpy and torch and pin deterministic kernels."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    torch.set_num_threads(get_runtime_settings().num_threads)


def derive_seed(seed: int, *scope: str | int) -> int:
    """Derive a stable 63-bit child seed for a named scope."""
    text = ":".join([str(seed), *(str(part) for part in scope)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def torch_generator(seed: int) -> torch.Generator:
    """Return a CPU generator seeded with ``seed``."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator
