"""Mini-batches with exactly half speech-containing examples."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np
from numpy.typing import NDArray

from rdal.core.errors import ConfigError
from rdal.core.errors import CorpusError


class BalancedBatchSampler:
    """Yields index arrays of ``batch_size`` with ``batch_size / 2`` speech examples.

    Each epoch draws fresh permutations of both pools; leftovers that cannot fill a
    balanced batch are dropped.
    """

    def __init__(self, speech_labels: NDArray, batch_size: int, rng: np.random.Generator) -> None:
        if batch_size % 2:
            raise ConfigError("batch_size must be even")
        labels = np.asarray(speech_labels).astype(bool)
        self.speech = np.flatnonzero(labels)
        self.non_speech = np.flatnonzero(~labels)
        self.half = batch_size // 2
        self.rng = rng
        self.batches_per_epoch = min(len(self.speech), len(self.non_speech)) // self.half
        if self.batches_per_epoch == 0:
            raise CorpusError(
                f"Training split is too small for one balanced batch of {batch_size}: "
                f"{len(self.speech)} speech and {len(self.non_speech)} non-speech examples"
            )

    def __len__(self) -> int:
        return self.batches_per_epoch

    def epoch(self) -> Iterator[NDArray[np.int64]]:
        speech = self.rng.permutation(self.speech)
        non_speech = self.rng.permutation(self.non_speech)
        for index in range(self.batches_per_epoch):
            window = slice(index * self.half, (index + 1) * self.half)
            yield np.concatenate([speech[window], non_speech[window]]).astype(np.int64)
