"""Two-dimensional linear projection of latents for scatter plots."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from sklearn.decomposition import PCA

from rdal.core.errors import ShapeMismatchError


def project_2d(latents: ArrayLike) -> NDArray[np.float64]:
    """Centered coordinates on the top two principal components."""
    values = np.asarray(latents, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:
        raise ShapeMismatchError(f"need at least two rows and two columns, got {values.shape}")
    centered = values - values.mean(axis=0)
    if not np.any(centered):
        return np.zeros((values.shape[0], 2))
    return PCA(n_components=2, svd_solver="full").fit_transform(centered)
