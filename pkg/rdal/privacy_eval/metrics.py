"""ROC/AUC, kernel density curves, overlap and attacker uncertainty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.integrate import trapezoid
from sklearn import metrics as sk_metrics
from sklearn.neighbors import KernelDensity

from rdal.core.errors import ShapeMismatchError
from rdal.core.errors import SingleClassError


def _binary_inputs(scores: ArrayLike, labels: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    score_array = np.asarray(scores, dtype=np.float64).ravel()
    label_array = np.asarray(labels).astype(bool).ravel()
    if score_array.shape != label_array.shape:
        raise ShapeMismatchError(f"{score_array.size} scores vs {label_array.size} labels")
    if label_array.all() or not label_array.any():
        raise SingleClassError("ROC analysis needs both positive and negative labels")
    return score_array, label_array


def auc(scores: ArrayLike, labels: ArrayLike) -> float:
    """Area under the ROC curve; tied scores earn half credit."""
    score_array, label_array = _binary_inputs(scores, labels)
    return float(sk_metrics.roc_auc_score(label_array, score_array))


def roc_curve(scores: ArrayLike, labels: ArrayLike) -> list[tuple[float, float]]:
    """(false-positive rate, true-positive rate) points from (0, 0) to (1, 1)."""
    score_array, label_array = _binary_inputs(scores, labels)
    fpr, tpr, _ = sk_metrics.roc_curve(label_array, score_array, drop_intermediate=False)
    return [(float(x), float(y)) for x, y in zip(fpr, tpr)]


def curve_area(points: list[tuple[float, float]]) -> float:
    fpr, tpr = zip(*points)
    return float(sk_metrics.auc(np.asarray(fpr), np.asarray(tpr)))


def accuracy(probabilities: ArrayLike, labels: ArrayLike, threshold: float = 0.5) -> float:
    predicted = np.asarray(probabilities, dtype=np.float64) >= threshold
    return float(np.mean(predicted == np.asarray(labels).astype(bool)))


@dataclass(frozen=True)
class DensityCurves:
    """Per-class densities of attacker probabilities on a shared grid over [0, 1]."""

    grid: NDArray[np.float64]
    positive: NDArray[np.float64]
    negative: NDArray[np.float64]


def silverman_bandwidth(samples: NDArray[np.float64], minimum: float = 1e-2) -> float:
    std = float(np.std(samples))
    return max(std * (4.0 / (3.0 * samples.size)) ** 0.2, minimum)


def _density(samples: NDArray[np.float64], grid: NDArray[np.float64], minimum: float) -> NDArray[np.float64]:
    estimator = KernelDensity(kernel="gaussian", bandwidth=silverman_bandwidth(samples, minimum))
    estimator.fit(samples[:, None])
    values = np.exp(estimator.score_samples(grid[:, None]))
    return values / trapezoid(values, grid)


def probability_density(
    probabilities: ArrayLike,
    labels: ArrayLike,
    *,
    grid_points: int = 512,
    min_bandwidth: float = 1e-2,
) -> DensityCurves:
    """Gaussian-kernel densities for the positive and negative class, each integrating to 1 on the grid."""
    values = np.asarray(probabilities, dtype=np.float64).ravel()
    mask = np.asarray(labels).astype(bool).ravel()
    if values.shape != mask.shape:
        raise ShapeMismatchError(f"{values.size} probabilities vs {mask.size} labels")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if mask.all() or not mask.any():
        raise SingleClassError("density estimation needs samples from both classes")
    grid = np.linspace(0.0, 1.0, grid_points)
    return DensityCurves(
        grid=grid,
        positive=_density(values[mask], grid, min_bandwidth),
        negative=_density(values[~mask], grid, min_bandwidth),
    )


def density_overlap(curves: DensityCurves) -> float:
    """Integral of the pointwise minimum; 1 means indistinguishable classes."""
    return float(trapezoid(np.minimum(curves.positive, curves.negative), curves.grid))


def binary_entropy(probabilities: ArrayLike) -> float:
    """Mean entropy in bits of Bernoulli outputs; 1 at p = 0.5."""
    p = np.clip(np.asarray(probabilities, dtype=np.float64), 1e-12, 1.0 - 1e-12)
    return float(np.mean(-(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))))
