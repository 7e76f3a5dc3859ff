from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

MAX_BANDWIDTH_POINTS = 1000


@dataclass(frozen=True)
class RbfKernel:
    """k(x, x') = exp(-||x - x'||^2 / (2 gamma^2))."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"RBF bandwidth must be > 0, got {self.bandwidth}")

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        sq = cdist(X, Y, "sqeuclidean")
        return np.exp(-sq / (2.0 * self.bandwidth ** 2))


def median_bandwidth(points: np.ndarray, max_points: int = MAX_BANDWIDTH_POINTS) -> float:
    """Median pairwise Euclidean distance over an evenly strided subsample; 1.0 if that median is 0."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] < 2:
        raise ValueError("median bandwidth needs at least 2 points")
    if points.shape[0] > max_points:
        idx = np.linspace(0, points.shape[0] - 1, max_points).round().astype(int)
        points = points[idx]
    median = float(np.median(pdist(points)))
    return median if median > 0 else 1.0
