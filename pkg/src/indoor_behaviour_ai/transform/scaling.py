from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Scaler:
    """Per-dimension z-scoring fitted on the training windows."""

    mean: np.ndarray
    scale: np.ndarray  # 0 marks a zero-variance dimension

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("scaler needs a non-empty 2-D training matrix")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # Rounding in the mean leaves ~1e-15 spread on constant columns.
        std = np.where(std <= 1e-12 * np.maximum(1.0, np.abs(mean)), 0.0, std)
        return cls(mean=mean, scale=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.shape[0]:
            raise ValueError(f"expected {self.mean.shape[0]} features, got {X.shape[-1]}")
        degenerate = self.scale == 0
        out = (X - self.mean) / np.where(degenerate, 1.0, self.scale)
        out[..., degenerate] = 0.0
        return out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "Scaler":
        return cls(mean=np.asarray(payload["mean"], dtype=float), scale=np.asarray(payload["scale"], dtype=float))


def standardize(train: np.ndarray, other: np.ndarray) -> tuple[np.ndarray, np.ndarray, Scaler]:
    """Z-score both sets with train-set statistics; zero-variance dimensions map to 0."""
    scaler = Scaler.fit(train)
    return scaler.transform(train), scaler.transform(other), scaler
