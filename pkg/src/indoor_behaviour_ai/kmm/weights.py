from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from indoor_behaviour_ai.errors import ConfigError
from indoor_behaviour_ai.kmm.kernel import median_bandwidth
from indoor_behaviour_ai.kmm.solver import build_problem, solve
from indoor_behaviour_ai.monitoring.logger import get_logger

logger = get_logger("kmm.weights")


@dataclass(frozen=True)
class KmmConfig:
    bound: float = 1000.0
    epsilon: float | None = None  # None: (sqrt(N_tr) - 1) / sqrt(N_tr)
    bandwidth: float | None = None  # None: median heuristic
    max_test_points: int = 2000
    max_iter: int = 1000
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.bound > 0:
            raise ConfigError("kmm.bound must be > 0")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError("kmm.epsilon must lie in (0, 1)")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError("kmm.bandwidth must be > 0")
        if self.max_test_points < 1 or self.max_iter < 1:
            raise ConfigError("kmm.max_test_points and kmm.max_iter must be >= 1")


@dataclass(frozen=True)
class WeightVector:
    beta: np.ndarray
    bound: float
    epsilon: float

    def __len__(self) -> int:
        return len(self.beta)

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(beta=np.ones(n), bound=1.0, epsilon=0.5)

    def summary(self) -> dict[str, float]:
        return {
            "beta_min": float(self.beta.min()),
            "beta_max": float(self.beta.max()),
            "beta_mean": float(self.beta.mean()),
            "beta_std": float(self.beta.std()),
            "beta_zero_fraction": float(np.mean(self.beta < 1e-6)),
        }

    def to_csv(self, path: Path, window_starts: np.ndarray) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"window_start": window_starts, "beta": self.beta}).to_csv(
            path, index=False, float_format="%.10g",
        )
        return path


def default_epsilon(n_train: int) -> float:
    """(sqrt(N) - 1) / sqrt(N), kept strictly positive for a single training point."""
    root = np.sqrt(n_train)
    return max(float((root - 1.0) / root), 1e-3)


def estimate_weights(train: np.ndarray, test: np.ndarray, config: KmmConfig) -> WeightVector:
    """Importance weights of training windows towards the test distribution.

    Test windows are subsampled uniformly at random (seeded) to at most
    max_test_points before the kernel matrices are built.
    """
    train = np.atleast_2d(np.asarray(train, dtype=float))
    test = np.atleast_2d(np.asarray(test, dtype=float))
    if train.shape[0] == 0 or test.shape[0] == 0:
        raise ValueError("KMM needs non-empty train and test sets")

    if test.shape[0] > config.max_test_points:
        rng = np.random.default_rng(config.seed)
        keep = np.sort(rng.choice(test.shape[0], size=config.max_test_points, replace=False))
        test = test[keep]

    n_train = train.shape[0]
    epsilon = config.epsilon if config.epsilon is not None else default_epsilon(n_train)
    bandwidth = config.bandwidth or median_bandwidth(np.vstack([train, test]))
    logger.info(
        "KMM: N_tr=%d, N_te=%d, gamma=%.4g, B=%.4g, eps=%.4g",
        n_train, test.shape[0], bandwidth, config.bound, epsilon,
    )

    problem = build_problem(train, test, bandwidth, config.bound, epsilon)
    result = solve(problem, max_iter=config.max_iter, tol=config.tol)
    weights = WeightVector(beta=result.beta, bound=config.bound, epsilon=epsilon)
    logger.info(
        "KMM weights: mean=%.3f, max=%.3f, zero fraction=%.3f (%d iterations, converged=%s)",
        weights.beta.mean(), weights.beta.max(), weights.summary()["beta_zero_fraction"],
        result.iterations, result.converged,
    )
    return weights
