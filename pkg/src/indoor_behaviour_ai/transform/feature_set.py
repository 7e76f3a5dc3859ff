from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.types import GroundTruthTrace
from indoor_behaviour_ai.transform.windowing import (
    WindowSpec,
    activity_series,
    extract_feature_matrix,
    feature_names,
)

logger = get_logger("transform.feature_set")

UNLABELLED = -1


@dataclass(frozen=True)
class FeatureSet:
    """Windowed features of one trace, aligned index-for-index with activity levels."""

    window_starts: np.ndarray  # seconds since trace start
    X: np.ndarray  # (W, 6G)
    alpha: np.ndarray  # (W,)
    feature_names: tuple[str, ...]
    room_names: tuple[str, ...]
    labels: np.ndarray | None = None  # room index per window, UNLABELLED if unknown
    clock_offset_s: float = 0.0
    name: str = ""

    def __len__(self) -> int:
        return len(self.window_starts)

    @property
    def n_gateways(self) -> int:
        return self.X.shape[1] // 6

    @property
    def clock_times(self) -> np.ndarray:
        """Window starts in seconds after 00:00 of day 0."""
        return self.window_starts + self.clock_offset_s

    @property
    def has_labels(self) -> bool:
        return self.labels is not None and bool(np.all(self.labels != UNLABELLED))

    def without_labels(self) -> "FeatureSet":
        return replace(self, labels=None)

    def to_csv(self, path: Path) -> Path:
        frame = pd.DataFrame(self.X, columns=list(self.feature_names))
        frame.insert(0, "window_start", self.window_starts)
        frame["alpha"] = self.alpha
        if self.labels is not None:
            rooms = np.asarray(self.room_names + ("",), dtype=object)
            frame["label"] = rooms[self.labels]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.10g")
        return path

    @classmethod
    def from_csv(cls, path: Path, room_names: tuple[str, ...], clock_offset_s: float = 0.0, name: str = "") -> "FeatureSet":
        path = Path(path)
        if not path.exists():
            raise InputValidationError(f"feature file not found: {path}")
        frame = pd.read_csv(path)
        if "window_start" not in frame or "alpha" not in frame:
            raise InputValidationError(f"{path} lacks window_start/alpha columns")
        labels = None
        if "label" in frame:
            codes = pd.Categorical(frame.pop("label").fillna(""), categories=list(room_names)).codes
            labels = np.where(codes < 0, UNLABELLED, codes).astype(int)
        starts = frame.pop("window_start").to_numpy(dtype=float)
        alpha = frame.pop("alpha").to_numpy(dtype=float)
        return cls(
            window_starts=starts,
            X=frame.to_numpy(dtype=float),
            alpha=alpha,
            feature_names=tuple(frame.columns),
            room_names=tuple(room_names),
            labels=labels,
            clock_offset_s=clock_offset_s,
            name=name or path.stem,
        )


def featurize_trace(trace: GroundTruthTrace, spec: WindowSpec, name: str = "") -> FeatureSet:
    """Window a trace: RSSI features, activity levels and midpoint ground-truth labels."""
    duration = min(trace.duration_s, trace.accel.shape[0] / trace.accel_rate_hz)
    starts = spec.starts(duration)
    X = extract_feature_matrix(trace.rssi, starts, spec, trace.rssi_rate_hz)
    alpha = activity_series(trace.accel, starts, spec, trace.accel_rate_hz)
    labels = trace.labels_at(starts + spec.length / 2).astype(int)
    logger.info(
        "Featurized %s: %d windows x %d features, mean activity %.4f",
        name or trace.persona.value, len(starts), X.shape[1], float(alpha.mean()) if len(alpha) else 0.0,
    )
    return FeatureSet(
        window_starts=starts,
        X=X,
        alpha=alpha,
        feature_names=feature_names(trace.gateway_names),
        room_names=trace.room_names,
        labels=labels,
        clock_offset_s=trace.clock_offset_s,
        name=name,
    )
