"""Sliding windows over sensor streams and the per-window RSSI/activity features."""

from dataclasses import dataclass

import numpy as np

from indoor_behaviour_ai.errors import ConfigError
from indoor_behaviour_ai.simulate.types import RSSI_FLOOR_DBM

STATS = ("mean", "std", "max", "min", "diff", "missing")
N_STATS = len(STATS)
CHUNK_WINDOWS = 20_000


@dataclass(frozen=True)
class WindowSpec:
    length: float = 5.0
    overlap: float = 2.5

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError("window length must be > 0")
        if not 0 <= self.overlap < self.length:
            raise ConfigError(f"need 0 <= overlap < length, got overlap={self.overlap}")

    @property
    def step(self) -> float:
        return self.length - self.overlap

    def count(self, duration: float) -> int:
        """Complete windows that fit in a stream of `duration` seconds."""
        if duration < self.length:
            return 0
        return int(np.floor((duration - self.length) / self.step + 1e-9)) + 1

    def starts(self, duration: float) -> np.ndarray:
        return np.arange(self.count(duration)) * self.step

    def slots(self, rate_hz: float) -> int:
        return int(round(self.length * rate_hz))


@dataclass(frozen=True)
class Window:
    start: float
    end: float
    lo: int  # first sample index inside [start, end)
    hi: int  # one past the last


@dataclass(frozen=True)
class FeatureVector:
    window_start: float
    values: np.ndarray  # 6 per gateway: mean, std, max, min, diff, missing


def window_stream(times, spec: WindowSpec, duration: float | None = None) -> list[Window]:
    """Windows [k*step, k*step + length) over time-sorted samples.

    `duration` is the stream length in seconds (default: the last
    timestamp); windows running past it are dropped.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return []
    if np.any(np.diff(times) < 0):
        raise ValueError("samples must be time-sorted")
    if duration is None:
        duration = float(times[-1])
    starts = spec.starts(duration)
    ends = starts + spec.length
    lo = np.searchsorted(times, starts, side="left")
    hi = np.searchsorted(times, ends, side="left")
    return [Window(float(s), float(e), int(a), int(b)) for s, e, a, b in zip(starts, ends, lo, hi)]


def slot_offsets(starts: np.ndarray, rate_hz: float) -> np.ndarray:
    """Index of the first nominal-grid slot at or after each window start."""
    return np.ceil(np.asarray(starts) * rate_hz - 1e-9).astype(np.int64)


def _rssi_stats(values: np.ndarray, expected: int) -> np.ndarray:
    """values: (W, slots, G) with NaN for MISSING -> (W, G, 6)."""
    present = ~np.isnan(values)
    count = present.sum(axis=1)
    safe = np.maximum(count, 1)
    filled = np.where(present, values, 0.0)

    mean = filled.sum(axis=1) / safe
    var = np.where(present, (values - mean[:, None, :]) ** 2, 0.0).sum(axis=1) / safe
    vmax = np.where(present, values, -np.inf).max(axis=1)
    vmin = np.where(present, values, np.inf).min(axis=1)

    # Mean of first differences over present values telescopes to (last - first) / (m - 1).
    first = np.argmax(present, axis=1)
    last = values.shape[1] - 1 - np.argmax(present[:, ::-1, :], axis=1)
    v_first = np.take_along_axis(filled, first[:, None, :], axis=1)[:, 0, :]
    v_last = np.take_along_axis(filled, last[:, None, :], axis=1)[:, 0, :]
    diff = np.where(count >= 2, (v_last - v_first) / np.maximum(count - 1, 1), 0.0)

    missing = np.clip(expected - count, 0, expected).astype(float)

    empty = count == 0
    mean = np.where(empty, RSSI_FLOOR_DBM, mean)
    vmax = np.where(empty, RSSI_FLOOR_DBM, vmax)
    vmin = np.where(empty, RSSI_FLOOR_DBM, vmin)
    std = np.where(empty, 0.0, np.sqrt(var))
    return np.stack([mean, std, vmax, vmin, diff, missing], axis=-1)


def extract_features(window_values, n_gateways: int, expected_slots: int = 25, window_start: float = 0.0) -> FeatureVector:
    """Summary statistics of one window's RSSI, computed over present values only.

    window_values: (samples, G) array, NaN or None where MISSING. A gateway
    with no present value gets mean/max/min -120, std 0, diff 0 and
    missing_count = expected_slots.
    """
    values = np.asarray(window_values, dtype=float).reshape(-1, n_gateways)
    stats = _rssi_stats(values[None, :, :], expected_slots)
    return FeatureVector(window_start=float(window_start), values=stats.reshape(-1))


def extract_feature_matrix(rssi_grid: np.ndarray, starts: np.ndarray, spec: WindowSpec, rate_hz: float) -> np.ndarray:
    """Feature rows for every window start over a nominal-rate RSSI grid (NaN = MISSING)."""
    n_gw = rssi_grid.shape[1]
    expected = spec.slots(rate_hz)
    lo = slot_offsets(starts, rate_hz)
    out = np.empty((len(starts), n_gw * N_STATS))
    offsets = np.arange(expected)
    for a in range(0, len(starts), CHUNK_WINDOWS):
        idx = lo[a:a + CHUNK_WINDOWS, None] + offsets
        out[a:a + CHUNK_WINDOWS] = _rssi_stats(rssi_grid[idx], expected).reshape(len(idx), -1)
    return out


def _activity(values: np.ndarray) -> np.ndarray:
    """values: (W, samples, 3) -> mean absolute first difference averaged over axes."""
    if values.shape[1] < 2:
        return np.zeros(values.shape[0])
    jerk = np.abs(np.diff(values, axis=1))
    valid = ~np.isnan(jerk)
    n = valid.sum(axis=1)
    per_axis = np.where(n > 0, np.where(valid, jerk, 0.0).sum(axis=1) / np.maximum(n, 1), 0.0)
    return per_axis.mean(axis=1)


def activity_level(accel_window) -> float:
    """Average absolute jerk of a (samples, 3) accelerometer window; 0 for fewer than 2 samples."""
    values = np.asarray(accel_window, dtype=float).reshape(-1, 3)
    return float(_activity(values[None, :, :])[0])


def activity_series(accel_grid: np.ndarray, starts: np.ndarray, spec: WindowSpec, rate_hz: float) -> np.ndarray:
    """Activity level per window, sharing the RSSI window boundaries."""
    expected = spec.slots(rate_hz)
    lo = slot_offsets(starts, rate_hz)
    out = np.empty(len(starts))
    offsets = np.arange(expected)
    for a in range(0, len(starts), CHUNK_WINDOWS):
        idx = lo[a:a + CHUNK_WINDOWS, None] + offsets
        out[a:a + CHUNK_WINDOWS] = _activity(accel_grid[idx])
    return out


def feature_names(gateway_names) -> tuple[str, ...]:
    return tuple(f"{gw}_{stat}" for gw in gateway_names for stat in STATS)
