"""Plug-in mutual information between two residents' room sequences."""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import entropy

from indoor_behaviour_ai.errors import AlignmentError
from indoor_behaviour_ai.simulate.types import SECONDS_PER_DAY

MIN_BUCKET_WINDOWS = 30


@dataclass(frozen=True)
class Daypart:
    name: str
    start_hour: float
    end_hour: float


DEFAULT_DAYPARTS = (
    Daypart("night", 0, 6),
    Daypart("morning", 6, 12),
    Daypart("afternoon", 12, 18),
    Daypart("evening", 18, 24),
)


@dataclass(frozen=True)
class OccupancyPair:
    """Room codes of residents A and B per window, aligned on A's clock times."""

    room_a: np.ndarray
    room_b: np.ndarray
    times: np.ndarray  # seconds after 00:00 of day 0

    def __post_init__(self):
        if not (len(self.room_a) == len(self.room_b) == len(self.times)):
            raise AlignmentError(
                f"occupancy sequences differ in length: {len(self.room_a)}, {len(self.room_b)}, {len(self.times)}"
            )

    def __len__(self) -> int:
        return len(self.room_a)

    def lagged(self, lag: int) -> "OccupancyPair":
        """Pair A[t] with B[t + lag]."""
        if lag < 0:
            raise ValueError(f"lag must be >= 0, got {lag}")
        n = max(len(self) - lag, 0)
        return OccupancyPair(self.room_a[:n], self.room_b[lag:lag + n], self.times[:n])

    def swapped(self) -> "OccupancyPair":
        return OccupancyPair(self.room_b, self.room_a, self.times)


def plugin_entropy(symbols) -> float:
    """Entropy in bits of the empirical distribution of rows (or scalars) in `symbols`."""
    symbols = np.asarray(symbols)
    if len(symbols) == 0:
        raise ValueError("entropy of an empty sequence")
    if symbols.ndim == 1:
        _, counts = np.unique(symbols, return_counts=True)
    else:
        _, counts = np.unique(symbols, axis=0, return_counts=True)
    # Sorted counts make the sum independent of symbol order.
    return float(entropy(np.sort(counts), base=2))


def mutual_information(pair: OccupancyPair) -> float:
    """I(A; B) = H(A) + H(B) - H(A, B) in bits, clamped to [0, min(H(A), H(B))]."""
    if len(pair) == 0:
        raise ValueError("mutual information of an empty pair")
    h_a = plugin_entropy(pair.room_a)
    h_b = plugin_entropy(pair.room_b)
    h_ab = plugin_entropy(np.column_stack([pair.room_a, pair.room_b]))
    return float(min(max(h_a + h_b - h_ab, 0.0), min(h_a, h_b)))


def daypart_of(times: np.ndarray, dayparts=DEFAULT_DAYPARTS) -> np.ndarray:
    """Index of the daypart holding each clock time; -1 when none does."""
    hours = np.mod(np.asarray(times, dtype=float), SECONDS_PER_DAY) / 3600.0
    out = np.full(len(hours), -1, dtype=int)
    for k, part in enumerate(dayparts):
        out[(hours >= part.start_hour) & (hours < part.end_hour) & (out < 0)] = k
    return out


def stratify_mi(
    pair: OccupancyPair,
    dayparts=DEFAULT_DAYPARTS,
    lag: int = 0,
    min_windows: int = MIN_BUCKET_WINDOWS,
) -> pd.DataFrame:
    """MI per (day, daypart) bucket after shifting B by `lag` windows.

    Buckets are keyed on A's timestamps; those with fewer than
    `min_windows` windows are left out.
    """
    columns = ["day", "daypart", "n_windows", "mi_bits"]
    shifted = pair.lagged(lag)
    if len(shifted) == 0:
        return pd.DataFrame(columns=columns)

    day = np.floor(shifted.times / SECONDS_PER_DAY).astype(int)
    part = daypart_of(shifted.times, dayparts)
    rows = []
    for d in np.unique(day):
        for k, dp in enumerate(dayparts):
            mask = (day == d) & (part == k)
            n = int(mask.sum())
            if n < min_windows:
                continue
            bucket = OccupancyPair(shifted.room_a[mask], shifted.room_b[mask], shifted.times[mask])
            rows.append({"day": int(d), "daypart": dp.name, "n_windows": n, "mi_bits": mutual_information(bucket)})
    return pd.DataFrame(rows, columns=columns)
