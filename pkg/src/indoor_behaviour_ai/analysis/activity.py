import math

import numpy as np
import pandas as pd

from indoor_behaviour_ai.errors import AlignmentError, ModelDataMismatchError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.types import SECONDS_PER_DAY

logger = get_logger("analysis.activity")

SLEEP_COLUMNS = ["day", "n_windows", "mean_alpha", "var_alpha", "outside_fraction", "bedroom_exits"]


def _check_aligned(alpha, labels, clock_times) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    alpha = np.asarray(alpha, dtype=float)
    labels = np.asarray(labels)
    clock_times = np.asarray(clock_times, dtype=float)
    if not (len(alpha) == len(labels) == len(clock_times)):
        raise AlignmentError(
            f"activity ({len(alpha)}), labels ({len(labels)}) and times ({len(clock_times)}) are not aligned"
        )
    return alpha, labels, clock_times


def activity_totals(alpha, labels, clock_times, room_names) -> pd.DataFrame:
    """Summed activity per calendar day and decoded room, plus a `total` column.

    The total is the exactly rounded sum (math.fsum) of the room columns;
    a label outside `room_names` raises ModelDataMismatchError.
    """
    alpha, labels, clock_times = _check_aligned(alpha, labels, clock_times)
    unknown = sorted(set(labels.astype(str)) - set(room_names))
    if unknown:
        raise ModelDataMismatchError(f"labels outside the room list: {unknown[:5]}")
    day = np.floor(clock_times / SECONDS_PER_DAY).astype(int)
    rows = []
    for d in np.unique(day):
        in_day = day == d
        row = {"day": int(d)}
        for room in room_names:
            row[room] = math.fsum(alpha[in_day & (labels == room)])
        row["total"] = math.fsum(row[room] for room in room_names)
        rows.append(row)
    return pd.DataFrame(rows, columns=["day", *room_names, "total"])


def sleep_disturbance(
    alpha, labels, clock_times, bedroom: str, night_span: tuple[float, float] = (0.0, 6.0),
) -> tuple[pd.DataFrame, list[int]]:
    """Per-day night summary: activity mean/variance, share of windows outside the bedroom, bedroom exits.

    Returns the summary and the days (present in the data) that had no
    night windows.
    """
    alpha, labels, clock_times = _check_aligned(alpha, labels, clock_times)
    start_h, end_h = night_span
    if not 0 <= start_h <= end_h <= 24:
        raise ValueError(f"night span must lie within a day, got {night_span}")
    day = np.floor(clock_times / SECONDS_PER_DAY).astype(int)
    hours = np.mod(clock_times, SECONDS_PER_DAY) / 3600.0
    in_night = (hours >= start_h) & (hours < end_h)

    rows, skipped = [], []
    for d in np.unique(day):
        mask = in_night & (day == d)
        if not mask.any():
            skipped.append(int(d))
            continue
        a = alpha[mask]
        in_bedroom = labels[mask] == bedroom
        exits = int(np.sum(in_bedroom[:-1] & ~in_bedroom[1:]))
        rows.append({
            "day": int(d),
            "n_windows": int(mask.sum()),
            "mean_alpha": float(a.mean()),
            "var_alpha": float(a.var()),
            "outside_fraction": float(np.mean(~in_bedroom)),
            "bedroom_exits": exits,
        })
    if skipped:
        logger.info("No night windows on day(s) %s", skipped)
    return pd.DataFrame(rows, columns=SLEEP_COLUMNS), skipped
