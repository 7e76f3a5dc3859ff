import numpy as np
import pandas as pd

from indoor_behaviour_ai.simulate.types import SECONDS_PER_DAY


def lz76_complexity(labels) -> int:
    """Phrase count of the Lempel-Ziv (1976) exhaustive-history parsing.

    Each new phrase is the shortest extension of the text seen so far that
    cannot be copied from an earlier start (overlap allowed). Symbols may
    be any hashable values; they are compared by equality only.
    """
    s = list(labels)
    n = len(s)
    if n == 0:
        raise ValueError("LZ76 complexity of an empty sequence")
    if n == 1:
        return 1

    complexity = 1
    prefix = 1  # length of the parsed history
    i = 0  # candidate copy start in the history
    k = 1  # current match length
    k_max = 1
    while True:
        if s[i + k - 1] == s[prefix + k - 1]:
            k += 1
            if prefix + k > n:
                complexity += 1
                break
        else:
            k_max = max(k_max, k)
            i += 1
            if i == prefix:
                complexity += 1
                prefix += k_max
                if prefix + 1 > n:
                    break
                i, k, k_max = 0, 1, 1
            else:
                k = 1
    return complexity


def lz_by_day(labels, clock_times, segments_per_day: int = 1) -> pd.DataFrame:
    """LZ76 complexity of each calendar day's decoded rooms, optionally split into equal-time segments."""
    if segments_per_day < 1:
        raise ValueError("segments_per_day must be >= 1")
    labels = np.asarray(labels)
    clock_times = np.asarray(clock_times, dtype=float)
    day = np.floor(clock_times / SECONDS_PER_DAY).astype(int)
    segment = np.floor(np.mod(clock_times, SECONDS_PER_DAY) / (SECONDS_PER_DAY / segments_per_day)).astype(int)
    rows = []
    for d in np.unique(day):
        for seg in range(segments_per_day):
            mask = (day == d) & (segment == seg)
            if mask.any():
                rows.append({
                    "day": int(d),
                    "segment": seg,
                    "n_windows": int(mask.sum()),
                    "lz76": lz76_complexity(labels[mask]),
                })
    return pd.DataFrame(rows, columns=["day", "segment", "n_windows", "lz76"])
