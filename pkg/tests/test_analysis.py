import numpy as np
import pandas as pd
import pytest

from indoor_behaviour_ai.analysis.activity import activity_totals, sleep_disturbance
from indoor_behaviour_ai.analysis.behaviour_report import (
    AnalysisConfig,
    build_report,
    occupancy_pair,
    read_decode_csv,
    write_report,
)
from indoor_behaviour_ai.analysis.complexity import lz76_complexity, lz_by_day
from indoor_behaviour_ai.analysis.information import (
    Daypart,
    OccupancyPair,
    daypart_of,
    mutual_information,
    plugin_entropy,
    stratify_mi,
)
from indoor_behaviour_ai.errors import AlignmentError, ConfigError, InputValidationError, ModelDataMismatchError

DAY = 86400.0
ROOMS = ("bedroom", "bathroom", "hall", "living_room", "kitchen")


def _pair(a, b, step=2.5):
    a, b = np.asarray(a), np.asarray(b)
    return OccupancyPair(a, b, np.arange(len(a)) * step)


# --- mutual information ---

def test_mi_symmetric(rng):
    pair = _pair(rng.integers(0, 4, 500), rng.integers(0, 3, 500))
    assert mutual_information(pair) == mutual_information(pair.swapped())


def test_mi_of_identical_sequences_is_entropy(rng):
    a = rng.integers(0, 5, 1000)
    assert mutual_information(_pair(a, a)) == pytest.approx(plugin_entropy(a))


def test_mi_with_constant_is_zero(rng):
    assert mutual_information(_pair(rng.integers(0, 5, 300), np.zeros(300, dtype=int))) == 0.0


def test_mi_of_independent_sequences_is_small():
    rng = np.random.default_rng(0)
    assert mutual_information(_pair(rng.integers(0, 5, 20_000), rng.integers(0, 5, 20_000))) < 0.05


def test_mi_bounded_by_marginal_entropies(rng):
    for _ in range(50):
        a = rng.integers(0, 4, 200)
        b = np.where(rng.random(200) < 0.7, a, rng.integers(0, 4, 200))
        mi = mutual_information(_pair(a, b))
        assert 0.0 <= mi <= min(plugin_entropy(a), plugin_entropy(b))


def test_entropy_hand_value():
    assert plugin_entropy([0, 1, 0, 1]) == pytest.approx(1.0)
    assert plugin_entropy(["a", "a", "a"]) == 0.0


def test_mi_rejects_empty_and_misaligned():
    with pytest.raises(ValueError):
        mutual_information(_pair([], []))
    with pytest.raises(AlignmentError):
        OccupancyPair(np.zeros(3), np.zeros(4), np.zeros(3))


def test_lag_recovers_a_follower():
    rng = np.random.default_rng(7)
    leader = np.repeat(rng.integers(0, 5, 200), 10)
    follower = np.r_[np.zeros(8, dtype=int), leader[:-8]]
    pair = _pair(leader, follower)
    assert mutual_information(pair.lagged(8)) == pytest.approx(plugin_entropy(leader[:-8]))
    assert mutual_information(pair.lagged(8)) > mutual_information(pair)


def test_lag_beyond_length_is_empty():
    pair = _pair([0, 1, 2], [0, 1, 2])
    assert len(pair.lagged(5)) == 0
    assert stratify_mi(pair, lag=5).empty
    with pytest.raises(ValueError):
        pair.lagged(-1)


def test_dayparts():
    hours = np.array([0.0, 5.99, 6.0, 13.0, 23.5, 24.5]) * 3600
    assert daypart_of(hours).tolist() == [0, 0, 1, 2, 3, 0]
    assert daypart_of(hours, (Daypart("late", 22, 24),)).tolist() == [-1, -1, -1, -1, 0, -1]


def test_stratified_mi_buckets():
    rng = np.random.default_rng(3)
    times = np.arange(0.0, 2 * DAY, 60.0)
    a = rng.integers(0, 3, len(times))
    frame = stratify_mi(OccupancyPair(a, a.copy(), times), min_windows=30)
    assert list(frame.columns) == ["day", "daypart", "n_windows", "mi_bits"]
    assert len(frame) == 8
    assert frame["n_windows"].tolist() == [360] * 8

    sparse = stratify_mi(OccupancyPair(a, a.copy(), times), min_windows=361)
    assert sparse.empty


# --- LZ76 ---

def _lz76_naive(s) -> int:
    """Phrase count by direct search: extend each phrase while it occurs earlier."""
    s = list(s)
    n, i, c = len(s), 0, 0
    while i < n:
        k = 1
        while i + k <= n and any(s[j:j + k] == s[i:i + k] for j in range(i)):
            k += 1
        c += 1
        i += k
    return c


def test_lz76_matches_naive_parser():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        s = rng.integers(0, int(rng.integers(1, 4)), n).tolist()
        assert lz76_complexity(s) == _lz76_naive(s), s


def test_lz76_known_values():
    assert lz76_complexity("aaaaaaaa") == 2
    assert lz76_complexity("a") == 1
    assert lz76_complexity("0001101001000101") == 6
    assert lz76_complexity(["hall", "kitchen", "hall"]) == 3


def test_lz76_empty_rejected():
    with pytest.raises(ValueError):
        lz76_complexity([])


def test_lz_grows_with_randomness():
    rng = np.random.default_rng(2)
    regular = np.tile([0, 1, 2], 300)
    noisy = rng.integers(0, 3, 900)
    assert lz76_complexity(regular) < lz76_complexity(noisy)


def test_lz_by_day_segments():
    times = np.arange(0.0, 2 * DAY, 600.0)
    labels = np.where(np.mod(times, DAY) < DAY / 2, "bedroom", "hall")
    frame = lz_by_day(labels, times, segments_per_day=2)
    assert frame[["day", "segment"]].values.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert frame["lz76"].tolist() == [2, 2, 2, 2]


# --- activity ---

def test_activity_totals_partition_the_day(rng):
    times = np.arange(0.0, 2 * DAY, 300.0)
    labels = rng.choice(ROOMS, size=len(times))
    alpha = rng.uniform(0.0, 0.1, size=len(times))
    frame = activity_totals(alpha, labels, times, ROOMS)
    assert list(frame.columns) == ["day", *ROOMS, "total"]
    for d, row in frame.iterrows():
        in_day = np.floor(times / DAY) == row["day"]
        assert row["total"] == pytest.approx(alpha[in_day].sum(), rel=1e-12)
        assert row[list(ROOMS)].sum() == pytest.approx(row["total"])


def test_activity_totals_misaligned():
    with pytest.raises(AlignmentError):
        activity_totals(np.ones(3), np.array(["hall"] * 2), np.arange(3.0), ROOMS)


def test_activity_totals_reject_rooms_outside_the_list():
    labels = np.array([ROOMS[0], "attic", ROOMS[1]])
    with pytest.raises(ModelDataMismatchError, match="attic"):
        activity_totals(np.ones(3), labels, np.arange(3.0), ROOMS)


def _nights(restless: bool):
    times = np.arange(0.0, DAY, 2.5)
    hours = times / 3600
    alpha = np.full(len(times), 0.004)
    labels = np.full(len(times), "living_room", dtype=object)
    night = hours < 6
    labels[night] = "bedroom"
    if restless:
        alpha[night] = 0.02
        for start in (3600, 7200, 14400):
            trip = (times >= start) & (times < start + 300)
            labels[trip] = "bathroom"
    return alpha, labels, times


def test_disturbed_night_scores_higher():
    calm, _ = sleep_disturbance(*_nights(False), bedroom="bedroom")
    restless, _ = sleep_disturbance(*_nights(True), bedroom="bedroom")
    assert calm["bedroom_exits"].item() == 0
    assert restless["bedroom_exits"].item() == 3
    assert restless["mean_alpha"].item() > calm["mean_alpha"].item()
    assert restless["outside_fraction"].item() > calm["outside_fraction"].item() == 0.0


def test_zero_night_span_skips_every_day():
    alpha, labels, times = _nights(False)
    frame, skipped = sleep_disturbance(alpha, labels, times, "bedroom", night_span=(3.0, 3.0))
    assert frame.empty
    assert skipped == [0]


def test_daytime_only_data_reports_skipped_night():
    times = np.arange(8 * 3600.0, 20 * 3600.0, 2.5)
    frame, skipped = sleep_disturbance(np.ones(len(times)), np.full(len(times), "hall"), times, "bedroom")
    assert frame.empty
    assert skipped == [0]


# --- report assembly ---

def _decode_frame(labels, start=0.0, step=2.5, alpha=0.01):
    labels = list(labels)
    return pd.DataFrame({
        "window_start": start + np.arange(len(labels)) * step,
        "label": labels,
        "score": 0.9,
        "alpha": alpha,
    })


def _write(tmp_path, name, frame):
    path = tmp_path / f"{name}.csv"
    frame.to_csv(path, index=False)
    return path


def test_read_decode_csv_checks(tmp_path):
    with pytest.raises(InputValidationError):
        read_decode_csv(tmp_path / "absent.csv")
    bad_order = _decode_frame(["hall", "hall"])
    bad_order["window_start"] = [5.0, 2.5]
    with pytest.raises(AlignmentError):
        read_decode_csv(_write(tmp_path, "unsorted", bad_order))
    with pytest.raises(AlignmentError):
        read_decode_csv(_write(tmp_path, "empty", _decode_frame([])))
    with pytest.raises(InputValidationError):
        read_decode_csv(_write(tmp_path, "narrow", _decode_frame(["hall"]).drop(columns="alpha")))


def test_misaligned_residents_rejected():
    with pytest.raises(AlignmentError):
        occupancy_pair(_decode_frame(["hall"] * 4), _decode_frame(["hall"] * 4, start=1.0), ROOMS)


def test_unknown_room_in_decode_rejected():
    with pytest.raises(ModelDataMismatchError):
        build_report({"a": _decode_frame(["attic"] * 3)}, ROOMS, "bedroom", AnalysisConfig())


def test_report_bundle(tmp_path):
    rng = np.random.default_rng(4)
    n = int(DAY / 2.5)
    a = np.repeat(rng.choice(ROOMS, size=n // 240 + 1), 240)[:n]
    b = np.r_[a[:8], a[:-8]]
    decodes = {"RESIDENT_A": _decode_frame(a), "RESIDENT_B": _decode_frame(b)}
    report = build_report(decodes, ROOMS, "bedroom", AnalysisConfig(lag=8))

    assert set(report.lz_by_day["resident"]) == {"RESIDENT_A", "RESIDENT_B"}
    assert report.mi_by_daypart["lag"].unique().tolist() == [8]
    assert len(report.mi_by_daypart) == 4
    assert report.skipped_nights == {"RESIDENT_A": [], "RESIDENT_B": []}

    written = write_report(report, tmp_path / "report")
    names = sorted(p.name for p in written)
    assert names == sorted([
        "mi_by_daypart.csv", "mi_by_daypart.svg", "lz_by_day.csv", "complexity_by_day.svg",
        "activity_by_room_by_day.csv", "activity_by_room.svg", "sleep_activity.csv", "sleep_activity.svg",
        "skipped_nights.csv",
    ])
    assert all(p.exists() and p.stat().st_size > 0 for p in written)


def test_report_charts_are_reproducible(tmp_path):
    decodes = {"RESIDENT_A": _decode_frame(["bedroom"] * 100 + ["hall"] * 100)}
    report = build_report(decodes, ROOMS, "bedroom", AnalysisConfig(min_bucket_windows=10))
    assert report.mi_by_daypart is None
    first = write_report(report, tmp_path / "one")
    second = write_report(report, tmp_path / "two")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes(), a.name


def test_analysis_config_validation():
    with pytest.raises(ConfigError):
        AnalysisConfig(lag=-1)
    with pytest.raises(ConfigError):
        AnalysisConfig(night_span=(6.0, 2.0))
    config = AnalysisConfig.from_dict({"dayparts": [{"name": "all", "start_hour": 0, "end_hour": 24}], "lag": 2})
    assert config.dayparts == (Daypart("all", 0, 24),)
    assert config.lag == 2
