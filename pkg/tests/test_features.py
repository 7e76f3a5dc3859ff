import numpy as np
import pytest

from indoor_behaviour_ai.errors import ConfigError, InputValidationError
from indoor_behaviour_ai.simulate.traces import simulate_walkthrough
from indoor_behaviour_ai.transform.feature_set import FeatureSet, featurize_trace
from indoor_behaviour_ai.transform.scaling import Scaler, standardize
from indoor_behaviour_ai.transform.windowing import (
    WindowSpec,
    activity_level,
    extract_features,
    window_stream,
)


def _block(values, expected=25):
    """Single-gateway feature block: mean, std, max, min, diff, missing."""
    return extract_features(np.asarray(values, dtype=float)[:, None], 1, expected).values


# --- windowing ---

def test_window_starts_with_overlap():
    times = np.arange(51) / 5.0
    starts = [w.start for w in window_stream(times, WindowSpec(5.0, 2.5))]
    assert starts == [0.0, 2.5, 5.0]


def test_stream_shorter_than_a_window_is_empty():
    assert window_stream(np.arange(20) / 5.0, WindowSpec()) == []
    assert window_stream([], WindowSpec()) == []


def test_disjoint_tiling():
    times = np.arange(51) / 5.0
    assert [w.start for w in window_stream(times, WindowSpec(5.0, 0.0))] == [0.0, 5.0]


@pytest.mark.parametrize("duration", [5.0, 7.4, 7.5, 60.0, 3601.3])
def test_window_count_formula(duration):
    spec = WindowSpec()
    assert spec.count(duration) == int(np.floor((duration - 5.0) / 2.5)) + 1


def test_window_bounds_hold_their_samples():
    times = np.arange(100) / 5.0
    for w in window_stream(times, WindowSpec()):
        inside = times[w.lo:w.hi]
        assert np.all((inside >= w.start) & (inside < w.end))
        assert w.hi - w.lo == 25


def test_unsorted_samples_rejected():
    with pytest.raises(ValueError):
        window_stream([0.0, 1.0, 0.5, 6.0], WindowSpec())


@pytest.mark.parametrize("length,overlap", [(5.0, 5.0), (5.0, -1.0), (0.0, 0.0)])
def test_bad_window_spec(length, overlap):
    with pytest.raises(ConfigError):
        WindowSpec(length, overlap)


# --- RSSI features ---

def test_constant_gateway():
    mean, std, vmax, vmin, diff, _ = _block([-50.0, -50.0, -50.0], expected=3)
    assert (mean, std, vmax, vmin, diff) == (-50.0, 0.0, -50.0, -50.0, 0.0)


def test_missing_count_against_nominal_grid():
    values = np.full(25, -70.0)
    values[[3, 17]] = np.nan
    assert _block(values)[5] == 2


def test_hand_arithmetic_oracle():
    mean, _, vmax, vmin, diff, _ = _block([-60.0, -50.0, -40.0], expected=3)
    assert mean == pytest.approx(-50.0)
    assert diff == pytest.approx(10.0)
    assert vmax == -40.0
    assert vmin == -60.0


def test_diff_skips_missing_slots():
    # Present values -60, -54, -40: first differences +6, +14.
    assert _block([-60.0, np.nan, -54.0, np.nan, -40.0], expected=5)[4] == pytest.approx(10.0)


def test_all_missing_gateway_sentinel():
    assert _block(np.full(25, np.nan)).tolist() == [-120.0, 0.0, -120.0, -120.0, 0.0, 25.0]


def test_fully_present_window_has_no_missing():
    assert _block(np.linspace(-80, -60, 25))[5] == 0


def test_reordering_only_changes_diff(rng):
    values = rng.uniform(-90, -40, size=25)
    values[rng.choice(25, 5, replace=False)] = np.nan
    forward = _block(values)
    shuffled = _block(rng.permutation(values))
    np.testing.assert_allclose(forward[[0, 1, 2, 3, 5]], shuffled[[0, 1, 2, 3, 5]])
    backward = _block(values[::-1])
    assert backward[4] == pytest.approx(-forward[4])
    assert backward[4] != pytest.approx(forward[4])


def test_feature_dimension_is_six_per_gateway(rng):
    window = rng.uniform(-90, -40, size=(25, 6))
    vector = extract_features(window, 6, window_start=7.5)
    assert vector.values.shape == (36,)
    assert vector.window_start == 7.5
    assert np.all(np.isfinite(vector.values))


# --- activity ---

def test_constant_accel_is_still():
    assert activity_level(np.ones((100, 3))) == 0.0


def test_alternating_axis():
    window = np.zeros((4, 3))
    window[:, 0] = [0, 1, 0, 1]
    assert activity_level(window) == pytest.approx(1 / 3)


def test_activity_homogeneous_and_translation_invariant(rng):
    window = rng.standard_normal((100, 3))
    alpha = activity_level(window)
    assert alpha > 0
    assert activity_level(2 * window) == pytest.approx(2 * alpha)
    assert activity_level(window + 3.7) == pytest.approx(alpha)


def test_too_short_accel_window():
    assert activity_level(np.ones((1, 3))) == 0.0


# --- scaling ---

def test_standardize_matched_sets(rng):
    X = rng.normal(5.0, 3.0, size=(200, 4))
    scaled, _, _ = standardize(X, X)
    np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.std(axis=0), 1.0)


def test_constant_dimension_maps_to_zero(rng):
    X = np.column_stack([rng.normal(size=50), np.full(50, -120.0)])
    _, other, _ = standardize(X, np.array([[0.3, -80.0]]))
    assert other[0, 1] == 0.0


def test_train_statistics_only():
    scaler = Scaler(mean=np.array([-50.0]), scale=np.array([10.0]))
    assert scaler.transform(np.array([[-40.0]]))[0, 0] == 1.0


def test_scaler_rejects_wrong_width(rng):
    scaler = Scaler.fit(rng.normal(size=(10, 3)))
    with pytest.raises(ValueError):
        scaler.transform(np.zeros((2, 4)))


# --- feature sets ---

def test_featurized_trace_aligns_features_and_activity(demo_layout, quick_sim):
    trace = simulate_walkthrough(demo_layout, quick_sim)
    fs = featurize_trace(trace, WindowSpec(), name="walkthrough")
    assert len(fs) == WindowSpec().count(trace.duration_s)
    assert fs.X.shape == (len(fs), 36)
    assert fs.alpha.shape == (len(fs),)
    assert np.all(fs.alpha >= 0)
    assert np.all(np.isfinite(fs.X))
    assert fs.has_labels
    assert fs.clock_times[0] == trace.clock_offset_s


def test_feature_csv_layout(tmp_path, demo_layout, quick_sim):
    fs = featurize_trace(simulate_walkthrough(demo_layout, quick_sim), WindowSpec(), name="walkthrough")
    path = fs.to_csv(tmp_path / "walkthrough.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[0] == "window_start"
    assert header[-2:] == ["alpha", "label"]
    assert len(header) == 36 + 3

    back = FeatureSet.from_csv(path, demo_layout.rooms)
    np.testing.assert_allclose(back.X, fs.X, rtol=1e-9)
    assert np.array_equal(back.labels, fs.labels)


def test_feature_csv_needs_alpha(tmp_path, demo_layout):
    path = tmp_path / "odd.csv"
    path.write_text("window_start,gw_mean\n0,-50\n", encoding="utf-8")
    with pytest.raises(InputValidationError):
        FeatureSet.from_csv(path, demo_layout.rooms)
