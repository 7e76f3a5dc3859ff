import numpy as np
import pytest

from indoor_behaviour_ai.errors import ConfigError, InputValidationError, TrainingDivergedError
from indoor_behaviour_ai.model.crf import LabelSource, sequence_nll
from indoor_behaviour_ai.model.mlp import Mode, forward
from indoor_behaviour_ai.model.training import (
    TrainConfig,
    UnlabeledSequence,
    complement_labels,
    default_gate_threshold,
    init_model,
    loss_ssl,
    loss_wsl,
    train,
    weighted_cross_entropy,
)

DAY = 86400.0
CENTRES = np.array([[3.0, 0.0, 0.0, 0.0], [0.0, 3.0, 0.0, 0.0], [0.0, 0.0, 3.0, 0.0]])


def _blobs(rng, n_per_class=50):
    y = np.repeat(np.arange(3), n_per_class)
    X = CENTRES[y] + rng.normal(size=(len(y), 4))
    return X, y


def _sticky_sequence(rng, T=300):
    """Unlabelled windows that dwell in a room for a while before moving."""
    rooms = np.repeat(rng.integers(0, 3, size=T // 30 + 1), 30)[:T]
    X = CENTRES[rooms] + rng.normal(size=(T, 4))
    alpha = np.where(np.r_[True, rooms[1:] != rooms[:-1]], 0.05, rng.uniform(0.0, 0.02, size=T))
    return UnlabeledSequence(X=X, alpha=alpha, clock_times=np.arange(T) * 2.5)


# --- supervised term ---

def test_cross_entropy_hand_value():
    loss, grad = weighted_cross_entropy(np.zeros((1, 2)), np.array([0]), np.array([1.0]))
    assert loss == pytest.approx(np.log(2))
    np.testing.assert_allclose(grad, [[-0.5, 0.5]])


def test_zero_weights_give_zero_loss(rng):
    loss, grad = weighted_cross_entropy(rng.normal(size=(4, 3)), np.array([0, 1, 2, 0]), np.zeros(4))
    assert loss == 0.0
    assert np.all(grad == 0)


def test_weights_are_normalised(rng):
    e, y = rng.normal(size=(6, 3)), rng.integers(0, 3, size=6)
    beta = rng.uniform(0.1, 2.0, size=6)
    a, _ = weighted_cross_entropy(e, y, beta)
    b, _ = weighted_cross_entropy(e, y, 7.0 * beta)
    assert a == pytest.approx(b)


def test_upweighted_window_dominates(rng):
    e = np.array([[2.0, 0.0], [2.0, 0.0]])
    y = np.array([0, 1])
    low, _ = weighted_cross_entropy(e, y, np.array([1.0, 0.01]))
    high, _ = weighted_cross_entropy(e, y, np.array([0.01, 1.0]))
    assert high > low


def test_supervised_steps_reduce_loss(rng):
    X, y = _blobs(rng)
    model = init_model(4, 3, rng)
    first, _ = loss_wsl(model, X, y, np.ones(len(y)))
    config = TrainConfig(epochs=10, batch_size=32, use_ssl=False, heldout_fraction=0.0)
    model, _ = train(model, X, y, np.ones(len(y)), [], config)
    last, _ = loss_wsl(model, X, y, np.ones(len(y)))
    assert last < first


def test_wsl_length_mismatch(rng):
    model = init_model(4, 3, rng)
    with pytest.raises(ValueError):
        loss_wsl(model, np.zeros((4, 4)), np.zeros(3, dtype=int), np.ones(4))


# --- self-training term ---

def test_single_class_ssl_is_zero(rng):
    model = init_model(4, 1, rng)
    result = loss_ssl(model, rng.normal(size=(2, 10, 4)), rng.uniform(size=(2, 10)))
    assert result.loss == pytest.approx(0.0, abs=1e-9)
    assert np.all(result.targets == 0)


def test_ssl_needs_two_steps(rng):
    with pytest.raises(ValueError):
        loss_ssl(init_model(4, 3, rng), rng.normal(size=(1, 4)), np.ones(1))


def test_ssl_gradient_step_lowers_loss_for_fixed_targets(rng):
    model = init_model(4, 3, rng)
    model.gate_threshold = 0.01
    seq = _sticky_sequence(rng, T=60)
    X, alpha = seq.X[None], seq.alpha[None]
    result = loss_ssl(model, X, alpha)

    flat, _ = forward(model.net, seq.X, Mode.TRAIN, update_stats=False)
    e = flat[None]
    before = np.sum(sequence_nll(e, alpha, model.log_tau, model.gate_threshold, result.targets).nll)
    stepped = model.log_tau - 1e-3 * result.grad_log_tau
    after = np.sum(sequence_nll(e, alpha, stepped, model.gate_threshold, result.targets).nll)
    assert before == pytest.approx(result.loss)
    assert after < before


# --- bedroom pseudo-labels ---

def _two_nights(wear_second_night: bool):
    times = np.arange(0.0, 2 * DAY, 2.5)
    hours = np.mod(times, DAY) / 3600
    alpha = np.full(len(times), 0.05)
    night = hours < 6
    alpha[night] = 0.01
    if not wear_second_night:
        alpha[night & (times >= DAY)] = 0.0005
    return alpha, times


def test_pseudo_labels_cover_worn_nights_only():
    alpha, times = _two_nights(wear_second_night=False)
    pseudo = complement_labels(alpha, times, bedroom=2)
    chosen = times[pseudo.indices]
    assert len(chosen) == 6 * 3600 / 2.5
    assert np.all(chosen < 6 * 3600)
    assert np.all(pseudo.labels.y == 2)
    assert pseudo.labels.source is LabelSource.PSEUDO


def test_pseudo_label_cap_is_seeded():
    alpha, times = _two_nights(wear_second_night=True)
    a = complement_labels(alpha, times, bedroom=0, cap=100, seed=5)
    b = complement_labels(alpha, times, bedroom=0, cap=100, seed=5)
    assert len(a.indices) == 100
    np.testing.assert_array_equal(a.indices, b.indices)
    assert np.all(np.diff(a.indices) > 0)


def test_no_night_windows_no_labels():
    times = np.arange(8 * 3600.0, 20 * 3600.0, 2.5)
    pseudo = complement_labels(np.full(len(times), 0.05), times, bedroom=0)
    assert len(pseudo.indices) == 0


def test_default_gate_threshold():
    assert default_gate_threshold(np.arange(11.0), 10.0) == pytest.approx(1.0)
    assert default_gate_threshold(np.array([])) == 0.0


# --- training loop ---

def _fit(seed):
    rng = np.random.default_rng(seed)
    X, y = _blobs(rng)
    unlabeled = [_sticky_sequence(rng), _sticky_sequence(rng)]
    model = init_model(4, 3, np.random.default_rng(seed))
    model.gate_threshold = 0.03
    config = TrainConfig(
        epochs=12, batch_size=32, ssl_warmup_epochs=4, ssl_segment_length=40, ssl_segments_per_epoch=3, seed=seed,
    )
    held = rng.choice(len(y), 15, replace=False)
    return train(model, X, y, np.ones(len(y)), unlabeled, config, heldout=(X[held], y[held])), X, y


def test_training_is_deterministic():
    (a, trace_a), _, _ = _fit(3)
    (b, trace_b), _, _ = _fit(3)
    np.testing.assert_array_equal(a.log_tau, b.log_tau)
    for name in a.net.tensors:
        np.testing.assert_array_equal(a.net.tensors[name], b.net.tensors[name])
    assert trace_a.to_frame().equals(trace_b.to_frame())


def test_training_beats_chance_and_logs_both_terms():
    (model, trace), X, y = _fit(8)
    accuracy = np.mean(np.argmax(model.emissions(X), axis=1) == y)
    assert accuracy > 1 / 3
    frame = trace.to_frame()
    assert list(frame.columns) == ["epoch", "wsl", "ssl", "total", "heldout_nll", "train_accuracy"]
    assert np.all(frame.loc[frame["epoch"] < 4, "ssl"] == 0)
    assert frame["ssl"].iloc[-1] > 0 or trace.stopped_early
    assert 4 <= trace.best_epoch < len(frame)


def test_training_input_checks(rng):
    model = init_model(4, 3, rng)
    config = TrainConfig(epochs=1)
    with pytest.raises(InputValidationError):
        train(model, np.zeros((5, 4)), np.zeros(4, dtype=int), np.ones(5), [], config)
    with pytest.raises(InputValidationError):
        train(model, np.zeros((1, 4)), np.zeros(1, dtype=int), np.ones(1), [], config)
    with pytest.raises(ValueError):
        train(model, np.zeros((4, 4)), np.array([0, 1, 2, 3]), np.ones(4), [], config)


@pytest.mark.parametrize("kwargs", [
    {"epochs": 0}, {"batch_size": 1}, {"learning_rate": 0.0}, {"ssl_weight": -1.0},
    {"heldout_fraction": 1.0}, {"gate_percentile": 120.0}, {"min_activity_fraction": 2.0},
])
def test_bad_train_config(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


def test_train_config_from_mapping():
    config = TrainConfig.from_dict({"epochs": 3, "night_span": [1, 5], "unknown": 1}, seed=9)
    assert config.epochs == 3
    assert config.night_span == (1.0, 5.0)
    assert config.seed == 9


def test_non_finite_features_abort_training(rng):
    X, y = _blobs(rng, n_per_class=10)
    X[3, 1] = np.nan
    with pytest.raises(TrainingDivergedError) as info:
        train(init_model(4, 3, rng), X, y, np.ones(len(y)), [], TrainConfig(epochs=1, heldout_fraction=0.0))
    assert info.value.exit_code == 3
