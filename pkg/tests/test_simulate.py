import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import spearmanr

from indoor_behaviour_ai.errors import InputValidationError, LayoutError, TraceChannelError
from indoor_behaviour_ai.simulate.channel import path_loss_rssi, rssi_from_distances, rssi_from_position
from indoor_behaviour_ai.simulate.layout import HouseLayout, layout_from_dict, layout_to_dict
from indoor_behaviour_ai.simulate.schedule import sample_schedule, shadow_schedule, walkthrough_route
from indoor_behaviour_ai.simulate.trace_io import read_trace_jsonl, write_trace_jsonl
from indoor_behaviour_ai.simulate.traces import simulate_free_living, simulate_walkthrough
from indoor_behaviour_ai.simulate.types import Persona, SimConfig

QUIET = dict(noise_std=0.0, drop_base_prob=0.0, drop_distance_coeff=0.0)


# --- channel ---

def test_rssi_at_one_metre_is_reference(rng):
    cfg = SimConfig(ref_rssi_at_1m=-45.0, **QUIET)
    assert rssi_from_position((0.0, 0.0), (1.0, 0.0), cfg, rng) == pytest.approx(-45.0)


def test_rssi_at_ten_metres_hand_evaluated(rng):
    cfg = SimConfig(ref_rssi_at_1m=-40.0, path_loss_exponent=2.0, **QUIET)
    assert rssi_from_position((0.0, 0.0), (6.0, 8.0), cfg, rng) == pytest.approx(-60.0)


def test_saturated_drop_probability_always_missing(rng):
    cfg = SimConfig(drop_base_prob=1.0)
    assert all(rssi_from_position((0.0, 0.0), (2.0, 0.0), cfg, rng) is None for _ in range(200))
    assert np.isnan(rssi_from_distances(np.full(500, 2.0), cfg, rng)).all()


def test_drop_probability_is_clamped():
    assert SimConfig(drop_base_prob=3.0).drop_base_prob == 1.0
    assert SimConfig(drop_base_prob=-1.0).drop_base_prob == 0.0


def test_coincident_transmitter_rejected(rng):
    with pytest.raises(ValueError):
        rssi_from_position((1.0, 1.0), (1.0, 1.0), SimConfig(), rng)


def test_rssi_stays_strictly_inside_range(rng):
    cfg = SimConfig(noise_std=40.0, drop_base_prob=0.0, drop_distance_coeff=0.0, ref_rssi_at_1m=-5.0)
    values = rssi_from_distances(rng.uniform(0.05, 500.0, size=20_000), cfg, rng)
    assert np.all(values > -120.0)
    assert np.all(values < 0.0)


# --- layout ---

def test_unreachable_room_rejected(demo_layout):
    payload = layout_to_dict(demo_layout)
    payload["adjacency"] = [pair for pair in payload["adjacency"] if "bathroom" not in pair]
    with pytest.raises(LayoutError, match="unreachable"):
        layout_from_dict(payload)


def test_asymmetric_adjacency_rejected(demo_layout):
    adjacency = demo_layout.adjacency.copy()
    adjacency[0, 4] = True
    with pytest.raises(LayoutError, match="symmetric"):
        replace(demo_layout, adjacency=adjacency).validate()


def test_unknown_bedroom_rejected(demo_layout):
    payload = layout_to_dict(demo_layout)
    payload["bedroom"] = "attic"
    with pytest.raises(LayoutError):
        layout_from_dict(payload)


def test_single_room_layout_accepted_but_not_an_empty_one():
    payload = {"rooms": [{"name": "studio", "position": [0.0, 0.0]}],
               "gateways": [{"name": "gw", "position": [2.0, 0.0]}]}
    layout = layout_from_dict(payload)
    assert layout.n_rooms == 1
    assert layout.bedroom == 0
    with pytest.raises(LayoutError):
        layout_from_dict({**payload, "rooms": []})


# --- walkthrough ---

def test_walkthrough_route_moves_between_neighbours(demo_layout):
    route, first = walkthrough_route(demo_layout)
    assert set(route) == set(range(demo_layout.n_rooms))
    assert sum(first) == demo_layout.n_rooms
    for a, b in zip(route[:-1], route[1:]):
        assert demo_layout.adjacency[a, b]


def test_walkthrough_covers_every_room(demo_layout):
    trace = simulate_walkthrough(demo_layout, SimConfig(seed=3))
    labels = trace.labels_at(trace.rssi_times)
    assert set(labels.tolist()) == set(range(demo_layout.n_rooms))
    assert trace.duration_s == pytest.approx(40 * 60)
    assert trace.persona is Persona.TECHNICIAN_WALKTHROUGH


def test_walkthrough_single_room():
    layout = HouseLayout(
        rooms=("studio",),
        room_positions=np.array([[0.0, 0.0]]),
        gateway_names=("gw",),
        gateway_positions=np.array([[2.0, 0.0]]),
        adjacency=np.zeros((1, 1), dtype=bool),
    ).validate()
    trace = simulate_walkthrough(layout, SimConfig(walkthrough_minutes=2.0))
    assert np.all(trace.labels_at(trace.rssi_times) == 0)


def test_walkthrough_is_deterministic(demo_layout, quick_sim):
    a = simulate_walkthrough(demo_layout, quick_sim)
    b = simulate_walkthrough(demo_layout, quick_sim)
    assert np.array_equal(a.rssi, b.rssi, equal_nan=True)
    assert np.array_equal(a.accel, b.accel)
    assert np.array_equal(a.schedule.starts, b.schedule.starts)

    c = simulate_walkthrough(demo_layout, replace(quick_sim, seed=quick_sim.seed + 1))
    assert not np.array_equal(a.rssi, c.rssi, equal_nan=True)


def test_missing_rate_grows_with_distance(demo_layout):
    cfg = SimConfig(seed=5, walkthrough_minutes=20.0, room_radius_m=0.0, drop_base_prob=0.02, drop_distance_coeff=0.05)
    trace = simulate_walkthrough(demo_layout, cfg)
    rooms = trace.labels_at(trace.rssi_times)
    positions = demo_layout.room_positions[rooms]
    distances = np.linalg.norm(positions[:, None, :] - demo_layout.gateway_positions[None], axis=2)
    rho, _ = spearmanr(distances.mean(axis=0), np.isnan(trace.rssi).mean(axis=0))
    assert rho > 0


# --- free living ---

def test_technician_persona_rejected_for_free_living(demo_layout, quick_sim):
    with pytest.raises(InputValidationError):
        simulate_free_living(demo_layout, quick_sim, 1, Persona.TECHNICIAN_WALKTHROUGH)


def test_free_living_needs_a_day(demo_layout, quick_sim):
    with pytest.raises(InputValidationError):
        simulate_free_living(demo_layout, quick_sim, 0, Persona.RESIDENT_A)


def test_noise_free_rssi_is_function_of_position(demo_layout):
    cfg = SimConfig(seed=2, room_radius_m=0.0, shift_offset=0.0, **QUIET)
    trace = simulate_free_living(demo_layout, cfg, 1, Persona.RESIDENT_A, horizon_hours=1.0)
    rooms = trace.labels_at(trace.rssi_times)
    distances = np.linalg.norm(
        demo_layout.room_positions[rooms][:, None, :] - demo_layout.gateway_positions[None], axis=2,
    )
    assert not np.isnan(trace.rssi).any()
    np.testing.assert_allclose(trace.rssi, path_loss_rssi(distances, cfg), atol=1e-9)


def test_shift_offset_moves_every_reading(demo_layout):
    base = SimConfig(seed=2, **QUIET)
    plain = simulate_free_living(demo_layout, base, 1, Persona.RESIDENT_A, horizon_hours=0.5)
    shifted = simulate_free_living(demo_layout, replace(base, shift_offset=-6.0), 1, Persona.RESIDENT_A, horizon_hours=0.5)
    np.testing.assert_allclose(shifted.rssi - plain.rssi, -6.0, atol=1e-9)


def test_nights_mostly_in_bedroom(demo_layout):
    cfg = SimConfig(seed=21)
    schedule = sample_schedule(demo_layout, cfg, 1, np.random.default_rng(21))
    night = np.arange(0.0, 6 * 3600.0, 5.0)
    assert np.mean(schedule.room_at(night) == demo_layout.bedroom) >= 0.7


def test_schedule_moves_only_between_adjacent_rooms(demo_layout):
    schedule = sample_schedule(demo_layout, SimConfig(seed=4), 3, np.random.default_rng(4))
    for a, b in zip(schedule.rooms[:-1], schedule.rooms[1:]):
        assert a == b or demo_layout.adjacency[a, b]
    assert schedule.end == pytest.approx(3 * 86400.0)


def test_personas_share_labels_but_not_accel(demo_layout):
    cfg = SimConfig(seed=9)
    schedule = sample_schedule(demo_layout, cfg, 1, np.random.default_rng(9))
    a = simulate_free_living(demo_layout, cfg, 1, Persona.RESIDENT_A, schedule=schedule, horizon_hours=2.0)
    b = simulate_free_living(demo_layout, cfg, 1, Persona.RESIDENT_B, schedule=schedule, horizon_hours=2.0)
    assert np.array_equal(a.labels_at(a.rssi_times), b.labels_at(b.rssi_times))
    assert np.array_equal(a.rssi, b.rssi, equal_nan=True)
    assert not np.array_equal(a.accel, b.accel)


def test_shadow_schedule_lags_leader(demo_layout):
    leader = sample_schedule(demo_layout, SimConfig(seed=6), 1, np.random.default_rng(6))
    follower = shadow_schedule(leader, 20.0)
    t = leader.change_times()[:10] + 5.0
    assert np.array_equal(follower.room_at(t + 20.0), leader.room_at(t))
    with pytest.raises(ValueError):
        shadow_schedule(leader, -1.0)


# --- trace files ---

def test_trace_file_marks_missing_as_null(tmp_path, demo_layout):
    cfg = SimConfig(seed=1, walkthrough_minutes=1.0, drop_base_prob=0.5)
    trace = simulate_walkthrough(demo_layout, cfg)
    path = write_trace_jsonl(trace, tmp_path / "walk.jsonl")

    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    rssi = [r for r in records if r["kind"] == "rssi"]
    assert len(rssi) == trace.rssi.size
    assert sum(r["value"] is None for r in rssi) == int(np.isnan(trace.rssi).sum())
    assert {r["persona"] for r in records} == {"TECHNICIAN_WALKTHROUGH"}

    back = read_trace_jsonl(path, demo_layout.rooms, demo_layout.gateway_names)
    np.testing.assert_allclose(back.rssi, trace.rssi, atol=1e-6)
    assert np.array_equal(back.labels_at(back.rssi_times), trace.labels_at(trace.rssi_times))


def test_trace_with_unknown_gateway_rejected(tmp_path, demo_layout):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        json.dumps({"t": 0.0, "kind": "rssi", "gateway": "garage_9", "value": -50.0, "label": "hall",
                    "persona": "RESIDENT_A"}) + "\n",
        encoding="utf-8",
    )
    with pytest.raises(TraceChannelError, match="gateway"):
        read_trace_jsonl(path, demo_layout.rooms, demo_layout.gateway_names)


def test_trace_without_a_gateway_rejected(tmp_path, demo_layout):
    path = tmp_path / "one.jsonl"
    path.write_text(
        json.dumps({"t": 0.0, "kind": "rssi", "gateway": demo_layout.gateway_names[0], "value": None,
                    "label": "hall", "persona": "RESIDENT_A"}) + "\n",
        encoding="utf-8",
    )
    with pytest.raises(TraceChannelError, match=demo_layout.gateway_names[1]):
        read_trace_jsonl(path, demo_layout.rooms, demo_layout.gateway_names)
    # a null reading still counts as the gateway being present
    back = read_trace_jsonl(path, demo_layout.rooms, demo_layout.gateway_names[:1])
    assert np.isnan(back.rssi).all()
