"""Render schedules into RSSI and accelerometer streams."""

import numpy as np
from scipy.spatial.distance import cdist

from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.channel import rssi_from_distances
from indoor_behaviour_ai.simulate.layout import HouseLayout
from indoor_behaviour_ai.simulate.schedule import sample_schedule, walkthrough_schedule
from indoor_behaviour_ai.simulate.types import (
    SECONDS_PER_DAY,
    ActivityState,
    GroundTruthTrace,
    Persona,
    Schedule,
    SimConfig,
)

logger = get_logger("simulate.traces")

WALKTHROUGH_CLOCK_S = 10 * 3600.0
MIN_GATEWAY_DISTANCE_M = 0.1

_WALKTHROUGH_STREAM = 0
_FREE_LIVING_STREAM = 1


def _streams(seed: int, tag: int) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence([int(seed), tag]).spawn(3)
    return tuple(np.random.default_rng(child) for child in children)


def _n_samples(duration: float, rate: float) -> int:
    return int(np.floor(duration * rate + 1e-9))


def _positions(
    schedule: Schedule, layout: HouseLayout, cfg: SimConfig, times: np.ndarray, rng: np.random.Generator,
) -> np.ndarray:
    """Wearable coordinates: room centre plus an offset redrawn every wander period."""
    seg = schedule.segment_at(times)
    block = np.floor((times - schedule.starts[seg]) / cfg.wander_period_s).astype(np.int64)
    key = seg.astype(np.int64) * (int(block.max(initial=0)) + 1) + block
    unique_keys, inverse = np.unique(key, return_inverse=True)
    radius = cfg.room_radius_m * np.sqrt(rng.random(len(unique_keys)))
    angle = 2.0 * np.pi * rng.random(len(unique_keys))
    offsets = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return layout.room_positions[schedule.rooms[seg]] + offsets[inverse]


def _render_rssi(
    schedule: Schedule,
    layout: HouseLayout,
    cfg: SimConfig,
    n: int,
    rng: np.random.Generator,
    offset: float,
) -> np.ndarray:
    times = np.arange(n) / cfg.rssi_rate_hz
    positions = _positions(schedule, layout, cfg, times, rng)
    distances = cdist(positions, layout.gateway_positions)
    distances = np.maximum(distances, MIN_GATEWAY_DISTANCE_M)
    return rssi_from_distances(distances, cfg, rng, offset=offset)


def _render_accel(
    schedule: Schedule, cfg: SimConfig, persona: Persona, n: int, rng: np.random.Generator,
) -> np.ndarray:
    """Gravity per segment plus state-dependent jitter; the jerk scale is the only persona input."""
    profile = cfg.activity_profiles[persona]
    times = np.arange(n) / cfg.accel_rate_hz
    seg = schedule.segment_at(times)
    state = schedule.states[seg]

    scale = np.select(
        [state == ActivityState.SLEEP, state == ActivityState.IDLE],
        [profile.sleep, profile.idle],
        default=0.0,
    )
    changes = schedule.change_times()
    if len(changes):
        idx = np.searchsorted(changes, times)
        before = np.abs(times - changes[np.maximum(idx - 1, 0)])
        after = np.abs(changes[np.minimum(idx, len(changes) - 1)] - times)
        moving = (np.minimum(before, after) < cfg.transition_activity_s) & (state != ActivityState.UNWORN)
        scale = np.where(moving, profile.moving, scale)

    gravity = rng.standard_normal((len(schedule.starts), 3))
    gravity /= np.linalg.norm(gravity, axis=1, keepdims=True)
    jitter = rng.standard_normal((n, 3))
    sensor = rng.standard_normal((n, 3))
    return gravity[seg] + scale[:, None] * jitter + cfg.sensor_noise_g * sensor


def render_trace(
    schedule: Schedule,
    layout: HouseLayout,
    cfg: SimConfig,
    persona: Persona,
    rssi_rng: np.random.Generator,
    accel_rng: np.random.Generator,
    offset: float = 0.0,
    clock_offset_s: float = 0.0,
) -> GroundTruthTrace:
    duration = schedule.end
    rssi = _render_rssi(schedule, layout, cfg, _n_samples(duration, cfg.rssi_rate_hz), rssi_rng, offset)
    accel = _render_accel(schedule, cfg, persona, _n_samples(duration, cfg.accel_rate_hz), accel_rng)
    return GroundTruthTrace(
        rssi=rssi,
        accel=accel,
        schedule=schedule,
        persona=persona,
        room_names=layout.rooms,
        gateway_names=layout.gateway_names,
        rssi_rate_hz=cfg.rssi_rate_hz,
        accel_rate_hz=cfg.accel_rate_hz,
        clock_offset_s=clock_offset_s,
    )


def simulate_walkthrough(layout: HouseLayout, cfg: SimConfig) -> GroundTruthTrace:
    """Labelled technician tour of every room (wearable carried in a backpack)."""
    layout.validate()
    schedule_rng, rssi_rng, accel_rng = _streams(cfg.seed, _WALKTHROUGH_STREAM)
    schedule = walkthrough_schedule(layout, cfg, schedule_rng)
    trace = render_trace(
        schedule, layout, cfg, Persona.TECHNICIAN_WALKTHROUGH, rssi_rng, accel_rng,
        clock_offset_s=WALKTHROUGH_CLOCK_S,
    )
    logger.info(
        "Walkthrough: %.1f min, %d segments, missing rate %.3f",
        trace.duration_s / 60, len(schedule.starts), float(np.isnan(trace.rssi).mean()),
    )
    return trace


def simulate_free_living(
    layout: HouseLayout,
    cfg: SimConfig,
    days: int,
    persona: Persona,
    schedule: Schedule | None = None,
    horizon_hours: float | None = None,
) -> GroundTruthTrace:
    """Resident trace from 00:00 of day 0, with the covariate-shift offset applied to RSSI.

    A forced `schedule` replaces the sampled one; `horizon_hours` truncates
    the trace for quick runs.
    """
    persona = Persona(persona)
    if persona is Persona.TECHNICIAN_WALKTHROUGH:
        raise InputValidationError("free-living traces need a resident persona")
    if days < 1:
        raise InputValidationError(f"days must be >= 1, got {days}")
    layout.validate()

    schedule_rng, rssi_rng, accel_rng = _streams(cfg.seed, _FREE_LIVING_STREAM)
    if schedule is None:
        schedule = sample_schedule(layout, cfg, days, schedule_rng)
    end = min(schedule.end, days * SECONDS_PER_DAY)
    if horizon_hours is not None:
        if horizon_hours <= 0:
            raise InputValidationError("horizon_hours must be > 0")
        end = min(end, horizon_hours * 3600.0)
    schedule = schedule.truncated(end)

    trace = render_trace(schedule, layout, cfg, persona, rssi_rng, accel_rng, offset=cfg.shift_offset)
    logger.info(
        "Free-living %s: %.1f h, %d segments, missing rate %.3f",
        persona.value, trace.duration_s / 3600, len(schedule.starts), float(np.isnan(trace.rssi).mean()),
    )
    return trace
