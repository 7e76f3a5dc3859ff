"""Domain types for the synthetic house simulator."""

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from indoor_behaviour_ai.errors import ConfigError

RSSI_FLOOR_DBM = -120.0
RSSI_CEILING_DBM = 0.0
# Emitted values stay strictly inside (-120, 0).
RSSI_MARGIN_DBM = 1e-3
MISSING = None
SECONDS_PER_DAY = 86400.0
AXES = ("x", "y", "z")


class Persona(str, Enum):
    TECHNICIAN_WALKTHROUGH = "TECHNICIAN_WALKTHROUGH"
    RESIDENT_A = "RESIDENT_A"
    RESIDENT_B = "RESIDENT_B"


class ActivityState(IntEnum):
    """What the wearer is doing during a schedule segment."""

    SLEEP = 0
    IDLE = 1
    UNWORN = 2


@dataclass(frozen=True)
class ActivityProfile:
    """Per-sample accelerometer jerk scales (g) for one persona."""

    sleep: float
    idle: float
    moving: float

    def __post_init__(self):
        if min(self.sleep, self.idle, self.moving) < 0:
            raise ConfigError("activity profile jerk scales must be >= 0")


DEFAULT_PROFILES: dict[Persona, ActivityProfile] = {
    Persona.TECHNICIAN_WALKTHROUGH: ActivityProfile(sleep=0.004, idle=0.010, moving=0.030),
    Persona.RESIDENT_A: ActivityProfile(sleep=0.004, idle=0.020, moving=0.080),
    Persona.RESIDENT_B: ActivityProfile(sleep=0.012, idle=0.025, moving=0.090),
}


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


@dataclass(frozen=True)
class SimConfig:
    seed: int = 7
    path_loss_exponent: float = 2.5
    ref_rssi_at_1m: float = -45.0
    noise_std: float = 3.0
    drop_base_prob: float = 0.05
    drop_distance_coeff: float = 0.03
    walkthrough_minutes: float = 40.0
    shift_offset: float = 0.0
    rssi_rate_hz: float = 5.0
    accel_rate_hz: float = 20.0
    room_radius_m: float = 1.2
    wander_period_s: float = 60.0
    mean_dwell_minutes: float = 25.0
    bedtime_hour: float = 22.5
    wake_hour: float = 6.5
    night_wake_rate: float = 0.7
    unworn_night_prob: float = 0.15
    sensor_noise_g: float = 0.0005
    transition_activity_s: float = 10.0
    activity_profiles: Mapping[Persona, ActivityProfile] = field(
        default_factory=lambda: dict(DEFAULT_PROFILES)
    )

    def __post_init__(self):
        # Probabilities are clamped rather than rejected.
        object.__setattr__(self, "drop_base_prob", _clamp01(self.drop_base_prob))
        object.__setattr__(self, "unworn_night_prob", _clamp01(self.unworn_night_prob))
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.drop_distance_coeff < 0:
            raise ConfigError("drop_distance_coeff must be >= 0")
        if self.walkthrough_minutes <= 0:
            raise ConfigError("walkthrough_minutes must be > 0")
        if self.rssi_rate_hz <= 0 or self.accel_rate_hz <= 0:
            raise ConfigError("sample rates must be > 0")
        if not 0 <= self.wake_hour < self.bedtime_hour <= 24:
            raise ConfigError("need 0 <= wake_hour < bedtime_hour <= 24")
        missing = [p for p in Persona if p not in self.activity_profiles]
        if missing:
            raise ConfigError(f"activity_profiles missing personas: {[p.value for p in missing]}")

    @classmethod
    def from_dict(cls, raw: Mapping, seed: int | None = None) -> "SimConfig":
        """Build from the `simulation` config section, ignoring keys that are not fields."""
        kwargs = {k: v for k, v in raw.items() if k in cls.__dataclass_fields__}
        profiles = dict(DEFAULT_PROFILES)
        for name, scales in (raw.get("activity_profiles") or {}).items():
            try:
                profiles[Persona(name)] = ActivityProfile(**scales)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad activity profile {name!r}: {e}") from e
        kwargs["activity_profiles"] = profiles
        if seed is not None:
            kwargs["seed"] = seed
        return cls(**kwargs)


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant room timeline: segment i covers [starts[i], starts[i+1])."""

    starts: np.ndarray
    rooms: np.ndarray
    states: np.ndarray
    end: float

    def __post_init__(self):
        if len(self.starts) == 0 or self.starts[0] != 0:
            raise ValueError("schedule must start at t=0")
        if not (len(self.starts) == len(self.rooms) == len(self.states)):
            raise ValueError("schedule arrays must have equal length")
        if np.any(np.diff(self.starts) <= 0):
            raise ValueError("schedule segment starts must be strictly increasing")

    def segment_at(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.starts, np.asarray(t, dtype=float), side="right") - 1

    def room_at(self, t) -> np.ndarray:
        return self.rooms[self.segment_at(t)]

    def state_at(self, t) -> np.ndarray:
        return self.states[self.segment_at(t)]

    def change_times(self) -> np.ndarray:
        """Instants at which the room changes (state-only changes excluded)."""
        moved = np.flatnonzero(self.rooms[1:] != self.rooms[:-1]) + 1
        return self.starts[moved]

    def truncated(self, end: float) -> "Schedule":
        keep = self.starts < end
        return Schedule(self.starts[keep], self.rooms[keep], self.states[keep], float(end))


@dataclass(frozen=True)
class GroundTruthTrace:
    """Simulated sensor streams on their nominal sampling grids.

    rssi[k, g] is gateway g at t = k / rssi_rate_hz (NaN = MISSING);
    accel[k] holds x, y, z at t = k / accel_rate_hz. Times are relative to
    trace start; clock_offset_s maps them to seconds after 00:00 of day 0.
    """

    rssi: np.ndarray
    accel: np.ndarray
    schedule: Schedule
    persona: Persona
    room_names: tuple[str, ...]
    gateway_names: tuple[str, ...]
    rssi_rate_hz: float = 5.0
    accel_rate_hz: float = 20.0
    clock_offset_s: float = 0.0

    @property
    def duration_s(self) -> float:
        return self.rssi.shape[0] / self.rssi_rate_hz

    @property
    def rssi_times(self) -> np.ndarray:
        return np.arange(self.rssi.shape[0]) / self.rssi_rate_hz

    @property
    def accel_times(self) -> np.ndarray:
        return np.arange(self.accel.shape[0]) / self.accel_rate_hz

    def labels_at(self, t) -> np.ndarray:
        return self.schedule.room_at(t)
