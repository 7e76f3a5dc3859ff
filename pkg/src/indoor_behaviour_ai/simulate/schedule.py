"""Room timelines: the technician's walkthrough script and residents' days."""

import numpy as np

from indoor_behaviour_ai.errors import LayoutError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.layout import HouseLayout, shortest_path
from indoor_behaviour_ai.simulate.types import SECONDS_PER_DAY, ActivityState, Schedule, SimConfig

logger = get_logger("simulate.schedule")

HOUR = 3600.0
PASS_THROUGH_S = 15.0
STEP_S = 30.0


class _Builder:
    """Accumulates (start, room, state) segments, merging no-op changes."""

    def __init__(self, room: int, state: ActivityState):
        self.starts = [0.0]
        self.rooms = [room]
        self.states = [int(state)]

    @property
    def room(self) -> int:
        return self.rooms[-1]

    def add(self, t: float, room: int, state: ActivityState):
        if room == self.rooms[-1] and int(state) == self.states[-1]:
            return
        if t <= self.starts[-1]:
            # Replace a zero-length segment instead of stacking starts.
            self.rooms[-1], self.states[-1] = room, int(state)
            return
        self.starts.append(float(t))
        self.rooms.append(room)
        self.states.append(int(state))

    def walk(self, layout: HouseLayout, t: float, dst: int, state: ActivityState) -> float:
        """Move room by room to dst, STEP_S per intermediate room; returns arrival time."""
        path = shortest_path(layout, self.room, dst)
        for hop in path[1:-1]:
            self.add(t, hop, ActivityState.IDLE)
            t += STEP_S
        self.add(t, dst, state)
        return t

    def build(self, end: float) -> Schedule:
        return Schedule(
            starts=np.asarray(self.starts, dtype=float),
            rooms=np.asarray(self.rooms, dtype=int),
            states=np.asarray(self.states, dtype=int),
            end=float(end),
        ).truncated(end)


def walkthrough_route(layout: HouseLayout, start: int = 0) -> tuple[list[int], list[bool]]:
    """Depth-first tour over the adjacency graph.

    Returns the rooms in visiting order (consecutive rooms adjacent) and a
    flag marking each room's first visit; backtracking steps are pass-throughs.
    """
    route = [start]
    first = [True]
    seen = {start}

    def visit(room: int):
        for nxt in layout.neighbours(room):
            nxt = int(nxt)
            if nxt in seen:
                continue
            seen.add(nxt)
            route.append(nxt)
            first.append(True)
            visit(nxt)
            route.append(room)
            first.append(False)

    visit(start)
    if len(seen) != layout.n_rooms:
        raise LayoutError("walkthrough cannot reach every room")
    # Trailing backtrack steps add nothing to coverage.
    while len(route) > 1 and not first[-1]:
        route.pop()
        first.pop()
    return route, first


def walkthrough_schedule(layout: HouseLayout, cfg: SimConfig, rng: np.random.Generator) -> Schedule:
    """Scripted tour visiting every room, dwelling a few minutes in each."""
    layout.validate()
    total = cfg.walkthrough_minutes * 60.0
    route, first = walkthrough_route(layout)

    n_pass = sum(1 for f in first if not f)
    dwell_budget = max(total - n_pass * PASS_THROUGH_S, 0.0)
    shares = rng.uniform(0.8, 1.2, size=sum(first))
    dwells = iter(dwell_budget * shares / shares.sum())

    builder = _Builder(route[0], ActivityState.IDLE)
    t = 0.0
    for i, room in enumerate(route):
        builder.add(t, room, ActivityState.IDLE)
        t += next(dwells) if first[i] else PASS_THROUGH_S
    return builder.build(total)


def sample_schedule(
    layout: HouseLayout,
    cfg: SimConfig,
    days: int,
    rng: np.random.Generator,
) -> Schedule:
    """Semi-Markov resident timeline starting asleep in the bedroom at 00:00 of day 0.

    Daytime dwells are exponential (at least one minute) with neighbour
    moves; at bedtime the resident walks to the bedroom, or with
    probability unworn_night_prob takes the wearable off and leaves it in
    the current room until the next morning. Worn nights contain Poisson
    bathroom trips.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    layout.validate()
    end = days * SECONDS_PER_DAY
    bedroom = layout.bedroom
    trip_room = layout.bathroom
    if trip_room is None:
        neighbours = layout.neighbours(bedroom)
        trip_room = int(neighbours[0]) if len(neighbours) else bedroom

    builder = _Builder(bedroom, ActivityState.SLEEP)
    sleep_start = 0.0
    worn_night = True

    for day in range(days):
        day0 = day * SECONDS_PER_DAY
        wake = day0 + np.clip(
            cfg.wake_hour * HOUR + rng.normal(0.0, 0.25 * HOUR),
            (cfg.wake_hour - 1.0) * HOUR,
            (cfg.wake_hour + 1.5) * HOUR,
        )
        wake = max(wake, sleep_start + HOUR)

        if worn_night and trip_room != bedroom:
            n_trips = rng.poisson(cfg.night_wake_rate)
            window = (sleep_start + 0.5 * HOUR, wake - 0.5 * HOUR)
            if n_trips and window[1] > window[0]:
                for t0 in np.sort(rng.uniform(window[0], window[1], size=n_trips)):
                    if t0 <= builder.starts[-1]:
                        continue
                    arrive = builder.walk(layout, t0, trip_room, ActivityState.IDLE)
                    leave = arrive + rng.uniform(3.0, 6.0) * 60.0
                    back = builder.walk(layout, leave, bedroom, ActivityState.SLEEP)
                    if back >= wake:
                        break

        builder.add(wake, builder.room, ActivityState.IDLE)

        bedtime = day0 + np.clip(
            cfg.bedtime_hour * HOUR + rng.normal(0.0, 0.25 * HOUR),
            wake - day0 + HOUR,
            24.0 * HOUR - 60.0,
        )
        t = wake
        while True:
            t += max(60.0, rng.exponential(cfg.mean_dwell_minutes * 60.0))
            if t >= bedtime:
                break
            options = layout.neighbours(builder.room)
            if len(options) == 0:
                continue
            builder.add(t, int(rng.choice(options)), ActivityState.IDLE)

        worn_night = rng.random() >= cfg.unworn_night_prob
        if worn_night:
            sleep_start = builder.walk(layout, bedtime, bedroom, ActivityState.SLEEP)
        else:
            builder.add(bedtime, builder.room, ActivityState.UNWORN)
            sleep_start = bedtime

    schedule = builder.build(end)
    logger.debug("Sampled %d-day schedule with %d segments", days, len(schedule.starts))
    return schedule


def shadow_schedule(leader: Schedule, lag_s: float) -> Schedule:
    """Follower timeline repeating the leader's rooms lag_s seconds later."""
    if lag_s < 0:
        raise ValueError("lag_s must be >= 0")
    starts = leader.starts + lag_s
    starts[0] = 0.0
    return Schedule(starts, leader.rooms.copy(), leader.states.copy(), leader.end).truncated(leader.end)
