import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from indoor_behaviour_ai.errors import LayoutError
from indoor_behaviour_ai.monitoring.logger import get_logger

logger = get_logger("simulate.layout")


@dataclass(frozen=True)
class HouseLayout:
    """Rooms, gateways and room-to-room reachability of one house."""

    rooms: tuple[str, ...]
    room_positions: np.ndarray  # (c, 2) metres
    gateway_names: tuple[str, ...]
    gateway_positions: np.ndarray  # (G, 2) metres
    adjacency: np.ndarray  # (c, c) bool, symmetric
    bedroom: int = 0
    bathroom: int | None = None
    name: str = "house"

    @property
    def n_rooms(self) -> int:
        return len(self.rooms)

    @property
    def n_gateways(self) -> int:
        return len(self.gateway_names)

    def neighbours(self, room: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[room])

    def room_index(self, name: str) -> int:
        try:
            return self.rooms.index(name)
        except ValueError:
            raise LayoutError(f"unknown room {name!r}") from None

    def validate(self) -> "HouseLayout":
        """Raise LayoutError unless the layout is simulatable.

        A single room is accepted: every trace is then labelled with that
        room and the CRF has one class.
        """
        c = self.n_rooms
        if c < 1:
            raise LayoutError("layout needs at least one room")
        if self.n_gateways < 1:
            raise LayoutError("layout needs at least one gateway")
        if len(set(self.rooms)) != c:
            raise LayoutError("room names must be unique")
        if self.room_positions.shape != (c, 2) or self.gateway_positions.shape != (self.n_gateways, 2):
            raise LayoutError("positions must be 2-D coordinates")
        if self.adjacency.shape != (c, c):
            raise LayoutError("adjacency must be c x c")
        if not np.array_equal(self.adjacency, self.adjacency.T):
            raise LayoutError("adjacency must be symmetric")
        if np.any(np.diag(self.adjacency)):
            raise LayoutError("a room cannot be adjacent to itself")
        unreachable = set(range(c)) - set(reachable_from(self, 0))
        if unreachable:
            names = sorted(self.rooms[i] for i in unreachable)
            raise LayoutError(f"rooms unreachable from {self.rooms[0]!r}: {names}")
        if not 0 <= self.bedroom < c:
            raise LayoutError("bedroom index out of range")
        return self


def reachable_from(layout: HouseLayout, start: int) -> list[int]:
    """Breadth-first visit order of every room reachable from start."""
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        room = queue.popleft()
        for nxt in np.flatnonzero(layout.adjacency[room]):
            nxt = int(nxt)
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return order


def shortest_path(layout: HouseLayout, src: int, dst: int) -> list[int]:
    """Rooms from src to dst inclusive along a fewest-hops route."""
    if src == dst:
        return [src]
    parent = {src: src}
    queue = deque([src])
    while queue:
        room = queue.popleft()
        for nxt in np.flatnonzero(layout.adjacency[room]):
            nxt = int(nxt)
            if nxt in parent:
                continue
            parent[nxt] = room
            if nxt == dst:
                path = [dst]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(nxt)
    raise LayoutError(f"no route from {layout.rooms[src]!r} to {layout.rooms[dst]!r}")


def layout_from_dict(payload: dict) -> HouseLayout:
    try:
        rooms = tuple(r["name"] for r in payload["rooms"])
        room_positions = np.array([r["position"] for r in payload["rooms"]], dtype=float).reshape(-1, 2)
        gateways = payload["gateways"]
        gateway_names = tuple(g["name"] for g in gateways)
        gateway_positions = np.array([g["position"] for g in gateways], dtype=float).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as e:
        raise LayoutError(f"malformed layout: {e}") from e

    index = {name: i for i, name in enumerate(rooms)}
    adjacency = np.zeros((len(rooms), len(rooms)), dtype=bool)
    for pair in payload.get("adjacency", []):
        try:
            a, b = (index[name] for name in pair)
        except KeyError as e:
            raise LayoutError(f"adjacency names unknown room {e}") from None
        adjacency[a, b] = adjacency[b, a] = True

    bedroom = index.get(payload.get("bedroom", rooms[0] if rooms else ""), None)
    if bedroom is None:
        raise LayoutError(f"bedroom {payload.get('bedroom')!r} is not a room")
    bathroom = index.get(payload["bathroom"]) if payload.get("bathroom") else None

    return HouseLayout(
        rooms=rooms,
        room_positions=room_positions,
        gateway_names=gateway_names,
        gateway_positions=gateway_positions,
        adjacency=adjacency,
        bedroom=bedroom,
        bathroom=bathroom,
        name=payload.get("name", "house"),
    ).validate()


def layout_to_dict(layout: HouseLayout) -> dict:
    rows, cols = np.nonzero(np.triu(layout.adjacency))
    payload = {
        "name": layout.name,
        "rooms": [
            {"name": n, "position": p.tolist()} for n, p in zip(layout.rooms, layout.room_positions)
        ],
        "gateways": [
            {"name": n, "position": p.tolist()}
            for n, p in zip(layout.gateway_names, layout.gateway_positions)
        ],
        "adjacency": [[layout.rooms[a], layout.rooms[b]] for a, b in zip(rows, cols)],
        "bedroom": layout.rooms[layout.bedroom],
    }
    if layout.bathroom is not None:
        payload["bathroom"] = layout.rooms[layout.bathroom]
    return payload


def load_layout(path: Path) -> HouseLayout:
    path = Path(path)
    if not path.exists():
        raise LayoutError(f"layout file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise LayoutError(f"layout {path} is not valid JSON: {e}") from e
    layout = layout_from_dict(payload)
    logger.info(
        "Loaded layout %s: %d rooms, %d gateways", layout.name, layout.n_rooms, layout.n_gateways,
    )
    return layout
