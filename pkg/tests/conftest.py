from pathlib import Path

import numpy as np
import pytest

from indoor_behaviour_ai.simulate.layout import HouseLayout, load_layout
from indoor_behaviour_ai.simulate.types import SimConfig

ROOT = Path(__file__).resolve().parents[1]
DEMO_LAYOUT = ROOT / "data" / "layouts" / "demo_house.json"


@pytest.fixture
def demo_layout() -> HouseLayout:
    return load_layout(DEMO_LAYOUT)


@pytest.fixture
def quick_sim() -> SimConfig:
    """Short walkthrough; free-living runs should also pass horizon_hours."""
    return SimConfig(seed=11, walkthrough_minutes=6.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def line_layout(n_rooms: int = 3) -> HouseLayout:
    """Rooms in a row 4 m apart, one gateway per room, 1 m off-centre."""
    positions = np.array([[4.0 * k, 0.0] for k in range(n_rooms)])
    adjacency = np.zeros((n_rooms, n_rooms), dtype=bool)
    for k in range(n_rooms - 1):
        adjacency[k, k + 1] = adjacency[k + 1, k] = True
    return HouseLayout(
        rooms=tuple(f"room{k}" for k in range(n_rooms)),
        room_positions=positions,
        gateway_names=tuple(f"gw{k}" for k in range(n_rooms)),
        gateway_positions=positions + np.array([0.0, 1.0]),
        adjacency=adjacency,
        bedroom=0,
    ).validate()


@pytest.fixture
def make_line_layout():
    return line_layout
