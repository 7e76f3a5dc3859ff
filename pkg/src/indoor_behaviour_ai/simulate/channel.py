"""Log-distance path-loss channel with Gaussian shadowing and packet drops."""

import numpy as np

from indoor_behaviour_ai.simulate.types import (
    MISSING,
    RSSI_CEILING_DBM,
    RSSI_FLOOR_DBM,
    RSSI_MARGIN_DBM,
    SimConfig,
)


def path_loss_rssi(distance, cfg: SimConfig):
    """Noise-free received power (dBm) at `distance` metres."""
    return cfg.ref_rssi_at_1m - 10.0 * cfg.path_loss_exponent * np.log10(distance)


def drop_probability(distance, cfg: SimConfig):
    return np.minimum(1.0, cfg.drop_base_prob + cfg.drop_distance_coeff * np.asarray(distance))


def clamp_rssi(value):
    return np.clip(value, RSSI_FLOOR_DBM + RSSI_MARGIN_DBM, RSSI_CEILING_DBM - RSSI_MARGIN_DBM)


def rssi_from_distances(
    distances: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator,
    offset: float = 0.0,
) -> np.ndarray:
    """Vectorised channel: one reading per distance, NaN where the packet was lost.

    The drop decision is drawn before the shadowing term, matching
    rssi_from_position element for element.
    """
    distances = np.asarray(distances, dtype=float)
    if np.any(distances <= 0):
        raise ValueError("transmitter and gateway must not coincide")
    dropped = rng.random(distances.shape) < drop_probability(distances, cfg)
    value = path_loss_rssi(distances, cfg) + offset
    if cfg.noise_std > 0:
        value = value + rng.normal(0.0, cfg.noise_std, distances.shape)
    value = clamp_rssi(value)
    return np.where(dropped, np.nan, value)


def rssi_from_position(
    pos,
    gw,
    cfg: SimConfig,
    rng: np.random.Generator,
    offset: float = 0.0,
) -> float | None:
    """RSSI in dBm seen by the gateway at `gw` from a wearable at `pos`, or MISSING."""
    distance = float(np.linalg.norm(np.asarray(pos, dtype=float) - np.asarray(gw, dtype=float)))
    if distance <= 0:
        raise ValueError("transmitter and gateway must not coincide")
    if rng.random() < drop_probability(distance, cfg):
        return MISSING
    value = path_loss_rssi(distance, cfg) + offset
    if cfg.noise_std > 0:
        value += rng.normal(0.0, cfg.noise_std)
    return float(clamp_rssi(value))
