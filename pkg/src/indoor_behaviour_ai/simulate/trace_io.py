"""JSON-lines trace files: one record per sample, MISSING written as null."""

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from indoor_behaviour_ai.errors import InputValidationError, TraceChannelError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.types import AXES, ActivityState, GroundTruthTrace, Persona, Schedule

logger = get_logger("simulate.trace_io")

MANIFEST_NAME = "manifest.json"
CHUNK_ROWS = 100_000


def _write_frame(fh, frame: pd.DataFrame):
    text = frame.to_json(orient="records", lines=True, double_precision=10)
    fh.write(text if text.endswith("\n") else text + "\n")


def write_trace_jsonl(trace: GroundTruthTrace, path: Path) -> Path:
    """Write RSSI records (one per gateway slot) followed by accelerometer records (one per axis)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rooms = np.asarray(trace.room_names, dtype=object)
    gateways = np.asarray(trace.gateway_names, dtype=object)
    n_gw = len(gateways)

    with open(path, "w", encoding="utf-8") as fh:
        for lo in range(0, trace.rssi.shape[0], CHUNK_ROWS):
            block = trace.rssi[lo:lo + CHUNK_ROWS]
            t = (np.arange(lo, lo + block.shape[0]) / trace.rssi_rate_hz).round(3)
            labels = rooms[trace.labels_at(t)]
            _write_frame(fh, pd.DataFrame({
                "t": np.repeat(t, n_gw),
                "kind": "rssi",
                "gateway": np.tile(gateways, len(t)),
                "value": block.ravel(),
                "label": np.repeat(labels, n_gw),
                "persona": trace.persona.value,
            }))
        for lo in range(0, trace.accel.shape[0], CHUNK_ROWS):
            block = trace.accel[lo:lo + CHUNK_ROWS]
            t = (np.arange(lo, lo + block.shape[0]) / trace.accel_rate_hz).round(3)
            labels = rooms[trace.labels_at(t)]
            _write_frame(fh, pd.DataFrame({
                "t": np.repeat(t, 3),
                "kind": "accel",
                "axis": np.tile(np.asarray(AXES, dtype=object), len(t)),
                "value": block.ravel(),
                "label": np.repeat(labels, 3),
                "persona": trace.persona.value,
            }))

    logger.info(
        "Wrote trace %s (%d RSSI slots, %d accel samples)", path.name, trace.rssi.shape[0], trace.accel.shape[0],
    )
    return path


def _codes(values: pd.Series, categories, what: str, error=TraceChannelError) -> np.ndarray:
    codes = pd.Categorical(values, categories=list(categories)).codes
    if np.any(codes < 0):
        unknown = sorted(set(values[codes < 0].astype(str)))[:5]
        raise error(f"unknown {what} in trace: {unknown}")
    return codes


def read_trace_jsonl(
    path: Path,
    room_names: tuple[str, ...],
    gateway_names: tuple[str, ...],
    rssi_rate_hz: float = 5.0,
    accel_rate_hz: float = 20.0,
    clock_offset_s: float = 0.0,
) -> GroundTruthTrace:
    """Rebuild nominal-grid streams from a JSON-lines trace.

    Timestamps are snapped to the nearest slot; slots without a record are
    MISSING. Schedule states are not stored in the file and read back as IDLE.
    Raises TraceChannelError when the file names a gateway or room outside
    the given ones, or has no record at all for one of `gateway_names`.
    """
    path = Path(path)
    if not path.exists():
        raise InputValidationError(f"trace file not found: {path}")

    rssi_parts, accel_parts, label_parts = [], [], []
    persona = None
    reader = pd.read_json(
        path, lines=True, chunksize=CHUNK_ROWS * 3, dtype={"t": float, "value": float}, convert_dates=False,
    )
    with reader:
        for chunk in reader:
            if persona is None and len(chunk) and "persona" in chunk:
                persona = Persona(chunk["persona"].iloc[0])
            rssi = chunk[chunk["kind"] == "rssi"]
            if len(rssi):
                slot = np.rint(rssi["t"].to_numpy() * rssi_rate_hz).astype(np.int64)
                gw = _codes(rssi["gateway"], gateway_names, "gateway")
                rssi_parts.append((slot, gw, rssi["value"].to_numpy(dtype=float)))
                label_parts.append((slot, _codes(rssi["label"], room_names, "room label")))
            accel = chunk[chunk["kind"] == "accel"]
            if len(accel):
                slot = np.rint(accel["t"].to_numpy() * accel_rate_hz).astype(np.int64)
                axis = _codes(accel["axis"], AXES, "axis", InputValidationError)
                accel_parts.append((slot, axis, accel["value"].to_numpy(dtype=float)))

    if not rssi_parts:
        raise InputValidationError(f"trace {path} holds no RSSI records")
    seen = np.zeros(len(gateway_names), dtype=bool)
    for _, gw, _ in rssi_parts:
        seen[gw] = True
    if not seen.all():
        absent = [name for name, ok in zip(gateway_names, seen) if not ok]
        raise TraceChannelError(f"trace {path.name} has no records for gateways {absent}")

    n_rssi = max(int(s.max()) for s, _, _ in rssi_parts) + 1
    rssi_grid = np.full((n_rssi, len(gateway_names)), np.nan)
    for slot, gw, value in rssi_parts:
        rssi_grid[slot, gw] = value

    n_accel = max((int(s.max()) for s, _, _ in accel_parts), default=-1) + 1
    accel_grid = np.full((n_accel, 3), np.nan)
    for slot, axis, value in accel_parts:
        accel_grid[slot, axis] = value

    labels = np.full(n_rssi, -1, dtype=int)
    for slot, code in label_parts:
        labels[slot] = code
    # Slots without any record inherit the previous label.
    labels = pd.Series(labels).replace(-1, np.nan).ffill().bfill().fillna(0).to_numpy(dtype=int)
    change = np.flatnonzero(np.diff(labels)) + 1
    starts_idx = np.concatenate([[0], change])
    schedule = Schedule(
        starts=starts_idx / rssi_rate_hz,
        rooms=labels[starts_idx],
        states=np.full(len(starts_idx), int(ActivityState.IDLE)),
        end=n_rssi / rssi_rate_hz,
    )

    logger.info("Read trace %s: %d RSSI slots, %d accel samples", path.name, n_rssi, n_accel)
    return GroundTruthTrace(
        rssi=rssi_grid,
        accel=accel_grid,
        schedule=schedule,
        persona=persona or Persona.RESIDENT_A,
        room_names=tuple(room_names),
        gateway_names=tuple(gateway_names),
        rssi_rate_hz=rssi_rate_hz,
        accel_rate_hz=accel_rate_hz,
        clock_offset_s=clock_offset_s,
    )


def file_digest(path: Path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            sha.update(block)
    return sha.hexdigest()


def write_manifest(out_dir: Path, payload: dict) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_manifest(data_dir: Path) -> dict:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise InputValidationError(f"no {MANIFEST_NAME} in {data_dir}")
    return json.loads(path.read_text(encoding="utf-8"))
