"""JSON model checkpoint: network, transitions, gate, feature scaler and label space."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from indoor_behaviour_ai.errors import InputValidationError, ModelDataMismatchError
from indoor_behaviour_ai.model.crf import CrfModel
from indoor_behaviour_ai.model.mlp import MlpParams
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.transform.scaling import Scaler
from indoor_behaviour_ai.transform.windowing import WindowSpec

logger = get_logger("model.checkpoint")

FORMAT_TAG = "indoor-crf/1"


@dataclass
class Checkpoint:
    model: CrfModel
    scaler: Scaler
    room_names: tuple[str, ...]
    gateway_names: tuple[str, ...]
    feature_names: tuple[str, ...]
    window: WindowSpec

    def check_compatible(self, feature_names, room_names) -> None:
        """Raise ModelDataMismatchError unless data share this model's features and rooms."""
        if tuple(feature_names) != self.feature_names:
            raise ModelDataMismatchError(
                f"features do not match the model: got {len(feature_names)} columns, "
                f"model expects {len(self.feature_names)} ({self.feature_names[:3]}...)"
            )
        if tuple(room_names) != self.room_names:
            raise ModelDataMismatchError(f"rooms {tuple(room_names)} differ from model rooms {self.room_names}")


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> Path:
    net = checkpoint.model.net
    payload = {
        "format": FORMAT_TAG,
        "layer_widths": net.widths,
        "tensors": {name: value.tolist() for name, value in sorted(net.tensors.items())},
        "running_mean": [m.tolist() for m in net.running_mean],
        "running_var": [v.tolist() for v in net.running_var],
        "log_tau": checkpoint.model.log_tau.tolist(),
        "gate_threshold": checkpoint.model.gate_threshold,
        "scaler": checkpoint.scaler.to_dict(),
        "rooms": list(checkpoint.room_names),
        "gateways": list(checkpoint.gateway_names),
        "feature_names": list(checkpoint.feature_names),
        "window": {"length": checkpoint.window.length, "overlap": checkpoint.window.overlap},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
    logger.info("Saved checkpoint to %s (%d rooms, %d features)", path, len(checkpoint.room_names), net.n_in)
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise InputValidationError(f"checkpoint not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputValidationError(f"checkpoint {path} is not valid JSON: {e}") from e
    if payload.get("format") != FORMAT_TAG:
        raise ModelDataMismatchError(f"unsupported checkpoint format {payload.get('format')!r}, expected {FORMAT_TAG!r}")

    net = MlpParams(
        tensors={name: np.asarray(value, dtype=float) for name, value in payload["tensors"].items()},
        running_mean=[np.asarray(m, dtype=float) for m in payload["running_mean"]],
        running_var=[np.asarray(v, dtype=float) for v in payload["running_var"]],
    )
    if net.widths != payload["layer_widths"]:
        raise ModelDataMismatchError(f"checkpoint tensors do not match declared widths {payload['layer_widths']}")
    model = CrfModel(
        net=net,
        log_tau=np.asarray(payload["log_tau"], dtype=float),
        gate_threshold=float(payload["gate_threshold"]),
    )
    return Checkpoint(
        model=model,
        scaler=Scaler.from_dict(payload["scaler"]),
        room_names=tuple(payload["rooms"]),
        gateway_names=tuple(payload["gateways"]),
        feature_names=tuple(payload["feature_names"]),
        window=WindowSpec(**payload["window"]),
    )
