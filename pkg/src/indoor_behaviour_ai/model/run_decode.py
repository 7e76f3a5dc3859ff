import json
from pathlib import Path

from indoor_behaviour_ai.errors import InputValidationError, ModelDataMismatchError, TraceChannelError
from indoor_behaviour_ai.evaluation.localisation_eval import print_score, score_labels
from indoor_behaviour_ai.model.checkpoint import Checkpoint, load_checkpoint
from indoor_behaviour_ai.model.run_train import MODEL_FILE, model_dir, write_json
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME, PipelineTracker
from indoor_behaviour_ai.pipeline import decode
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.run_simulate import WALKTHROUGH
from indoor_behaviour_ai.simulate.trace_io import MANIFEST_NAME, read_trace_jsonl
from indoor_behaviour_ai.transform.feature_set import FeatureSet, featurize_trace
from indoor_behaviour_ai.transform.run_featurize import FEATURES_MANIFEST, load_feature_sets

logger = get_logger("model.run_decode")

DECODE_DIR = "decode"


def decode_dir(config: RunConfig) -> Path:
    return config.output_dir / DECODE_DIR


def _sibling_entry(path: Path, manifest_name: str, key: str) -> dict:
    manifest_path = path.parent / manifest_name
    if not manifest_path.exists():
        return {}
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for entry in manifest.get(key, {}).values():
        if entry.get("path") == path.name:
            return {**manifest, **entry}
    return manifest


def load_input(path: Path, checkpoint: Checkpoint, config: RunConfig) -> FeatureSet:
    """A feature CSV, or a JSONL trace featurized with the model's window spec."""
    path = Path(path)
    if path.suffix == ".csv":
        entry = _sibling_entry(path, FEATURES_MANIFEST, "sets")
        return FeatureSet.from_csv(path, checkpoint.room_names, entry.get("clock_offset_s", 0.0), name=path.stem)
    if path.suffix == ".jsonl":
        entry = _sibling_entry(path, MANIFEST_NAME, "traces")
        try:
            trace = read_trace_jsonl(
                path,
                checkpoint.room_names,
                checkpoint.gateway_names,
                rssi_rate_hz=entry.get("rssi_rate_hz", config.simulation.rssi_rate_hz),
                accel_rate_hz=entry.get("accel_rate_hz", config.simulation.accel_rate_hz),
                clock_offset_s=entry.get("clock_offset_s", 0.0),
            )
        except TraceChannelError as e:
            raise ModelDataMismatchError(f"{path.name} does not match the model: {e}") from e
        return featurize_trace(trace, checkpoint.window, name=path.stem)
    raise InputValidationError(f"cannot decode {path}: expected a .csv feature file or a .jsonl trace")


def run(config: RunConfig, model_path: Path | None = None, inputs: list[Path] | None = None) -> list[Path]:
    """Viterbi-decode each input; writes one CSV per input and accuracy metrics when ground truth exists."""
    with PipelineTracker("decode", config.output_dir / DB_NAME, seed=config.seed) as tracker:
        checkpoint = load_checkpoint(model_path or model_dir(config) / MODEL_FILE)
        if inputs:
            feature_sets = [load_input(p, checkpoint, config) for p in inputs]
        else:
            sets, _ = load_feature_sets(config)
            feature_sets = [fs for name, fs in sets.items() if name != WALKTHROUGH]
        if not feature_sets:
            raise InputValidationError("nothing to decode")

        out_dir = decode_dir(config)
        out_dir.mkdir(parents=True, exist_ok=True)
        written, scores = [], {}
        for fs in feature_sets:
            frame = decode(checkpoint, fs)
            path = out_dir / f"{fs.name}.csv"
            frame.to_csv(path, index=False, float_format="%.10g")
            written.append(path)
            if fs.has_labels:
                score = score_labels(fs.labels, frame["label"].to_numpy(), checkpoint.room_names)
                scores[fs.name] = score.to_dict()
                tracker.add_metric(f"{fs.name}_accuracy", score.accuracy)
                print_score(score, title=fs.name.upper())

        if scores:
            write_json(out_dir / "decode_metrics.json", scores)
        tracker.record(items_in=len(feature_sets), items_out=len(written), items_skipped=0)
        return written


if __name__ == "__main__":
    run(RunConfig.from_dict(load_config()))
