import json
from pathlib import Path

from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME, PipelineTracker
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.layout import layout_from_dict
from indoor_behaviour_ai.simulate.run_simulate import WALKTHROUGH, trace_dir
from indoor_behaviour_ai.simulate.trace_io import file_digest, read_manifest, read_trace_jsonl
from indoor_behaviour_ai.transform.feature_set import FeatureSet, featurize_trace

logger = get_logger("transform.run_featurize")

FEATURES_DIR = "features"
FEATURES_MANIFEST = "features.json"


def features_dir(config: RunConfig) -> Path:
    return config.output_dir / FEATURES_DIR


def run(config: RunConfig) -> dict[str, FeatureSet]:
    """Window every simulated trace into a feature CSV (features, activity, ground-truth label)."""
    with PipelineTracker("featurize", config.output_dir / DB_NAME, seed=config.seed) as tracker:
        source = trace_dir(config)
        manifest = read_manifest(source)
        layout = layout_from_dict(manifest["layout"])
        out_dir = features_dir(config)
        out_dir.mkdir(parents=True, exist_ok=True)

        feature_sets: dict[str, FeatureSet] = {}
        entries = {}
        skipped = 0
        for name, entry in manifest["traces"].items():
            trace = read_trace_jsonl(
                source / entry["path"],
                layout.rooms,
                layout.gateway_names,
                rssi_rate_hz=manifest["rssi_rate_hz"],
                accel_rate_hz=manifest["accel_rate_hz"],
                clock_offset_s=entry["clock_offset_s"],
            )
            fs = featurize_trace(trace, config.window, name=name)
            if len(fs) == 0:
                logger.warning("Trace %s is shorter than one window; skipped", name)
                skipped += 1
                continue
            path = fs.to_csv(out_dir / f"{name}.csv")
            feature_sets[name] = fs
            entries[name] = {
                "path": path.name,
                "sha256": file_digest(path),
                "clock_offset_s": fs.clock_offset_s,
                "windows": len(fs),
            }
            tracker.add_metric(f"{name}_mean_alpha", float(fs.alpha.mean()))

        if WALKTHROUGH not in feature_sets:
            raise InputValidationError("no usable walkthrough trace to featurize")

        (out_dir / FEATURES_MANIFEST).write_text(json.dumps({
            "seed": manifest["seed"],
            "layout": manifest["layout"],
            "window": {"length": config.window.length, "overlap": config.window.overlap},
            "sets": entries,
        }, indent=2, sort_keys=True), encoding="utf-8")

        windows = sum(len(fs) for fs in feature_sets.values())
        logger.info("Featurized %d trace(s), %d windows total", len(feature_sets), windows)
        tracker.add_metric("windows", windows)
        tracker.record(items_in=len(manifest["traces"]), items_out=len(feature_sets), items_skipped=skipped)
        return feature_sets


def load_feature_sets(config: RunConfig) -> tuple[dict[str, FeatureSet], dict]:
    """Feature sets plus the features manifest; featurizes the traces first if needed."""
    manifest_path = features_dir(config) / FEATURES_MANIFEST
    if not manifest_path.exists():
        logger.info("No features under %s; featurizing traces first", features_dir(config))
        run(config)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    rooms = tuple(room["name"] for room in manifest["layout"]["rooms"])
    sets = {
        name: FeatureSet.from_csv(
            features_dir(config) / entry["path"], rooms, clock_offset_s=entry["clock_offset_s"], name=name,
        )
        for name, entry in manifest["sets"].items()
    }
    return sets, manifest
