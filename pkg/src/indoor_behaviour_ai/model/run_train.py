import json
import math
from pathlib import Path

from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.model.checkpoint import save_checkpoint
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME, PipelineTracker
from indoor_behaviour_ai.pipeline import Ablation, fit
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.layout import layout_from_dict
from indoor_behaviour_ai.simulate.run_simulate import WALKTHROUGH
from indoor_behaviour_ai.transform.run_featurize import load_feature_sets

logger = get_logger("model.run_train")

MODEL_DIR = "model"
MODEL_FILE = "model.json"


def model_dir(config: RunConfig) -> Path:
    return config.output_dir / MODEL_DIR


def _nan_to_none(value):
    if isinstance(value, dict):
        return {k: _nan_to_none(v) for k, v in value.items()}
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def write_json(path: Path, payload: dict) -> Path:
    """Sorted, indented JSON with NaN written as null."""
    path.write_text(json.dumps(_nan_to_none(payload), indent=2, sort_keys=True), encoding="utf-8")
    return path


def run(config: RunConfig, ablation: Ablation = Ablation()) -> Path:
    """Features -> KMM -> CRF training; writes the checkpoint, loss trace, weights and metrics."""
    with PipelineTracker("train", config.output_dir / DB_NAME, seed=config.seed) as tracker:
        sets, manifest = load_feature_sets(config)
        if WALKTHROUGH not in sets:
            raise InputValidationError("training needs the walkthrough feature set")
        layout = layout_from_dict(manifest["layout"])
        walkthrough = sets[WALKTHROUGH]
        residents = [fs.without_labels() for name, fs in sets.items() if name != WALKTHROUGH]

        result = fit(
            walkthrough,
            residents,
            layout.bedroom,
            config.kmm,
            config.training,
            config.window,
            layout.gateway_names,
            ablation,
        )

        out_dir = model_dir(config)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = save_checkpoint(result.checkpoint, out_dir / MODEL_FILE)
        result.trace.to_csv(out_dir / "loss_trace.csv")
        result.weights.to_csv(out_dir / "weights.csv", walkthrough.window_starts[result.train_index])
        write_json(out_dir / "metrics.json", {
            "seed": config.seed,
            "ablation": ablation.label,
            **result.metrics,
        })

        for name, value in result.metrics.items():
            if not math.isnan(value):
                tracker.add_metric(name, value)
        tracker.check_drift("beta_mean", result.metrics["beta_mean"], config.drift_threshold_pct)
        tracker.record(items_in=len(walkthrough) + sum(len(r) for r in residents), items_out=1, items_skipped=0)
        return checkpoint_path


if __name__ == "__main__":
    run(RunConfig.from_dict(load_config()))
