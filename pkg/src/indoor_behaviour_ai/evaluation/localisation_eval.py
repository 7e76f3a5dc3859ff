from dataclasses import asdict, dataclass, replace

import numpy as np
import pandas as pd

from indoor_behaviour_ai.kmm.weights import KmmConfig
from indoor_behaviour_ai.model.training import TrainConfig
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.pipeline import Ablation, decode, fit
from indoor_behaviour_ai.simulate.layout import HouseLayout
from indoor_behaviour_ai.simulate.traces import simulate_free_living, simulate_walkthrough
from indoor_behaviour_ai.simulate.types import Persona, SimConfig
from indoor_behaviour_ai.transform.feature_set import featurize_trace
from indoor_behaviour_ai.transform.windowing import WindowSpec

logger = get_logger("evaluation.localisation_eval")


@dataclass(frozen=True)
class LocalisationScore:
    n_windows: int
    accuracy: float
    majority_room: str
    majority_baseline: float
    per_room_recall: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


def score_labels(truth, predicted, room_names: tuple[str, ...]) -> LocalisationScore:
    """Per-window accuracy against ground truth, the majority-class baseline and per-room recall.

    truth/predicted are room names or room indices; rooms that never
    occur in the ground truth get a NaN recall.
    """
    truth = _as_codes(truth, room_names)
    predicted = _as_codes(predicted, room_names)
    if len(truth) != len(predicted):
        raise ValueError(f"length mismatch: {len(truth)} truths vs {len(predicted)} predictions")
    if len(truth) == 0:
        raise ValueError("nothing to score")

    counts = np.bincount(truth, minlength=len(room_names))
    majority = int(np.argmax(counts))
    recall = {}
    for k, room in enumerate(room_names):
        mask = truth == k
        recall[room] = float(np.mean(predicted[mask] == k)) if mask.any() else float("nan")
    return LocalisationScore(
        n_windows=len(truth),
        accuracy=float(np.mean(truth == predicted)),
        majority_room=room_names[majority],
        majority_baseline=float(counts[majority] / len(truth)),
        per_room_recall=recall,
    )


def _as_codes(labels, room_names) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.dtype.kind in "iu":
        return labels.astype(int)
    codes = pd.Categorical(labels, categories=list(room_names)).codes
    if np.any(codes < 0):
        raise ValueError(f"unknown room labels: {sorted(set(labels[codes < 0]))[:5]}")
    return codes.astype(int)


def print_score(score: LocalisationScore, title: str = "LOCALISATION"):
    print(f"\n{'═' * 60}")
    print(f"  {title} RESULTS")
    print(f"{'═' * 60}")
    print(f"  Windows:             {score.n_windows}")
    print(f"  Accuracy:            {score.accuracy:.1%}")
    print(f"  Majority baseline:   {score.majority_baseline:.1%}  ({score.majority_room})")
    print(f"  {'─' * 40}")
    for room, recall in score.per_room_recall.items():
        shown = "n/a" if np.isnan(recall) else f"{recall:.1%}"
        print(f"  recall {room:<20s} {shown:>8s}")
    print(f"{'═' * 60}\n")
    logger.info(
        "%s: accuracy=%.1f%%, majority baseline=%.1f%% over %d windows",
        title, score.accuracy * 100, score.majority_baseline * 100, score.n_windows,
    )


def compare_ablations(
    layout: HouseLayout,
    sim_config: SimConfig,
    window: WindowSpec,
    kmm_config: KmmConfig,
    train_config: TrainConfig,
    seeds: list[int],
    days: int = 3,
    ablations: tuple[Ablation, ...] = (Ablation(), Ablation(no_kmm=True, no_ssl=True)),
    horizon_hours: float | None = None,
) -> pd.DataFrame:
    """Simulate, fit and decode each ablation on every seed; one row per (seed, ablation).

    Accuracy is measured on the first resident's free-living windows,
    which carry simulator ground truth.
    """
    rows = []
    for seed in seeds:
        cfg = replace(sim_config, seed=seed)
        walk = featurize_trace(simulate_walkthrough(layout, cfg), window, name="walkthrough")
        resident = featurize_trace(
            simulate_free_living(layout, cfg, days, Persona.RESIDENT_A, horizon_hours=horizon_hours),
            window, name=Persona.RESIDENT_A.value,
        )
        for ablation in ablations:
            fitted = fit(
                walk, [resident.without_labels()], layout.bedroom,
                replace(kmm_config, seed=seed), replace(train_config, seed=seed),
                window, layout.gateway_names, ablation,
            )
            decoded = decode(fitted.checkpoint, resident)
            score = score_labels(resident.labels, decoded["label"].to_numpy(), layout.rooms)
            rows.append({
                "seed": seed,
                "ablation": ablation.label,
                "accuracy": score.accuracy,
                "majority_baseline": score.majority_baseline,
                "walkthrough_accuracy": fitted.metrics["walkthrough_accuracy"],
            })
            logger.info("seed %d [%s]: accuracy %.3f", seed, ablation.label, score.accuracy)

    frame = pd.DataFrame(rows)
    summary = frame.groupby("ablation", sort=False)["accuracy"].mean()
    for label, acc in summary.items():
        print(f"  {label:<20s} mean accuracy {acc:.1%} over {len(seeds)} seed(s)")
    return frame
