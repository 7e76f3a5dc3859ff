"""End-to-end fit and decode on in-memory feature sets.

fit: scale -> KMM weights -> bedroom pseudo-labels -> CRF training.
decode: scale with the stored scaler -> Viterbi path + posterior score.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.kmm.weights import KmmConfig, WeightVector, estimate_weights
from indoor_behaviour_ai.model.checkpoint import Checkpoint
from indoor_behaviour_ai.model.crf import decode as crf_decode
from indoor_behaviour_ai.model.training import (
    LossTrace,
    TrainConfig,
    UnlabeledSequence,
    complement_labels,
    default_gate_threshold,
    init_model,
    train,
)
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.transform.feature_set import FeatureSet
from indoor_behaviour_ai.transform.scaling import Scaler
from indoor_behaviour_ai.transform.windowing import WindowSpec

logger = get_logger("pipeline")


@dataclass(frozen=True)
class Ablation:
    no_kmm: bool = False  # beta = 1
    no_ssl: bool = False  # L_ssl skipped
    no_gate: bool = False  # threshold 0, gate never closes

    @property
    def label(self) -> str:
        parts = [name for name in ("no_kmm", "no_ssl", "no_gate") if getattr(self, name)]
        return "+".join(parts) or "full"


@dataclass
class FitResult:
    checkpoint: Checkpoint
    weights: WeightVector
    trace: LossTrace
    pseudo_labels: int
    train_index: np.ndarray  # walkthrough windows the weights belong to (held-out ones excluded)
    metrics: dict[str, float] = field(default_factory=dict)


def _split_heldout(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_held = int(np.floor(fraction * n))
    if n - n_held < 2:
        n_held = 0
    return np.sort(order[n_held:]), np.sort(order[:n_held])


def fit(
    walkthrough: FeatureSet,
    free_living: list[FeatureSet],
    bedroom: int,
    kmm_config: KmmConfig,
    train_config: TrainConfig,
    window: WindowSpec,
    gateway_names: tuple[str, ...],
    ablation: Ablation = Ablation(),
) -> FitResult:
    if walkthrough.labels is None or not walkthrough.has_labels:
        raise InputValidationError("walkthrough windows must all carry room labels")
    for fs in free_living:
        if fs.feature_names != walkthrough.feature_names:
            raise InputValidationError(f"feature columns of {fs.name or 'free-living set'} differ from the walkthrough")

    train_idx, held_idx = _split_heldout(len(walkthrough), train_config.heldout_fraction, train_config.seed)
    scaler = Scaler.fit(walkthrough.X[train_idx])
    X_walk = scaler.transform(walkthrough.X)
    y_walk = walkthrough.labels
    unlabeled = [
        UnlabeledSequence(X=scaler.transform(fs.X), alpha=fs.alpha, clock_times=fs.clock_times)
        for fs in free_living if len(fs)
    ]

    if ablation.no_kmm or not unlabeled:
        weights = WeightVector.uniform(len(train_idx))
    else:
        test = np.vstack([seq.X for seq in unlabeled])
        weights = estimate_weights(X_walk[train_idx], test, kmm_config)

    X_parts, y_parts, beta_parts = [X_walk[train_idx]], [y_walk[train_idx]], [weights.beta]
    n_pseudo = 0
    if train_config.pseudo_label_cap > 0 and unlabeled:
        per_sequence = int(np.ceil(train_config.pseudo_label_cap / len(unlabeled)))
        for k, seq in enumerate(unlabeled):
            pseudo = complement_labels(
                seq.alpha, seq.clock_times, bedroom,
                night_span=train_config.night_span,
                wear_floor=train_config.wear_floor,
                min_activity_fraction=train_config.min_activity_fraction,
                cap=per_sequence,
                seed=train_config.seed + k,
            )
            X_parts.append(seq.X[pseudo.indices])
            y_parts.append(pseudo.labels.y)
            beta_parts.append(np.ones(len(pseudo.indices)))
            n_pseudo += len(pseudo.indices)

    if ablation.no_gate or not train_config.use_gate:
        threshold = 0.0
    elif train_config.gate_threshold is not None:
        threshold = train_config.gate_threshold
    else:
        threshold = default_gate_threshold(walkthrough.alpha, train_config.gate_percentile)

    rng = np.random.default_rng(train_config.seed)
    model = init_model(X_walk.shape[1], len(walkthrough.room_names), rng, hidden_width=train_config.hidden_width)
    model.gate_threshold = threshold
    config = replace(train_config, use_ssl=train_config.use_ssl and not ablation.no_ssl)
    heldout = (X_walk[held_idx], y_walk[held_idx]) if len(held_idx) else None

    logger.info(
        "Fitting [%s]: %d walkthrough windows (%d held out), %d pseudo-labels, %d unlabeled sequences, gate=%.4g",
        ablation.label, len(train_idx), len(held_idx), n_pseudo, len(unlabeled), threshold,
    )
    model, trace = train(
        model,
        np.vstack(X_parts),
        np.concatenate(y_parts),
        np.concatenate(beta_parts),
        unlabeled if config.use_ssl else [],
        config,
        heldout=heldout,
    )

    predicted = np.argmax(model.emissions(X_walk), axis=1)
    metrics = {
        "walkthrough_accuracy": float(np.mean(predicted == y_walk)),
        "heldout_accuracy": float(np.mean(predicted[held_idx] == y_walk[held_idx])) if len(held_idx) else float("nan"),
        "pseudo_labels": float(n_pseudo),
        "gate_threshold": float(threshold),
        "epochs_run": float(len(trace.epochs)),
        "best_epoch": float(trace.best_epoch),
        **weights.summary(),
    }
    checkpoint = Checkpoint(
        model=model,
        scaler=scaler,
        room_names=walkthrough.room_names,
        gateway_names=tuple(gateway_names),
        feature_names=walkthrough.feature_names,
        window=window,
    )
    return FitResult(
        checkpoint=checkpoint,
        weights=weights,
        trace=trace,
        pseudo_labels=n_pseudo,
        train_index=train_idx,
        metrics=metrics,
    )


def decode(checkpoint: Checkpoint, features: FeatureSet) -> pd.DataFrame:
    """One row per window: clock-time start, decoded room, posterior score, activity."""
    checkpoint.check_compatible(features.feature_names, features.room_names)
    if len(features) == 0:
        raise InputValidationError(f"{features.name or 'feature set'} has no windows to decode")
    X = checkpoint.scaler.transform(features.X)
    path, score = crf_decode(checkpoint.model, X, features.alpha)
    rooms = np.asarray(checkpoint.room_names, dtype=object)
    logger.info("Decoded %d windows of %s", len(path), features.name or "trace")
    return pd.DataFrame({
        "window_start": features.clock_times,
        "label": rooms[path.y],
        "score": score,
        "alpha": features.alpha,
    })
