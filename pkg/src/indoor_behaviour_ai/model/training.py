"""Objective terms and the training loop for the gated CRF.

L = L_wsl + ssl_weight * L_ssl, where L_wsl is the importance-weighted
per-window cross-entropy on labelled windows and L_ssl the sequence NLL
of the model's own Viterbi decode on unlabelled segments.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import log_softmax

from indoor_behaviour_ai.errors import ConfigError, InputValidationError, TrainingDivergedError
from indoor_behaviour_ai.model.crf import CrfModel, LabelSequence, LabelSource, sequence_nll, viterbi
from indoor_behaviour_ai.model.mlp import AdamState, Mode, adam_step, backward, forward, init_mlp
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.simulate.types import SECONDS_PER_DAY

logger = get_logger("model.training")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-2
    hidden_width: int = 20
    ssl_weight: float = 1.0
    ssl_warmup_epochs: int = 20
    ssl_segment_length: int = 240
    ssl_segments_per_epoch: int = 8
    gate_threshold: float | None = None
    gate_percentile: float = 10.0
    heldout_fraction: float = 0.1
    patience: int = 30
    wear_floor: float = 0.002
    min_activity_fraction: float = 0.5
    pseudo_label_cap: int = 1000
    night_span: tuple[float, float] = (0.0, 6.0)
    use_ssl: bool = True
    use_gate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 2:
            raise ConfigError("training.epochs must be >= 1 and training.batch_size >= 2")
        if not self.learning_rate > 0:
            raise ConfigError("training.learning_rate must be > 0")
        if self.ssl_weight < 0:
            raise ConfigError("training.ssl_weight must be >= 0")
        if self.ssl_segment_length < 2 or self.ssl_segments_per_epoch < 1:
            raise ConfigError("SSL segments need length >= 2 and count >= 1")
        if not 0 <= self.heldout_fraction < 1:
            raise ConfigError("training.heldout_fraction must lie in [0, 1)")
        if not 0 <= self.gate_percentile <= 100:
            raise ConfigError("training.gate_percentile must lie in [0, 100]")
        if self.gate_threshold is not None and self.gate_threshold < 0:
            raise ConfigError("training.gate_threshold must be >= 0")
        if not 0 <= self.min_activity_fraction <= 1:
            raise ConfigError("training.min_activity_fraction must lie in [0, 1]")

    @classmethod
    def from_dict(cls, raw: dict, seed: int = 0) -> "TrainConfig":
        kwargs = {k: v for k, v in raw.items() if k in cls.__dataclass_fields__}
        if "night_span" in kwargs:
            kwargs["night_span"] = tuple(float(h) for h in kwargs["night_span"])
        kwargs.setdefault("seed", seed)
        return cls(**kwargs)


@dataclass(frozen=True)
class UnlabeledSequence:
    """One free-living recording: scaled features, activity and clock times per window."""

    X: np.ndarray
    alpha: np.ndarray
    clock_times: np.ndarray

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class PseudoLabels:
    indices: np.ndarray  # window indices into the source sequence
    labels: LabelSequence


@dataclass
class EpochLoss:
    epoch: int
    wsl: float
    ssl: float
    total: float
    heldout_nll: float
    train_accuracy: float


@dataclass
class LossTrace:
    epochs: list[EpochLoss] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(e) for e in self.epochs])

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path


def default_gate_threshold(walkthrough_alpha: np.ndarray, percentile: float = 10.0) -> float:
    """Activity percentile of the labelled tour; the tour always moves, so most windows pass."""
    alpha = np.asarray(walkthrough_alpha, dtype=float)
    if alpha.size == 0:
        return 0.0
    return float(np.percentile(alpha, percentile))


def init_model(n_features: int, n_classes: int, rng: np.random.Generator, hidden_width: int = 20) -> CrfModel:
    net = init_mlp(n_features, n_classes, rng, hidden_width=hidden_width)
    return CrfModel(net=net, log_tau=np.zeros((n_classes, n_classes)))


def weighted_cross_entropy(emissions: np.ndarray, y: np.ndarray, beta: np.ndarray) -> tuple[float, np.ndarray]:
    """sum_i beta_i * CE(softmax(e_i), y_i) / sum(beta), and its gradient w.r.t. the emissions."""
    emissions = np.asarray(emissions, dtype=float)
    y = np.asarray(y, dtype=int)
    beta = np.asarray(beta, dtype=float)
    if not (len(emissions) == len(y) == len(beta)):
        raise ValueError(f"length mismatch: {len(emissions)} windows, {len(y)} labels, {len(beta)} weights")
    total_weight = beta.sum()
    if total_weight <= 0:
        return 0.0, np.zeros_like(emissions)
    log_p = log_softmax(emissions, axis=1)
    rows = np.arange(len(y))
    loss = float(-(beta * log_p[rows, y]).sum() / total_weight)
    grad = np.exp(log_p)
    grad[rows, y] -= 1.0
    grad *= (beta / total_weight)[:, None]
    return loss, grad


def loss_wsl(model: CrfModel, X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted supervised loss on an iid mini-batch; gradients reach the emission net only."""
    if not (len(X) == len(y) == len(beta)):
        raise ValueError(f"length mismatch: {len(X)} windows, {len(y)} labels, {len(beta)} weights")
    emissions, cache = forward(model.net, X, Mode.TRAIN)
    loss, grad = weighted_cross_entropy(emissions, y, beta)
    return loss, backward(model.net, cache, grad)


@dataclass(frozen=True)
class SslResult:
    loss: float  # summed over the segments
    net_grads: dict[str, np.ndarray]
    grad_log_tau: np.ndarray
    targets: np.ndarray  # decoded y*, (B, T)


def loss_ssl(model: CrfModel, X: np.ndarray, alpha: np.ndarray) -> SslResult:
    """Hard-EM step: decode y* with the current model, then fit it as the target.

    X is (T, d) or (B, T, d). The decode uses the same TRAIN-mode emissions
    the gradient flows through; no gradient passes through the decode.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    B, T, d = X.shape
    if T < 2:
        raise ValueError("SSL segments need T >= 2")
    alpha = np.asarray(alpha, dtype=float).reshape(B, T)

    flat, cache = forward(model.net, X.reshape(-1, d), Mode.TRAIN, update_stats=False)
    e = flat.reshape(B, T, model.n_classes)
    targets = viterbi(e, alpha, model.log_tau, model.gate_threshold)
    result = sequence_nll(e, alpha, model.log_tau, model.gate_threshold, targets)
    net_grads = backward(model.net, cache, result.grad_emissions.reshape(-1, model.n_classes))
    return SslResult(
        loss=float(np.sum(result.nll)),
        net_grads=net_grads,
        grad_log_tau=result.grad_log_tau,
        targets=targets,
    )


def complement_labels(
    alpha: np.ndarray,
    clock_times: np.ndarray,
    bedroom: int,
    night_span: tuple[float, float] = (0.0, 6.0),
    wear_floor: float = 0.002,
    min_activity_fraction: float = 0.5,
    cap: int | None = None,
    seed: int = 0,
) -> PseudoLabels:
    """Bedroom pseudo-labels for worn night-time windows.

    A window qualifies when its start falls inside the night span (hours
    after midnight) and its activity exceeds the wear floor. A night whose
    qualifying share is below min_activity_fraction is dropped whole: the
    wearable was probably not worn. At most `cap` labels are kept, chosen
    uniformly with the given seed.
    """
    alpha = np.asarray(alpha, dtype=float)
    clock_times = np.asarray(clock_times, dtype=float)
    start_h, end_h = night_span
    hours = np.mod(clock_times, SECONDS_PER_DAY) / 3600.0
    day = np.floor(clock_times / SECONDS_PER_DAY).astype(np.int64)
    in_night = (hours >= start_h) & (hours < end_h)
    worn = alpha > wear_floor

    keep = np.zeros(len(alpha), dtype=bool)
    dropped_nights = 0
    for d in np.unique(day[in_night]):
        night = in_night & (day == d)
        if worn[night].mean() >= min_activity_fraction:
            keep |= night & worn
        else:
            dropped_nights += 1

    indices = np.flatnonzero(keep)
    if cap is not None and len(indices) > cap:
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(indices, size=cap, replace=False))
    if dropped_nights:
        logger.info("Skipped %d night(s) that look unworn", dropped_nights)
    if len(indices) == 0:
        logger.warning("No bedroom pseudo-labels emitted")
    return PseudoLabels(
        indices=indices,
        labels=LabelSequence(y=np.full(len(indices), bedroom, dtype=np.int64), source=LabelSource.PSEUDO),
    )


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled mini-batches; a trailing batch of one joins the previous batch."""
    order = rng.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def _ssl_segments(
    sequences: list[UnlabeledSequence], length: int, count: int, rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray] | None:
    """`count` equal-length random segments, drawn proportionally to sequence length."""
    usable = [s for s in sequences if len(s) >= 2]
    if not usable:
        return None
    length = min(length, min(len(s) for s in usable))
    sizes = np.array([len(s) - length + 1 for s in usable], dtype=float)
    picks = rng.choice(len(usable), size=count, p=sizes / sizes.sum())
    X, alpha = [], []
    for k in picks:
        seq = usable[k]
        start = int(rng.integers(0, len(seq) - length + 1))
        X.append(seq.X[start:start + length])
        alpha.append(seq.alpha[start:start + length])
    return np.stack(X), np.stack(alpha)


def _heldout_nll(model: CrfModel, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return float("nan")
    loss, _ = weighted_cross_entropy(model.emissions(X), y, np.ones(len(y)))
    return loss


def train(
    model: CrfModel,
    X: np.ndarray,
    y: np.ndarray,
    beta: np.ndarray,
    unlabeled: list[UnlabeledSequence],
    config: TrainConfig,
    heldout: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[CrfModel, LossTrace]:
    """Alternate weighted supervised epochs with batched hard-EM SSL steps.

    `heldout` (features, labels) drives early stopping; the parameters of
    the best held-out epoch are restored at the end. SSL starts after
    ssl_warmup_epochs, and early stopping only considers epochs from then
    on so the SSL term is never discarded wholesale.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    beta = np.asarray(beta, dtype=float)
    if not (len(X) == len(y) == len(beta)):
        raise InputValidationError(f"length mismatch: {len(X)} windows, {len(y)} labels, {len(beta)} weights")
    if len(X) < 2:
        raise InputValidationError("training needs at least 2 labelled windows")
    LabelSequence(y=y, source=LabelSource.WALKTHROUGH).validate(model.n_classes)

    rng = np.random.default_rng(config.seed)
    net_state = AdamState(learning_rate=config.learning_rate)
    tau_state = AdamState(learning_rate=config.learning_rate)
    use_ssl = config.use_ssl and config.ssl_weight > 0 and bool(unlabeled) and model.n_classes > 1
    first_tracked = config.ssl_warmup_epochs if use_ssl else 0
    trace = LossTrace()
    best_nll, best_model, since_best = np.inf, model.copy(), 0

    for epoch in range(config.epochs):
        wsl_sum, seen = 0.0, 0
        for idx in _batches(len(X), config.batch_size, rng):
            loss, grads = loss_wsl(model, X[idx], y[idx], beta[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"epoch {epoch}: non-finite supervised loss")
            model.net.tensors, _ = adam_step(model.net.tensors, grads, net_state)
            wsl_sum += loss * len(idx)
            seen += len(idx)

        ssl_loss = 0.0
        if use_ssl and epoch >= config.ssl_warmup_epochs:
            segments = _ssl_segments(unlabeled, config.ssl_segment_length, config.ssl_segments_per_epoch, rng)
            if segments is not None:
                seg_X, seg_alpha = segments
                result = loss_ssl(model, seg_X, seg_alpha)
                scale = config.ssl_weight / seg_alpha.size
                ssl_loss = result.loss * scale
                if not np.isfinite(ssl_loss):
                    raise TrainingDivergedError(f"epoch {epoch}: non-finite SSL loss")
                net_grads = {k: g * scale for k, g in result.net_grads.items()}
                model.net.tensors, _ = adam_step(model.net.tensors, net_grads, net_state)
                tau, _ = adam_step({"log_tau": model.log_tau}, {"log_tau": result.grad_log_tau * scale}, tau_state)
                model.log_tau = tau["log_tau"]

        if not model.net.is_finite():
            raise TrainingDivergedError(f"epoch {epoch}: network parameters became non-finite")

        correct = int((np.argmax(model.emissions(X), axis=1) == y).sum())
        heldout_nll = _heldout_nll(model, *heldout) if heldout is not None else float("nan")
        wsl = wsl_sum / seen
        trace.epochs.append(EpochLoss(
            epoch=epoch, wsl=wsl, ssl=ssl_loss, total=wsl + ssl_loss,
            heldout_nll=heldout_nll, train_accuracy=correct / len(y),
        ))

        if heldout is None or np.isnan(heldout_nll):
            trace.best_epoch = epoch
            continue
        if epoch < first_tracked:
            continue
        if heldout_nll < best_nll:
            best_nll, best_model, since_best = heldout_nll, model.copy(), 0
            trace.best_epoch = epoch
        else:
            since_best += 1
            if since_best > config.patience:
                trace.stopped_early = True
                logger.info("Early stop at epoch %d (best %d, held-out NLL %.4f)", epoch, trace.best_epoch, best_nll)
                break

    if heldout is not None and np.isfinite(best_nll):
        model = best_model
    last = trace.epochs[-1]
    logger.info(
        "Training done: %d epochs, best epoch %d, wsl=%.4f, ssl=%.4f, train accuracy=%.3f",
        len(trace.epochs), trace.best_epoch, last.wsl, last.ssl, last.train_accuracy,
    )
    return model, trace
