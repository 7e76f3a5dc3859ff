"""Linear-chain CRF over room labels with activity-gated transitions.

Potentials are additive in log space:

    phi_t(y_t, y_{t-1}) = e[t, y_t] + T_t[y_{t-1}, y_t]

where e are the network emissions and T_t is log_tau while the activity
alpha[t] >= threshold, otherwise the "stay" matrix (0 on the diagonal,
NEG_INF elsewhere) that forbids a room change. alpha[t] gates the
transition from t-1 into t; t = 0 has no transition and a flat initial
factor. All recursions accept a leading batch axis: emissions (B, T, c),
alpha (B, T).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from indoor_behaviour_ai.model.mlp import MlpParams, Mode, forward

NEG_INF = -1e9


class LabelSource(str, Enum):
    WALKTHROUGH = "WALKTHROUGH"
    PSEUDO = "PSEUDO"
    DECODED = "DECODED"


@dataclass(frozen=True)
class LabelSequence:
    y: np.ndarray
    source: LabelSource

    def __len__(self) -> int:
        return len(self.y)

    def validate(self, n_classes: int) -> "LabelSequence":
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= n_classes):
            raise ValueError(f"labels must lie in [0, {n_classes}), got range [{self.y.min()}, {self.y.max()}]")
        return self


@dataclass
class CrfModel:
    net: MlpParams
    log_tau: np.ndarray  # [previous room, current room]
    gate_threshold: float = 0.0

    def __post_init__(self):
        c = self.net.n_out
        if self.log_tau.shape != (c, c):
            raise ValueError(f"log_tau must be {c}x{c}, got {self.log_tau.shape}")
        if not np.all(np.isfinite(self.log_tau)):
            raise ValueError("log_tau entries must be finite")

    @property
    def n_classes(self) -> int:
        return self.net.n_out

    def emissions(self, X: np.ndarray) -> np.ndarray:
        """EVAL-mode emissions for one (T, d) sequence or a (B, T, d) batch."""
        X = np.asarray(X, dtype=float)
        flat, _ = forward(self.net, X.reshape(-1, X.shape[-1]), Mode.EVAL)
        return flat.reshape(*X.shape[:-1], self.n_classes)

    def copy(self) -> "CrfModel":
        return CrfModel(net=self.net.copy(), log_tau=self.log_tau.copy(), gate_threshold=self.gate_threshold)


def stay_matrix(n_classes: int) -> np.ndarray:
    stay = np.full((n_classes, n_classes), NEG_INF)
    np.fill_diagonal(stay, 0.0)
    return stay


def gated_transition(log_tau: np.ndarray, alpha_t: float, threshold: float) -> np.ndarray:
    """log_tau when alpha_t >= threshold, else the forced self-transition matrix."""
    if alpha_t < 0:
        raise ValueError(f"activity level must be >= 0, got {alpha_t}")
    if alpha_t >= threshold:
        return log_tau
    return stay_matrix(log_tau.shape[0])


def _as_batch(emissions, alpha) -> tuple[np.ndarray, np.ndarray, bool]:
    e = np.asarray(emissions, dtype=float)
    single = e.ndim == 2
    if single:
        e = e[None]
    if e.ndim != 3:
        raise ValueError(f"emissions must be (T, c) or (B, T, c), got shape {e.shape}")
    if e.shape[1] == 0:
        raise ValueError("sequence length T must be >= 1")
    a = np.asarray(alpha, dtype=float).reshape(e.shape[:2])
    return e, a, single


def gated_transitions(log_tau: np.ndarray, alpha: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-step log-transition matrices (B, T, c, c) and the open-gate mask (B, T).

    Step 0 carries zeros and a closed gate; it is never used.
    """
    open_gate = alpha >= threshold
    open_gate[:, 0] = False
    trans = np.where(open_gate[..., None, None], log_tau, stay_matrix(log_tau.shape[0]))
    trans[:, 0] = 0.0
    return trans, open_gate


def _forward_table(e: np.ndarray, trans: np.ndarray) -> np.ndarray:
    B, T, c = e.shape
    table = np.empty((B, T, c))
    table[:, 0] = e[:, 0]
    for t in range(1, T):
        table[:, t] = logsumexp(table[:, t - 1, :, None] + trans[:, t], axis=1) + e[:, t]
    return table


def _backward_table(e: np.ndarray, trans: np.ndarray) -> np.ndarray:
    B, T, c = e.shape
    table = np.empty((B, T, c))
    table[:, T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        table[:, t] = logsumexp(trans[:, t + 1] + (e[:, t + 1] + table[:, t + 1])[:, None, :], axis=2)
    return table


def log_forward(emissions, alpha, log_tau: np.ndarray, threshold: float) -> np.ndarray | float:
    """log Z(X) per sequence (a float for a single (T, c) sequence)."""
    e, a, single = _as_batch(emissions, alpha)
    trans, _ = gated_transitions(log_tau, a, threshold)
    log_z = logsumexp(_forward_table(e, trans)[:, -1], axis=1)
    return float(log_z[0]) if single else log_z


def posterior_marginals(emissions, alpha, log_tau: np.ndarray, threshold: float) -> np.ndarray:
    """P(y_t = j | X) for every step, by forward-backward."""
    e, a, single = _as_batch(emissions, alpha)
    trans, _ = gated_transitions(log_tau, a, threshold)
    fwd = _forward_table(e, trans)
    bwd = _backward_table(e, trans)
    log_z = logsumexp(fwd[:, -1], axis=1)
    marginals = np.exp(fwd + bwd - log_z[:, None, None])
    return marginals[0] if single else marginals


def path_score(emissions, alpha, log_tau: np.ndarray, threshold: float, y) -> np.ndarray | float:
    """Unnormalised log-score sum_t phi_t along label path(s) y."""
    e, a, single = _as_batch(emissions, alpha)
    y = np.asarray(y, dtype=int).reshape(e.shape[:2])
    trans, _ = gated_transitions(log_tau, a, threshold)
    emit = np.take_along_axis(e, y[..., None], axis=2)[..., 0].sum(axis=1)
    rows = np.arange(e.shape[0])[:, None]
    steps = np.arange(1, e.shape[1])[None, :]
    moves = trans[rows, steps, y[:, :-1], y[:, 1:]].sum(axis=1)
    score = emit + moves
    return float(score[0]) if single else score


@dataclass(frozen=True)
class NllResult:
    nll: np.ndarray | float  # per sequence
    grad_emissions: np.ndarray  # same shape as the emissions
    grad_log_tau: np.ndarray  # (c, c), summed over the batch


def sequence_nll(emissions, alpha, log_tau: np.ndarray, threshold: float, y) -> NllResult:
    """-log P(y | X) = log Z - score(y), with gradients w.r.t. emissions and log_tau."""
    e, a, single = _as_batch(emissions, alpha)
    B, T, c = e.shape
    y = np.asarray(y, dtype=int).reshape(B, T)
    if y.min() < 0 or y.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")

    trans, open_gate = gated_transitions(log_tau, a, threshold)
    fwd = _forward_table(e, trans)
    bwd = _backward_table(e, trans)
    log_z = logsumexp(fwd[:, -1], axis=1)

    onehot = np.zeros_like(e)
    np.put_along_axis(onehot, y[..., None], 1.0, axis=2)
    marginals = np.exp(fwd + bwd - log_z[:, None, None])
    grad_e = marginals - onehot

    grad_tau = np.zeros_like(log_tau)
    if T > 1:
        # Pairwise marginals P(y_{t-1}=i, y_t=j | X) on open-gate steps only.
        pair = fwd[:, :-1, :, None] + trans[:, 1:] + (e[:, 1:] + bwd[:, 1:])[:, :, None, :]
        pair = np.exp(pair - log_z[:, None, None, None])
        mask = open_gate[:, 1:]
        grad_tau += pair[mask].sum(axis=0)
        observed = np.zeros((c, c))
        np.add.at(observed, (y[:, :-1][mask], y[:, 1:][mask]), 1.0)
        grad_tau -= observed

    score = path_score(e, a, log_tau, threshold, y)
    nll = log_z - score
    if single:
        return NllResult(nll=float(nll[0]), grad_emissions=grad_e[0], grad_log_tau=grad_tau)
    return NllResult(nll=nll, grad_emissions=grad_e, grad_log_tau=grad_tau)


def viterbi(emissions, alpha, log_tau: np.ndarray, threshold: float, source: LabelSource = LabelSource.DECODED):
    """MAP label path(s); ties go to the lower label index.

    Returns a LabelSequence for a single sequence, or a (B, T) array of
    labels for a batch.
    """
    e, a, single = _as_batch(emissions, alpha)
    B, T, c = e.shape
    trans, _ = gated_transitions(log_tau, a, threshold)
    delta = e[:, 0].copy()
    backptr = np.zeros((B, T, c), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, :, None] + trans[:, t]
        backptr[:, t] = np.argmax(cand, axis=1)
        delta = np.take_along_axis(cand, backptr[:, t][:, None, :], axis=1)[:, 0] + e[:, t]

    path = np.empty((B, T), dtype=np.int64)
    path[:, T - 1] = np.argmax(delta, axis=1)
    for t in range(T - 1, 0, -1):
        path[:, t - 1] = backptr[np.arange(B), t, path[:, t]]
    if single:
        return LabelSequence(y=path[0], source=LabelSource(source))
    return path


def decode(model: CrfModel, X: np.ndarray, alpha: np.ndarray) -> tuple[LabelSequence, np.ndarray]:
    """Viterbi path of one sequence plus the posterior probability of each decoded label."""
    e = model.emissions(X)
    path = viterbi(e, alpha, model.log_tau, model.gate_threshold)
    marginals = posterior_marginals(e, alpha, model.log_tau, model.gate_threshold)
    score = marginals[np.arange(len(path)), path.y]
    return path, score
