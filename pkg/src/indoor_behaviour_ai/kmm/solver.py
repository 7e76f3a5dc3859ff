"""Kernel mean matching as a box- and sum-constrained convex QP.

    minimise   1/2 b'Kb - kappa'b
    subject to 0 <= b_i <= B,  |sum(b) - N| <= N * eps

solved by projected gradient descent with Armijo backtracking. The
projection onto the feasible set alternates box and sum-slab projections
(Dykstra) and finishes with an exact threshold shift, so every returned
iterate satisfies both constraints.
"""

from dataclasses import dataclass, field

import numpy as np

from indoor_behaviour_ai.errors import ConfigError
from indoor_behaviour_ai.kmm.kernel import RbfKernel
from indoor_behaviour_ai.monitoring.logger import get_logger

logger = get_logger("kmm.solver")

JITTER = 1e-8
ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60
DYKSTRA_ITERS = 100


class InfeasibleProblemError(ConfigError):
    pass


@dataclass(frozen=True)
class KmmProblem:
    K: np.ndarray
    kappa: np.ndarray
    bound: float
    epsilon: float

    def __post_init__(self):
        n = self.kappa.shape[0]
        if self.K.shape != (n, n):
            raise ValueError(f"K must be {n}x{n}, got {self.K.shape}")
        if not self.bound > 0:
            raise ValueError("bound B must be > 0")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def n_train(self) -> int:
        return self.kappa.shape[0]

    @property
    def sum_bounds(self) -> tuple[float, float]:
        n = self.n_train
        return n * (1.0 - self.epsilon), n * (1.0 + self.epsilon)

    def objective(self, beta: np.ndarray) -> float:
        return float(0.5 * beta @ self.K @ beta - self.kappa @ beta)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        return self.K @ beta - self.kappa

    def is_feasible(self, beta: np.ndarray, tol: float = 1e-9) -> bool:
        lo, hi = self.sum_bounds
        s = beta.sum()
        return bool(
            np.all(beta >= 0) and np.all(beta <= self.bound)
            and lo - tol * self.n_train <= s <= hi + tol * self.n_train
        )


@dataclass(frozen=True)
class SolverResult:
    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_trace: list[float] = field(default_factory=list)


def build_problem(
    train: np.ndarray, test: np.ndarray, bandwidth: float, bound: float, epsilon: float,
) -> KmmProblem:
    """Gram matrix over training windows (plus diagonal jitter) and the kappa vector."""
    train = np.atleast_2d(np.asarray(train, dtype=float))
    test = np.atleast_2d(np.asarray(test, dtype=float))
    if train.shape[0] == 0 or test.shape[0] == 0:
        raise ValueError("KMM needs non-empty train and test sets")
    kernel = RbfKernel(bandwidth)
    K = kernel(train, train)
    K[np.diag_indices_from(K)] += JITTER
    kappa = (train.shape[0] / test.shape[0]) * kernel(train, test).sum(axis=1)
    return KmmProblem(K=K, kappa=kappa, bound=float(bound), epsilon=float(epsilon))


def _project_slab(v: np.ndarray, lo: float, hi: float) -> np.ndarray:
    s = v.sum()
    if s < lo:
        return v + (lo - s) / v.size
    if s > hi:
        return v - (s - hi) / v.size
    return v


def _shift_into_slab(v: np.ndarray, bound: float, lo: float, hi: float) -> np.ndarray:
    """Exact projection onto box-and-slab: clip(v - lam, 0, B) with lam found by bisection."""
    x = np.clip(v, 0.0, bound)
    s = x.sum()
    if lo <= s <= hi:
        return x

    def total(lam: float) -> float:
        return float(np.clip(v - lam, 0.0, bound).sum())

    # `good` always satisfies the violated side; `bad` does not.
    if s < lo:
        good, bad, target_ok = float(v.min()) - bound, 0.0, lambda t: t >= lo
    else:
        good, bad, target_ok = float(v.max()), 0.0, lambda t: t <= hi
    for _ in range(200):
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            break
        if target_ok(total(mid)):
            good = mid
        else:
            bad = mid
    return np.clip(v - good, 0.0, bound)


def project_feasible(v: np.ndarray, bound: float, lo: float, hi: float, max_inner: int = DYKSTRA_ITERS) -> np.ndarray:
    """Dykstra alternating projections onto box then slab, then an exact feasibility finish."""
    x = np.asarray(v, dtype=float).copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_inner):
        y = np.clip(x + p, 0.0, bound)
        p = x + p - y
        x_new = _project_slab(y + q, lo, hi)
        q = y + q - x_new
        done = np.linalg.norm(x_new - x) <= 1e-12 * (1.0 + np.linalg.norm(x))
        x = x_new
        if done:
            break
    return _shift_into_slab(x, bound, lo, hi)


def solve(problem: KmmProblem, max_iter: int = 1000, tol: float = 1e-6) -> SolverResult:
    """Projected gradient descent with Armijo backtracking on the KMM QP."""
    n = problem.n_train
    lo, hi = problem.sum_bounds
    if problem.bound * n < lo:
        raise InfeasibleProblemError(
            f"B*N_tr = {problem.bound * n:.4g} is below N_tr*(1-eps) = {lo:.4g}; no feasible weights"
        )

    def project(v):
        return project_feasible(v, problem.bound, lo, hi)

    beta = project(np.ones(n))
    f = problem.objective(beta)
    trace = [f]
    lipschitz = float(np.abs(problem.K).sum(axis=1).max())
    step = 1.0 / max(lipschitz, 1e-12)
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        grad = problem.gradient(beta)
        pg_norm = float(np.linalg.norm(beta - project(beta - grad)))
        if pg_norm < tol:
            converged = True
            break

        t = step * 2.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            candidate = project(beta - t * grad)
            f_new = problem.objective(candidate)
            decrease = float(grad @ (candidate - beta))
            if f_new <= f + ARMIJO_C1 * min(decrease, 0.0) and f_new <= f:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            # Line search stalled: no representable descent left.
            converged = True
            break
        beta, f, step = candidate, f_new, t
        trace.append(f)

    if not converged:
        logger.warning("KMM solver hit max_iter=%d (N_tr=%d)", max_iter, n)
    logger.debug("KMM solve: %d iterations, objective %.6g", iteration, f)
    return SolverResult(beta=beta, objective=f, iterations=iteration, converged=converged, objective_trace=trace)
