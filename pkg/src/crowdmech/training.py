"""Quality-aware training mechanism.

Workers alternate between a *working* state, where each submission is
validated by a three-worker consensus (probability ``1 - beta_w``) or by a
spot check (probability ``beta_w``, sampled with ``alpha_w``), and a
*training* state, where they solve ``n_tasks`` unpaid tasks that are graded
with probability ``alpha_t`` and must all be judged correct to return.  Each
slot a worker stays in the system with probability ``delta``.

A worker's problem is a two-state discounted MDP whose actions are the
qualities ``(q_w, q_t)`` played in each state.  All policy searches here run
over stationary, deterministic action pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError

DEFAULT_GRID = 100
VI_TOL = 1e-9


@dataclass(frozen=True)
class TrainingParams:
    beta_w: float = 0.0
    alpha_w: float = 1.0
    r: float = 1.0
    alpha_t: float = 1.0
    n_tasks: int = 1
    delta: float = 0.9
    eps: float = 0.01
    d: float = 10.0
    gamma: float = 1.0
    pi0_w: float = 1.0

    def __post_init__(self):
        for name in ("beta_w", "alpha_w", "alpha_t", "pi0_w"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
        if int(self.n_tasks) != self.n_tasks or self.n_tasks < 1:
            raise DomainError(f"n_tasks must be a positive integer, got {self.n_tasks!r}")
        object.__setattr__(self, "n_tasks", int(self.n_tasks))
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not 0.0 <= self.eps < 0.5:
            raise DomainError(f"eps must lie in [0, 0.5), got {self.eps!r}")
        if not self.d >= 0:
            raise DomainError(f"validation cost d must be nonnegative, got {self.d!r}")
        if not self.r >= 0:
            raise DomainError(f"reward must be nonnegative, got {self.r!r}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")

    @property
    def pass_threshold(self) -> int:
        """Correct training answers needed to pass; always all of them."""
        return self.n_tasks


@dataclass(frozen=True)
class ActionPair:
    q_w: float
    q_t: float

    def __post_init__(self):
        if not (0.0 <= self.q_w <= 1.0 and 0.0 <= self.q_t <= 1.0):
            raise DomainError(f"actions must lie in [0, 1], got ({self.q_w!r}, {self.q_t!r})")


@dataclass(frozen=True)
class UtilityPair:
    u_work: float
    u_train: float


@dataclass
class ValueIterationResult:
    values: UtilityPair
    policy: ActionPair
    iterations: int
    sup_diffs: np.ndarray


@dataclass
class EquilibriumReport:
    action: ActionPair
    is_sne: bool
    utilities: UtilityPair
    best_response: ActionPair
    utility_loss_curve: np.ndarray = field(repr=False)


# -- transition probabilities and immediate utilities ---------------------

def p_work_accept(q_tilde_w, q_w, p: TrainingParams):
    qt = np.asarray(q_tilde_w, dtype=float)
    q = np.asarray(q_w, dtype=float)
    consensus = q * (qt * qt + 2.0 * qt * (1.0 - qt))
    checked = (1.0 - 2.0 * p.eps) * q + p.eps
    out = (1.0 - p.beta_w) * consensus + p.beta_w * (1.0 - p.alpha_w) + p.beta_w * p.alpha_w * checked
    return float(out) if out.ndim == 0 else out


def p_train_pass(q_t, p: TrainingParams):
    q = np.asarray(q_t, dtype=float)
    out = (1.0 - p.alpha_t) + p.alpha_t * ((1.0 - 2.0 * p.eps) * q + p.eps) ** p.n_tasks
    return float(out) if out.ndim == 0 else out


def immediate_utilities(q_tilde_w, q_w, q_t, p: TrainingParams, c):
    work = p.r * p_work_accept(q_tilde_w, q_w, p) - c.cost(q_w)
    train = -p.n_tasks * c.cost(q_t)
    return work, train


# -- policy evaluation ------------------------------------------------------

def _policy_values(q_tilde_w, q_w, q_t, p: TrainingParams, c):
    """Closed-form solve of (I - delta Q) U = b; broadcasts over array actions."""
    pw = p_work_accept(q_tilde_w, q_w, p)
    pt = p_train_pass(q_t, p)
    uw, ut = immediate_utilities(q_tilde_w, q_w, q_t, p, c)
    dl = p.delta
    det = (1.0 - dl) * (1.0 + dl * (pt - pw))
    assert np.all(det > 0), "I - delta Q is singular"
    Uw = ((1.0 - dl * (1.0 - pt)) * uw + dl * (1.0 - pw) * ut) / det
    Ut = (dl * pt * uw + (1.0 - dl * pw) * ut) / det
    return Uw, Ut


def long_term_utilities(q_tilde_w, a: ActionPair, p: TrainingParams, c) -> UtilityPair:
    Uw, Ut = _policy_values(q_tilde_w, a.q_w, a.q_t, p, c)
    return UtilityPair(float(Uw), float(Ut))


def utility_gap(q_tilde_w, a: ActionPair, p: TrainingParams, c) -> float:
    """U_work - U_train without forming either value."""
    uw, ut = immediate_utilities(q_tilde_w, a.q_w, a.q_t, p, c)
    pw = p_work_accept(q_tilde_w, a.q_w, p)
    pt = p_train_pass(a.q_t, p)
    return float((uw - ut) / (1.0 + p.delta * (pt - pw)))


def bellman_residuals(q_tilde_w, a: ActionPair, U: UtilityPair, p: TrainingParams, c):
    """Residuals of the two long-term utility recursions at ``U``."""
    uw, ut = immediate_utilities(q_tilde_w, a.q_w, a.q_t, p, c)
    pw = p_work_accept(q_tilde_w, a.q_w, p)
    pt = p_train_pass(a.q_t, p)
    dl = p.delta
    rw = uw + dl * (pw * U.u_work + (1.0 - pw) * U.u_train) - U.u_work
    rt = ut + dl * (pt * U.u_work + (1.0 - pt) * U.u_train) - U.u_train
    return float(rw), float(rt)


# -- best response by value iteration ------------------------------------

def _greedy(Q: np.ndarray) -> int:
    top = Q.max()
    ties = np.flatnonzero(Q >= top - 1e-12 * max(1.0, abs(top)))
    return int(ties[-1])


def value_iteration(q_tilde_w: float, p: TrainingParams, c, grid_n: int = DEFAULT_GRID,
                    tol: float = VI_TOL) -> ValueIterationResult:
    """Optimal stationary policy of a deviating worker over a uniform action grid.

    Iterates the Bellman operator until the sup-norm change falls below
    ``tol * max(1, |V|)``, then extracts the greedy policy and polishes it by
    exact policy evaluation until it is stable.  Ties go to higher quality.
    """
    if grid_n < 2:
        raise DomainError(f"grid_n must be >= 2, got {grid_n!r}")
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    pw = p_work_accept(q_tilde_w, grid, p)
    pt = p_train_pass(grid, p)
    uw, ut = immediate_utilities(q_tilde_w, grid, grid, p, c)
    dl = p.delta

    max_iter = int(10 * math.ceil(1.0 / (1.0 - dl)) * math.log(1.0 / tol)) + 1
    vw = vt = 0.0
    diffs = []
    for it in range(1, max_iter + 1):
        nw = np.max(uw + dl * (pw * vw + (1.0 - pw) * vt))
        nt = np.max(ut + dl * (pt * vw + (1.0 - pt) * vt))
        diff = max(abs(nw - vw), abs(nt - vt))
        diffs.append(diff)
        vw, vt = float(nw), float(nt)
        if diff < tol * max(1.0, abs(vw), abs(vt)):
            break
    else:
        raise ConvergenceError(f"value iteration did not converge in {max_iter} iterations")

    iw = _greedy(uw + dl * (pw * vw + (1.0 - pw) * vt))
    it_ = _greedy(ut + dl * (pt * vw + (1.0 - pt) * vt))
    for _ in range(grid_n + 1):
        ew, et = _policy_values(q_tilde_w, grid[iw], grid[it_], p, c)
        nw_i = _greedy(uw + dl * (pw * ew + (1.0 - pw) * et))
        nt_i = _greedy(ut + dl * (pt * ew + (1.0 - pt) * et))
        if (nw_i, nt_i) == (iw, it_):
            break
        iw, it_ = nw_i, nt_i
    ew, et = _policy_values(q_tilde_w, grid[iw], grid[it_], p, c)
    return ValueIterationResult(UtilityPair(float(ew), float(et)),
                                ActionPair(float(grid[iw]), float(grid[it_])),
                                len(diffs), np.array(diffs))


def best_response(q_tilde_w: float, p: TrainingParams, c, grid_n: int = DEFAULT_GRID) -> ActionPair:
    return value_iteration(q_tilde_w, p, c, grid_n).policy


def equilibrium_training_action(p: TrainingParams, c, grid_n: int = DEFAULT_GRID) -> float:
    """Training-state quality of the best response when everybody works at quality 1."""
    return best_response(1.0, p, c, grid_n).q_t


def verify_sne(a: ActionPair, p: TrainingParams, c, grid_n: int = DEFAULT_GRID) -> EquilibriumReport:
    """Check whether ``a`` is a symmetric equilibrium against grid deviations.

    A lone worker faces peers playing ``a``; ``a`` passes when the deviator's
    optimal working quality sits on the same grid point and ``a`` attains the
    optimal value in both states (so training-state ties are accepted).
    """
    vi = value_iteration(a.q_w, p, c, grid_n)
    U = long_term_utilities(a.q_w, a, p, c)
    best = vi.values
    vtol = 1e-9 * max(1.0, abs(best.u_work), abs(best.u_train))
    same_q_w = abs(vi.policy.q_w - a.q_w) <= 0.5 / grid_n
    optimal = U.u_work >= best.u_work - vtol and U.u_train >= best.u_train - vtol

    grid = np.linspace(0.0, 1.0, grid_n + 1)
    Uw_dev, _ = _policy_values(a.q_w, grid, a.q_t, p, c)
    loss = np.column_stack([grid, U.u_work - Uw_dev])
    return EquilibriumReport(a, bool(same_q_w and optimal), U, vi.policy, loss)


# -- mechanism design -----------------------------------------------------

def training_tasks_bound(beta_w, alpha_w, r, c, delta=0.9, eps=0.01) -> float:
    """Unclamped sufficient number of training tasks for a quality-1 equilibrium."""
    denom = delta * (1.0 - beta_w) + delta * beta_w * alpha_w * (1.0 - 2.0 * eps)
    if denom <= 0:
        raise DomainError("beta_w = 1 with alpha_w = 0 validates nothing; no training size suffices")
    inner = ((1.0 + delta * beta_w * alpha_w * eps) * c.marginal_cost(1.0) / denom
             - (delta + 1.0) / delta * r + c.cost(1.0))
    return inner / c.cost(0.0)


def min_training_tasks(beta_w, alpha_w, r, c, delta=0.9, eps=0.01) -> int:
    return max(1, math.ceil(training_tasks_bound(beta_w, alpha_w, r, c, delta, eps)))


def working_cost(beta_w, alpha_w, r, eps, d) -> float:
    """Expected requester spend per working-state task at quality 1, training excluded."""
    return 3.0 * r * (1.0 - beta_w) + beta_w * ((1.0 - alpha_w * eps) * r + alpha_w * d)


def max_training_sampling(beta_w, alpha_w, r, n_tasks, gamma=1.0, eps=0.01, d=10.0) -> float:
    """Largest training sampling probability keeping training spend within gamma x working spend."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    B = working_cost(beta_w, alpha_w, r, eps, d)
    extra = beta_w * alpha_w * eps * n_tasks * d
    if extra == 0:
        return 1.0
    return min(1.0, gamma * B / (gamma * (1.0 - eps ** n_tasks) * B + extra))


def cost_upper_bound(p: TrainingParams, gamma: float | None = None) -> float:
    gamma = p.gamma if gamma is None else gamma
    limit = max_training_sampling(p.beta_w, p.alpha_w, p.r, p.n_tasks, gamma, p.eps, p.d)
    if p.alpha_t > limit * (1.0 + 1e-12):
        raise PreconditionError(f"alpha_t={p.alpha_t} exceeds the budget limit {limit}")
    return (1.0 + gamma) * working_cost(p.beta_w, p.alpha_w, p.r, p.eps, p.d)


def mechanism_cost_training(p: TrainingParams, q_hat_t: float) -> float:
    """Expected requester spend per task at the equilibrium (1, q_hat_t), churn ignored."""
    pt = p_train_pass(q_hat_t, p)
    train = p.beta_w * p.alpha_w * p.eps * p.alpha_t * p.n_tasks * p.d
    if train == 0:
        return working_cost(p.beta_w, p.alpha_w, p.r, p.eps, p.d)
    return working_cost(p.beta_w, p.alpha_w, p.r, p.eps, p.d) + (train / pt if pt > 0 else math.inf)


def design_mechanism(beta_w, alpha_w, r, c, gamma=1.0, delta=0.9, eps=0.01, d=10.0) -> TrainingParams:
    """Pick the training size, then the training sampling rate, for given working parameters."""
    n = min_training_tasks(beta_w, alpha_w, r, c, delta, eps)
    alpha_t = max_training_sampling(beta_w, alpha_w, r, n, gamma, eps, d)
    return TrainingParams(beta_w=beta_w, alpha_w=alpha_w, r=r, alpha_t=alpha_t, n_tasks=n,
                          delta=delta, eps=eps, d=d, gamma=gamma, pi0_w=1.0)


# -- stationary state distribution -----------------------------------------

def stationary_working_prob(p: TrainingParams, q_hat_t: float) -> tuple[float, float]:
    """Long-run working-state probability at (1, q_hat_t) and its q_hat_t-free lower bound."""
    dl = p.delta
    reject = p.beta_w * p.alpha_w * p.eps          # 1 - P_w(1, 1)
    pt = p_train_pass(q_hat_t, p)
    den = 1.0 - dl * ((1.0 - reject) - pt)
    exact = 1.0 - ((1.0 - dl) * (1.0 - p.pi0_w) + dl * reject) / den
    lower = ((1.0 - dl) * p.pi0_w + dl * (1.0 - p.alpha_t)) / (1.0 - dl + dl * reject + dl * (1.0 - p.alpha_t))
    return exact, lower


def iterate_state_distribution(p: TrainingParams, q_hat_t: float, steps: int) -> np.ndarray:
    """Working-state probability after 0..steps slots under the slot update rule."""
    pw11 = p_work_accept(1.0, 1.0, p)
    pt = p_train_pass(q_hat_t, p)
    out = np.empty(steps + 1)
    out[0] = pi = p.pi0_w
    for n in range(1, steps + 1):
        pi = p.delta * pi * pw11 + p.delta * (1.0 - pi) * pt + (1.0 - p.delta) * p.pi0_w
        out[n] = pi
    return out
