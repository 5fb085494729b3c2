"""Reward-consensus and reward-accuracy mechanisms.

Under reward consensus a task goes to ``K + 1`` workers and everybody who
submits the majority solution is paid ``r``.  Under reward accuracy a single
worker is paid ``r`` unless a spot check (made with probability ``alpha_a``,
wrong with probability ``eps``) flags the submission as unacceptable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MAX_CONSENSUS_PEERS = 20
ROOT_SCAN_STEP = 1e-3
ROOT_BISECT_TOL = 1e-10
ROOT_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class ConsensusParams:
    K: int = 2
    r: float = 1.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2 or self.K % 2:
            raise DomainError(f"K must be an even integer >= 2, got {self.K!r}")
        if not self.r >= 0:
            raise DomainError(f"reward must be nonnegative, got {self.r!r}")


@dataclass(frozen=True)
class AccuracyParams:
    alpha_a: float = 1.0
    r: float = 1.0
    eps: float = 0.01
    d: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_a <= 1.0:
            raise DomainError(f"alpha_a must lie in [0, 1], got {self.alpha_a!r}")
        if not 0.0 <= self.eps < 0.5:
            raise DomainError(f"eps must lie in [0, 0.5), got {self.eps!r}")
        if not self.d >= 0:
            raise DomainError(f"validation cost d must be nonnegative, got {self.d!r}")
        if not self.r >= 0:
            raise DomainError(f"reward must be nonnegative, got {self.r!r}")


@dataclass(frozen=True)
class CostReport:
    mechanism_cost: float
    optimal_params: dict = field(default_factory=dict)
    achieves_q1: bool = True


# -- reward consensus -------------------------------------------------------

def consensus_probability(q_tilde, K: int = 2):
    """Probability that at least K/2 of the K peers submit the acceptable solution."""
    if K > MAX_CONSENSUS_PEERS:
        raise OverflowError(f"K={K} exceeds the supported maximum {MAX_CONSENSUS_PEERS}")
    qt = np.asarray(q_tilde, dtype=float)
    total = sum(math.comb(K, n) * qt ** n * (1.0 - qt) ** (K - n) for n in range(K // 2, K + 1))
    return float(total) if np.ndim(total) == 0 else total


def utility_consensus(q, q_tilde, p: ConsensusParams, c):
    return p.r * np.asarray(q, dtype=float) * consensus_probability(q_tilde, p.K) - c.cost(q)


def is_sne_consensus_q1(p: ConsensusParams, c) -> bool:
    return p.r >= c.marginal_cost(1.0)


def _best_response_grid(q_tilde: float, p: ConsensusParams, c, n: int) -> float:
    grid = np.linspace(0.0, 1.0, n)
    u = utility_consensus(grid, q_tilde, p, c)
    # highest-quality maximiser
    return float(grid[n - 1 - int(np.argmax(u[::-1]))])


def consensus_roots(r: float, c, K: int = 2) -> list[float]:
    """Roots in [0, 1] of r * B(q) = c'(q), B being the consensus probability.

    Sign changes are located on a 1e-3 scan and refined by bisection;
    grid points where the residual vanishes are kept as roots too.
    """
    if not r >= 0:
        raise DomainError(f"reward must be nonnegative, got {r!r}")

    def f(q):
        return r * consensus_probability(q, K) - c.marginal_cost(q)

    n = int(round(1.0 / ROOT_SCAN_STEP)) + 1
    grid = np.linspace(0.0, 1.0, n)
    vals = f(grid)
    roots = [float(x) for x, v in zip(grid, vals) if abs(v) <= ROOT_ZERO_TOL]
    for i in range(n - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if abs(fa) <= ROOT_ZERO_TOL or abs(fb) <= ROOT_ZERO_TOL or fa * fb > 0:
            continue
        while b - a > ROOT_BISECT_TOL:
            mid = 0.5 * (a + b)
            fm = f(mid)
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(0.5 * (a + b))
    roots.sort()
    deduped: list[float] = []
    for x in roots:
        if not deduped or x - deduped[-1] > 10 * ROOT_BISECT_TOL:
            deduped.append(x)
    return deduped


def equilibrium_consensus(r: float, c, K: int = 2) -> float:
    """Highest-quality symmetric equilibrium of the consensus mechanism, 0 if none."""
    p = ConsensusParams(K=K, r=r)
    if is_sne_consensus_q1(p, c):
        return 1.0
    n = int(round(1.0 / ROOT_SCAN_STEP)) + 1
    best = 0.0
    for q_hat in consensus_roots(r, c, K):
        q_hat = min(max(q_hat, 0.0), 1.0)
        if abs(_best_response_grid(q_hat, p, c, n) - q_hat) <= ROOT_SCAN_STEP * (1 + 1e-9):
            best = max(best, q_hat)
    return best


def mechanism_cost_consensus(p: ConsensusParams) -> float:
    return (p.K + 1) * p.r


def min_cost_consensus(c) -> CostReport:
    r = c.marginal_cost(1.0)
    p = ConsensusParams(K=2, r=r)
    return CostReport(mechanism_cost_consensus(p), {"K": 2, "r": r}, is_sne_consensus_q1(p, c))


# -- reward accuracy --------------------------------------------------------

def utility_accuracy(q, p: AccuracyParams, c):
    q = np.asarray(q, dtype=float)
    paid = (1.0 - p.alpha_a) + p.alpha_a * (1.0 - p.eps) * q + p.alpha_a * p.eps * (1.0 - q)
    return p.r * paid - c.cost(q)


def optimal_action_accuracy(p: AccuracyParams, c) -> float:
    """Argmax over [0, 1] of the (concave) accuracy-mechanism utility."""
    slope = p.r * p.alpha_a * (1.0 - 2.0 * p.eps)
    if slope >= c.marginal_cost(1.0):
        return 1.0
    return float(c.inverse_marginal(slope))


def mechanism_cost_accuracy(p: AccuracyParams) -> float:
    return (1.0 - p.alpha_a * p.eps) * p.r + p.alpha_a * p.d


def min_cost_accuracy(d: float, eps: float, c) -> CostReport:
    """Cheapest (alpha_a, r) that still makes quality 1 the worker's best response.

    Closed-form KKT solution of minimising (1 - alpha_a eps) r + alpha_a d
    subject to alpha_a r (1 - 2 eps) >= c'(1) and alpha_a <= 1.
    """
    if not d >= 0:
        raise DomainError(f"validation cost d must be nonnegative, got {d!r}")
    if not 0.0 <= eps < 0.5:
        raise DomainError(f"eps must lie in [0, 0.5), got {eps!r}")
    k = c.marginal_cost(1.0) / (1.0 - 2.0 * eps)
    if d >= k:
        cost = 2.0 * math.sqrt(k * d) - eps * k
        alpha, r = math.sqrt(k / d), math.sqrt(k * d)
    else:
        cost = k * (1.0 - eps) + d
        alpha, r = 1.0, k
    p = AccuracyParams(alpha_a=alpha, r=r, eps=eps, d=d)
    # alpha * r equals k only up to rounding
    return CostReport(cost, {"alpha_a": alpha, "r": r}, optimal_action_accuracy(p, c) > 1.0 - 1e-9)
