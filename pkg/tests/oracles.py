"""Independent reference computations used by the tests.

Each oracle reaches its answer by a different route from the library:
brute-force enumeration, exhaustive grids, finite-horizon backward
induction or plain iteration of a transition matrix.
"""
import itertools

import numpy as np


def cost(q, lam):
    return (np.asarray(q, dtype=float) + lam) ** 2 / (lam + 1.0) ** 2


def marginal(q, lam):
    return 2.0 * (np.asarray(q, dtype=float) + lam) / (lam + 1.0) ** 2


# -- consensus -----------------------------------------------------------

def majority_prob_enum(q_tilde, K):
    """P(at least K/2 of K peers acceptable) by listing all 2**K outcomes."""
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=K):
        k = sum(outcome)
        if k >= K // 2:
            total += q_tilde ** k * (1.0 - q_tilde) ** (K - k)
    return total


def consensus_utility_enum(q, q_tilde, r, lam):
    """Two peers; paid iff own solution acceptable and a peer matches it."""
    pay = 0.0
    for own, a, b in itertools.product((0, 1), repeat=3):
        prob = (q if own else 1 - q) * (q_tilde if a else 1 - q_tilde) * (q_tilde if b else 1 - q_tilde)
        if own and (a or b):
            pay += prob * r
    return pay - float(cost(q, lam))


def consensus_roots_quadratic(r, lam):
    """Real roots in [0, 1] of r(2q - q^2) = c'(q), a quadratic in q."""
    s = (lam + 1.0) ** 2
    roots = np.roots([r, 2.0 / s - 2.0 * r, 2.0 * lam / s]) if r > 0 else np.array([-lam])
    out = sorted(float(x.real) for x in np.atleast_1d(roots) if abs(x.imag) < 1e-12 and -1e-12 <= x.real <= 1 + 1e-12)
    return [min(max(x, 0.0), 1.0) for x in out]


# -- reward accuracy -------------------------------------------------------

def accuracy_min_cost_grid(d, eps, lam, n=1000):
    """Constrained grid search over (alpha, r) for the cheapest quality-1 design.

    A first n x n grid brackets the minimum; a second n x n grid spans the
    neighbouring cells of the best point.  The reward range is capped by the
    cost of the always-sampled design, which any optimum must undercut.
    """
    need = float(marginal(1.0, lam))
    k = need / (1.0 - 2.0 * eps)
    r_cap = (k * (1.0 - eps) + d) / (1.0 - eps) * 1.01

    def search(a_lo, a_hi, r_lo, r_hi):
        a = np.linspace(a_lo, a_hi, n)[:, None]
        r = np.linspace(r_lo, r_hi, n)[None, :]
        feasible = r * a * (1.0 - 2.0 * eps) >= need
        total = np.where(feasible, (1.0 - a * eps) * r + a * d, np.inf)
        i, j = np.unravel_index(np.argmin(total), total.shape)
        return total[i, j], a[i, 0], r[0, j], (a_hi - a_lo) / (n - 1), (r_hi - r_lo) / (n - 1)

    best, a0, r0, da, dr = search(0.0, 1.0, 0.0, r_cap)
    best, a0, r0, _, _ = search(max(0.0, a0 - 2 * da), min(1.0, a0 + 2 * da), max(0.0, r0 - 2 * dr), r0 + 2 * dr)
    return best, a0, r0


# -- training mechanism ----------------------------------------------------

def work_accept_events(q_tilde, q, beta, alpha, eps):
    """P(accepted in the working state), summed over explicit routing events."""
    peers_match = 1.0 - (1.0 - q_tilde) ** 2
    consensus = q * peers_match
    sampled = q * (1.0 - eps) + (1.0 - q) * eps
    return (1.0 - beta) * consensus + beta * ((1.0 - alpha) + alpha * sampled)


def train_pass_events(q_t, alpha_t, eps, n):
    one = q_t * (1.0 - eps) + (1.0 - q_t) * eps
    return (1.0 - alpha_t) + alpha_t * one ** n


def backward_induction(uw, ut, pw, pt, delta, steps=500):
    """Finite-horizon values; with ``delta**steps`` negligible this is the
    infinite-horizon answer.  Arguments may be arrays over an action grid,
    in which case the values are the optimal ones."""
    vw = vt = 0.0
    for _ in range(steps):
        vw, vt = (float(np.max(uw + delta * (pw * vw + (1.0 - pw) * vt))),
                  float(np.max(ut + delta * (pt * vw + (1.0 - pt) * vt))))
    return vw, vt


def stationary_by_chain(delta, stay, back, pi0, steps=5000):
    """Iterate the two-state chain with churn as a 2x2 matrix product."""
    move = np.array([[stay, 1.0 - stay], [back, 1.0 - back]])
    entry = np.array([pi0, 1.0 - pi0])
    dist = entry.copy()
    for _ in range(steps):
        dist = delta * dist @ move + (1.0 - delta) * entry
    return float(dist[0])


def max_alpha_t_bisect(beta, alpha_w, r, n, gamma, eps, d, iters=200):
    """Largest alpha_t whose worst-case training spend stays within gamma times
    the working spend.  Spend per working task for training is the rejection
    rate times alpha_t N d, divided by the pass rate of a zero-quality trainee."""
    work = 3.0 * r * (1.0 - beta) + beta * ((1.0 - alpha_w * eps) * r + alpha_w * d)

    def train_spend(a):
        flow = beta * alpha_w * eps * a * n * d
        if flow == 0:
            return 0.0
        pass_rate = (1.0 - a) + a * eps ** n
        return flow / pass_rate if pass_rate > 0 else float("inf")

    if train_spend(1.0) <= gamma * work:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if train_spend(mid) <= gamma * work:
            lo = mid
        else:
            hi = mid
    return lo


def relative_error(x, ref):
    return abs(x - ref) / max(abs(ref), 1e-300)

