"""Monte Carlo population runs under a fixed worker policy.

Each slot every working-state worker submits one task.  A task is spot
checked with probability ``beta_w`` (sampled with ``alpha_w``, misjudged with
``eps``) and otherwise joins a consensus triad with two peers drawn from the
other working workers; acceptable solutions coincide, unacceptable ones never
do, so a triad agrees iff at least two members are acceptable.  Rejected
workers move to training, where a round of ``n_tasks`` tasks is graded with
probability ``alpha_t``.  At the end of a slot each worker leaves with
probability ``1 - delta`` and is replaced at once, entering the working state
with probability ``pi0_w``.

A worker's realised lifetime total (undiscounted; churn supplies the
discounting) estimates the long-term utility of its entry state.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Union

import numpy as np

from ..basic import AccuracyParams, ConsensusParams
from ..cost import QuadraticCost
from ..errors import DomainError
from ..training import ActionPair, TrainingParams
from . import _rng
from . import _kernel_py

if os.environ.get("CROWDMECH_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _kernel_py.run}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.run
DEFAULT_BACKEND = "compiled" if _compiled is not None else "python"

Mechanism = Union[ConsensusParams, AccuracyParams, TrainingParams]
TAIL_BATCHES = 10


class Estimate(NamedTuple):
    mean: float
    se: float


@dataclass(frozen=True)
class SimConfig:
    mechanism: Mechanism
    policy: ActionPair
    population: int = 10_000
    horizon: int = 500
    seed: int = 0
    replications: int = 1
    cost_model: QuadraticCost = field(default_factory=QuadraticCost)
    delta: float = 0.9
    cohort_cutoff: int | None = None

    def __post_init__(self):
        if not isinstance(self.mechanism, (ConsensusParams, AccuracyParams, TrainingParams)):
            raise DomainError(f"unsupported mechanism {type(self.mechanism).__name__}")
        if self.population < 1 or self.horizon < 1 or self.replications < 1:
            raise DomainError("population, horizon and replications must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.population * (self.horizon + 1) >= 2 ** (64 - _rng.STREAM_BITS):
            raise DomainError("population x horizon too large for the counter space")
        m = self.mechanism
        if isinstance(m, ConsensusParams) and m.K != 2:
            raise DomainError("the simulator forms triads; only K = 2 is supported")
        consensus_possible = isinstance(m, ConsensusParams) or (isinstance(m, TrainingParams) and m.beta_w < 1)
        if consensus_possible and self.population < 3:
            raise DomainError("consensus validation needs a population of at least 3")
        if isinstance(m, TrainingParams) and m.n_tasks > _rng.MAX_TRAIN_TASKS:
            raise DomainError(f"n_tasks above {_rng.MAX_TRAIN_TASKS} is not supported by the simulator")
        if not isinstance(m, TrainingParams) and not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta!r}")

    @property
    def churn(self) -> float:
        return self.mechanism.delta if isinstance(self.mechanism, TrainingParams) else self.delta


@dataclass
class SimResult:
    empirical_work_accept_rate: Estimate
    empirical_train_pass_rate: Estimate
    occupancy_trace: np.ndarray = field(repr=False)
    tail_occupancy: Estimate
    cost_per_task: Estimate
    mean_worker_utility: Estimate
    discounted_utility_estimate: Estimate
    training_entry_utility: Estimate
    work_tasks: int
    train_rounds: int
    lifetimes: int
    replications: int = 1
    backend: str = DEFAULT_BACKEND


def _kernel_args(cfg: SimConfig):
    m, a, c = cfg.mechanism, cfg.policy, cfg.cost_model
    c_w = c.cost(a.q_w)
    if isinstance(m, TrainingParams):
        beta_w, alpha_w, eps, alpha_t, pi0, n, r = m.beta_w, m.alpha_w, m.eps, m.alpha_t, m.pi0_w, m.n_tasks, m.r
        util_train = -(n * c.cost(a.q_t))
        has_training = True
    elif isinstance(m, AccuracyParams):
        beta_w, alpha_w, eps, alpha_t, pi0, n, r = 1.0, m.alpha_a, m.eps, 0.0, 1.0, 1, m.r
        util_train, has_training = 0.0, False
    else:
        beta_w, alpha_w, eps, alpha_t, pi0, n, r = 0.0, 0.0, 0.0, 0.0, 1.0, 1, m.r
        util_train, has_training = 0.0, False
    return dict(n_tasks=n, has_training=has_training, beta_w=beta_w, alpha_w=alpha_w, eps=eps,
                alpha_t=alpha_t, delta=cfg.churn, pi0=pi0, q_w=a.q_w, q_t=a.q_t,
                util_accept=r - c_w, util_reject=-c_w, util_train=util_train)


def _rate(k: np.ndarray, n: np.ndarray) -> Estimate:
    """Pooled rate over slots.

    The standard error treats slots as independent ratio samples, which
    keeps the within-slot correlation of shared consensus peers; with a
    single slot it falls back to the binomial error.
    """
    total = int(n.sum())
    if total == 0:
        return Estimate(math.nan, math.nan)
    p = int(k.sum()) / total
    used = n > 0
    m = int(used.sum())
    if m < 2:
        return Estimate(p, math.sqrt(p * (1.0 - p) / total))
    resid = k[used] - p * n[used]
    return Estimate(p, float(math.sqrt(m / (m - 1) * np.sum(resid * resid)) / total))


def _batch_ratio(num: np.ndarray, den: np.ndarray) -> Estimate:
    """Ratio of sums over tail slots, with a batch-means standard error."""
    if den.sum() == 0:
        return Estimate(math.nan, math.nan)
    value = num.sum() / den.sum()
    nb = min(TAIL_BATCHES, num.shape[0])
    if nb < 2:
        return Estimate(float(value), math.nan)
    batches = np.array([n.sum() / d.sum() for n, d in zip(np.array_split(num, nb), np.array_split(den, nb))
                        if d.sum() > 0])
    return Estimate(float(value), float(batches.std(ddof=1) / math.sqrt(batches.shape[0])))


def _sample_mean(x: np.ndarray) -> Estimate:
    if x.shape[0] == 0:
        return Estimate(math.nan, math.nan)
    if x.shape[0] == 1:
        return Estimate(float(x[0]), math.nan)
    return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.shape[0])))


def simulate(cfg: SimConfig, backend: str | None = None) -> SimResult:
    """One seeded run; deterministic in ``cfg`` for a given backend."""
    backend = backend or DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise DomainError(f"backend {backend!r} unavailable; have {sorted(BACKENDS)}")
    cutoff = cfg.horizon // 2 if cfg.cohort_cutoff is None else cfg.cohort_cutoff
    args = _kernel_args(cfg)
    counts, occ, life_vals, life_start = BACKENDS[backend](
        _rng.seed_key(cfg.seed), cfg.population, cfg.horizon, cutoff, **args)

    acc_tasks, acc_ok, acc_sampled, cons_tasks, cons_ok, cons_paid, t_rounds, t_sel, t_pass = counts.T
    work_tasks = acc_tasks + cons_tasks
    accepted = acc_ok + cons_ok
    m = cfg.mechanism
    r = m.r
    d = getattr(m, "d", 0.0)
    n = args["n_tasks"]
    spend = r * (cons_paid + acc_ok) + d * acc_sampled + (n * d) * t_sel
    utility = (args["util_accept"] * accepted + args["util_reject"] * (work_tasks - accepted)
               + args["util_train"] * t_rounds)

    tail = slice(cfg.horizon // 2, cfg.horizon)
    occ_frac = occ / cfg.population
    pop_col = np.full(cfg.horizon, cfg.population)
    return SimResult(
        empirical_work_accept_rate=_rate(accepted.astype(float), work_tasks.astype(float)),
        empirical_train_pass_rate=_rate(t_pass.astype(float), t_rounds.astype(float)),
        occupancy_trace=occ_frac,
        tail_occupancy=_batch_ratio(occ[:-1][tail].astype(float), pop_col[tail].astype(float)),
        cost_per_task=_batch_ratio(spend[tail].astype(float), work_tasks[tail].astype(float)),
        mean_worker_utility=_batch_ratio(utility[tail].astype(float), pop_col[tail].astype(float)),
        discounted_utility_estimate=_sample_mean(life_vals[life_start == 1]),
        training_entry_utility=_sample_mean(life_vals[life_start == 0]),
        work_tasks=int(work_tasks.sum()),
        train_rounds=int(t_rounds.sum()),
        lifetimes=int(life_vals.shape[0]),
        backend=backend,
    )


def _pool(values: list[float]) -> Estimate:
    x = np.array(values, dtype=float)
    x = x[np.isfinite(x)]
    return _sample_mean(x)


def replicate(cfg: SimConfig, backend: str | None = None) -> SimResult:
    """Run seeds ``seed .. seed + replications - 1`` and pool across replications."""
    if cfg.replications == 1:
        return simulate(cfg, backend)
    runs = []
    for k in range(cfg.replications):
        runs.append(simulate(replace(cfg, seed=(cfg.seed + k) % 2 ** 64, replications=1), backend))

    def pool(name):
        return _pool([getattr(res, name).mean for res in runs])

    return SimResult(
        empirical_work_accept_rate=pool("empirical_work_accept_rate"),
        empirical_train_pass_rate=pool("empirical_train_pass_rate"),
        occupancy_trace=np.mean([res.occupancy_trace for res in runs], axis=0),
        tail_occupancy=pool("tail_occupancy"),
        cost_per_task=pool("cost_per_task"),
        mean_worker_utility=pool("mean_worker_utility"),
        discounted_utility_estimate=pool("discounted_utility_estimate"),
        training_entry_utility=pool("training_entry_utility"),
        work_tasks=sum(res.work_tasks for res in runs),
        train_rounds=sum(res.train_rounds for res in runs),
        lifetimes=sum(res.lifetimes for res in runs),
        replications=cfg.replications,
        backend=runs[0].backend,
    )

