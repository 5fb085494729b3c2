"""Command line front end: parameter sweeps written as CSV.

Every numeric flag takes a scalar or a ``start:stop:count`` range; at most
two flags may be ranged per call and rows follow the Cartesian product in
flag order.  Exit status is 0 on success, 1 on a domain error and 2 on a
usage error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import basic, training
from .cost import QuadraticCost
from .errors import ConvergenceError, DomainError
from .simulation import BACKENDS, DEFAULT_BACKEND, SimConfig, replicate

MAX_RANGED = 2

COMMANDS = ("mc-equilibrium", "ma-optimal", "ma-min-cost", "mt-design", "mt-verify",
            "mt-n-bound", "mt-stationary", "simulate")

# flag -> (dest, default, is_int, help)
FLAGS = {
    "--lambda": ("lam", 1.0, False, "cost sensitivity lambda"),
    "--delta": ("delta", 0.9, False, "per-slot continuation probability"),
    "--eps": ("eps", 0.01, False, "validation error probability"),
    "--d": ("d", 10.0, False, "validation cost per task"),
    "--beta-w": ("beta_w", 0.0, False, "share of working tasks that are spot checked"),
    "--alpha-w": ("alpha_w", 1.0, False, "working-state sampling probability"),
    "--alpha-t": ("alpha_t", None, False, "training sampling probability (default: designed)"),
    "--alpha-a": ("alpha_a", 1.0, False, "reward-accuracy sampling probability"),
    "--r": ("r", 1.0, False, "reward per accepted task"),
    "--cost": ("cost", None, False, "mechanism cost per task; sets the reward instead of --r"),
    "--gamma": ("gamma", 1.0, False, "training/working cost budget ratio"),
    "--pi0": ("pi0", 1.0, False, "probability a new worker starts in the working state"),
    "--n": ("n", None, True, "training tasks per round (default: designed)"),
    "--q-w": ("q_w", None, False, "working-state quality (default: 1)"),
    "--q-t": ("q_t", None, False, "training-state quality (default: equilibrium)"),
    "--grid": ("grid", 100, True, "action grid intervals per state"),
    "--pop": ("pop", 10_000, True, "simulated population"),
    "--horizon": ("horizon", 500, True, "simulated slots"),
    "--reps": ("reps", 1, True, "replications"),
    "--seed": ("seed", 0, True, "base seed"),
}

COMMAND_FLAGS = {
    "mc-equilibrium": ["--lambda", "--r", "--cost"],
    "ma-optimal": ["--lambda", "--alpha-a", "--r", "--cost", "--eps", "--d"],
    "ma-min-cost": ["--lambda", "--eps", "--d"],
    "mt-n-bound": ["--lambda", "--beta-w", "--alpha-w", "--r", "--delta", "--eps"],
    "mt-design": ["--lambda", "--beta-w", "--alpha-w", "--r", "--gamma", "--delta", "--eps", "--d", "--grid"],
    "mt-verify": ["--lambda", "--beta-w", "--alpha-w", "--r", "--alpha-t", "--n", "--gamma", "--delta",
                  "--eps", "--d", "--q-w", "--q-t", "--grid"],
    "mt-stationary": ["--lambda", "--beta-w", "--alpha-w", "--r", "--alpha-t", "--n", "--gamma", "--delta",
                      "--eps", "--d", "--pi0", "--q-t", "--grid"],
    "simulate": ["--lambda", "--beta-w", "--alpha-w", "--alpha-a", "--r", "--alpha-t", "--n", "--gamma",
                 "--delta", "--eps", "--d", "--pi0", "--q-w", "--q-t", "--grid", "--pop", "--horizon",
                 "--reps", "--seed"],
}


@dataclass
class ExperimentSpec:
    command: str
    ranges: dict = field(default_factory=dict)   # dest -> list of values
    output_path: str = "-"
    seed: int | None = None
    options: dict = field(default_factory=dict)


def parse_values(text: str, is_int: bool = False) -> list:
    """Scalar or ``start:stop:count`` range; raises ValueError on bad syntax."""
    parts = text.split(":")
    if len(parts) == 1:
        vals = [float(parts[0])]
    elif len(parts) == 3:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError(f"range count must be >= 1 in {text!r}")
        if start > stop:
            raise ValueError(f"range start exceeds stop in {text!r}")
        vals = list(np.linspace(start, stop, count)) if count > 1 else [start]
    else:
        raise ValueError(f"expected a number or start:stop:count, got {text!r}")
    if any(not math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite value in {text!r}")
    if is_int:
        if any(v != int(v) for v in vals):
            raise ValueError(f"integer flag given non-integer value {text!r}")
        return [int(v) for v in vals]
    return [float(v) for v in vals]


# -- per-command row computations ------------------------------------------

def _mc_equilibrium(v):
    c = QuadraticCost(v["lam"])
    r = v["cost"] / 3.0 if v.get("cost") is not None else v["r"]
    q = basic.equilibrium_consensus(r, c)
    return {"r": r, "mechanism_cost": 3.0 * r, "equilibrium": q,
            "q1_is_sne": basic.is_sne_consensus_q1(basic.ConsensusParams(2, r), c),
            "min_cost": basic.min_cost_consensus(c).mechanism_cost}


def _ma_optimal(v):
    c = QuadraticCost(v["lam"])
    feasible = True
    if v.get("cost") is not None:
        r = (v["cost"] - v["alpha_a"] * v["d"]) / (1.0 - v["alpha_a"] * v["eps"])
        if r < 0:
            r, feasible = 0.0, False
    else:
        r = v["r"]
    p = basic.AccuracyParams(alpha_a=v["alpha_a"], r=r, eps=v["eps"], d=v["d"])
    q = basic.optimal_action_accuracy(p, c)
    return {"r": r, "feasible": feasible, "mechanism_cost": basic.mechanism_cost_accuracy(p),
            "optimal_action": q, "utility": float(basic.utility_accuracy(q, p, c))}


def _ma_min_cost(v):
    rep = basic.min_cost_accuracy(v["d"], v["eps"], QuadraticCost(v["lam"]))
    return {"min_cost": rep.mechanism_cost, "alpha_a_opt": rep.optimal_params["alpha_a"],
            "r_opt": rep.optimal_params["r"], "achieves_q1": rep.achieves_q1}


def _mt_n_bound(v):
    c = QuadraticCost(v["lam"])
    args = (v["beta_w"], v["alpha_w"], v["r"], c, v["delta"], v["eps"])
    return {"n_bound_raw": training.training_tasks_bound(*args), "n_bound": training.min_training_tasks(*args)}


def _training_params(v, c) -> training.TrainingParams:
    n = v.get("n")
    if n is None:
        n = training.min_training_tasks(v["beta_w"], v["alpha_w"], v["r"], c, v["delta"], v["eps"])
    alpha_t = v.get("alpha_t")
    if alpha_t is None:
        alpha_t = training.max_training_sampling(v["beta_w"], v["alpha_w"], v["r"], n, v["gamma"],
                                                 v["eps"], v["d"])
    return training.TrainingParams(beta_w=v["beta_w"], alpha_w=v["alpha_w"], r=v["r"], alpha_t=alpha_t,
                                   n_tasks=n, delta=v["delta"], eps=v["eps"], d=v["d"],
                                   gamma=v["gamma"], pi0_w=v.get("pi0", 1.0))


def _mt_design(v):
    c = QuadraticCost(v["lam"])
    p = training.design_mechanism(v["beta_w"], v["alpha_w"], v["r"], c, v["gamma"], v["delta"], v["eps"], v["d"])
    q_t = training.equilibrium_training_action(p, c, v["grid"])
    rep = training.verify_sne(training.ActionPair(1.0, q_t), p, c, v["grid"])
    exact, lower = training.stationary_working_prob(p, q_t)
    return {"n_tasks": p.n_tasks, "alpha_t": p.alpha_t, "pi0_w": p.pi0_w, "q_hat_t": q_t,
            "is_sne": rep.is_sne, "cost_upper_bound": training.cost_upper_bound(p),
            "stationary_exact": exact, "stationary_lower": lower}


def _mt_verify(v, curve=False):
    c = QuadraticCost(v["lam"])
    p = _training_params(v, c)
    q_w = 1.0 if v.get("q_w") is None else v["q_w"]
    q_t = v.get("q_t")
    if q_t is None:
        q_t = training.best_response(q_w, p, c, v["grid"]).q_t
    rep = training.verify_sne(training.ActionPair(q_w, q_t), p, c, v["grid"])
    row = {"n_tasks": p.n_tasks, "alpha_t": p.alpha_t, "q_w_eq": q_w, "q_t_eq": q_t,
           "is_sne": rep.is_sne, "q_w_best": rep.best_response.q_w, "q_t_best": rep.best_response.q_t,
           "u_work": rep.utilities.u_work, "u_train": rep.utilities.u_train,
           "min_loss": float(rep.utility_loss_curve[:, 1].min())}
    if not curve:
        return row
    return [dict(row, q_w_dev=float(qw), loss=float(loss)) for qw, loss in rep.utility_loss_curve]


def _mt_stationary(v):
    c = QuadraticCost(v["lam"])
    p = _training_params(v, c)
    q_t = v.get("q_t")
    if q_t is None:
        q_t = training.equilibrium_training_action(p, c, v["grid"])
    exact, lower = training.stationary_working_prob(p, q_t)
    return {"n_tasks": p.n_tasks, "alpha_t": p.alpha_t, "q_hat_t": q_t,
            "stationary_exact": exact, "stationary_lower": lower}


def _simulate(v, mechanism="training", backend=None):
    c = QuadraticCost(v["lam"])
    if mechanism == "training":
        mech = _training_params(v, c)
        q_w = 1.0 if v.get("q_w") is None else v["q_w"]
        q_t = v.get("q_t")
        if q_t is None:
            q_t = training.best_response(q_w, mech, c, v["grid"]).q_t
    else:
        if mechanism == "accuracy":
            mech = basic.AccuracyParams(alpha_a=v["alpha_a"], r=v["r"], eps=v["eps"], d=v["d"])
            default_q = basic.optimal_action_accuracy(mech, c)
        else:
            mech = basic.ConsensusParams(K=2, r=v["r"])
            default_q = basic.equilibrium_consensus(v["r"], c)
        q_w = default_q if v.get("q_w") is None else v["q_w"]
        q_t = 0.0
    cfg = SimConfig(mech, training.ActionPair(q_w, q_t), population=v["pop"], horizon=v["horizon"],
                    seed=v["seed"], replications=v["reps"], cost_model=c, delta=v["delta"])
    res = replicate(cfg, backend)
    row = {"q_w_policy": q_w, "q_t_policy": q_t}
    for name in ("empirical_work_accept_rate", "empirical_train_pass_rate", "tail_occupancy",
                 "cost_per_task", "mean_worker_utility", "discounted_utility_estimate"):
        est = getattr(res, name)
        row[name] = est.mean
        row[name + "_se"] = est.se
    row["final_occupancy"] = float(res.occupancy_trace[-1])
    row["work_tasks"] = res.work_tasks
    row["train_rounds"] = res.train_rounds
    return row


def _format(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if not math.isfinite(x) else repr(x)


def run(spec: ExperimentSpec) -> int:
    """Evaluate every grid point of ``spec`` and write the CSV."""
    flags = COMMAND_FLAGS[spec.command]
    dests = [FLAGS[f][0] for f in flags]
    values = {d: spec.ranges.get(d, [FLAGS[f][1]]) for f, d in zip(flags, dests)}
    if spec.seed is not None and "seed" in values:
        values["seed"] = [spec.seed]
    ranged = [d for d in dests if len(values[d]) > 1]
    if len(ranged) > MAX_RANGED:
        raise ValueError(f"at most {MAX_RANGED} flags may be ranged, got {', '.join(ranged)}")

    opts = spec.options
    rows = []
    for combo in itertools.product(*(values[d] for d in dests)):
        v = dict(zip(dests, combo))
        inputs = {d: x for d, x in v.items() if x is not None}
        if spec.command == "mt-verify":
            out = _mt_verify(v, curve=opts.get("curve", False))
        elif spec.command == "simulate":
            out = _simulate(v, opts.get("mechanism", "training"), opts.get("backend"))
        else:
            out = HANDLERS[spec.command](v)
        for o in out if isinstance(out, list) else [out]:
            rows.append({**inputs, **o})

    header = list(dict.fromkeys(k for row in rows for k in row))
    # every data cell must be a finite number; undefined statistics
    # (e.g. a pass rate with no training rounds) drop their column
    undefined = [k for k in header if any(k not in row or _format(row[k]) == "" for row in rows)]
    if undefined:
        print(f"note: omitted undefined columns: {', '.join(undefined)}", file=sys.stderr)
        header = [k for k in header if k not in undefined]
    fh = sys.stdout if spec.output_path == "-" else open(spec.output_path, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(row[k]) for k in header])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


HANDLERS = {
    "mc-equilibrium": _mc_equilibrium,
    "ma-optimal": _ma_optimal,
    "ma-min-cost": _ma_min_cost,
    "mt-n-bound": _mt_n_bound,
    "mt-design": _mt_design,
    "mt-stationary": _mt_stationary,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdmech",
        description="Equilibria, design bounds and simulations for crowdsourcing incentive mechanisms. "
                    "Defaults: d=10, delta=0.9, eps=0.01, gamma=1, lambda=1.")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"{cmd} sweep")
        for flag in COMMAND_FLAGS[cmd]:
            dest, default, _, text = FLAGS[flag]
            sp.add_argument(flag, dest=dest, default=None, metavar="V|A:B:N",
                            help=f"{text} (default: {default})")
        sp.add_argument("--out", default="-", help="output CSV path (default: stdout)")
        if cmd == "mt-verify":
            sp.add_argument("--curve", action="store_true", help="emit the utility-loss curve, one row per q_w")
        if cmd == "simulate":
            sp.add_argument("--mechanism", choices=("training", "accuracy", "consensus"), default="training")
            sp.add_argument("--backend", choices=sorted(BACKENDS), default=DEFAULT_BACKEND)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ranges = {}
    for flag in COMMAND_FLAGS[args.command]:
        dest, _, is_int, _ = FLAGS[flag]
        raw = getattr(args, dest)
        if raw is None:
            continue
        try:
            ranges[dest] = parse_values(raw, is_int)
        except ValueError as exc:
            parser.error(f"{flag}: {exc}")
    options = {k: getattr(args, k) for k in ("curve", "mechanism", "backend") if hasattr(args, k)}
    spec = ExperimentSpec(args.command, ranges, args.out, options=options)
    try:
        return run(spec)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        parser.error(str(exc))
    except (ConvergenceError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
