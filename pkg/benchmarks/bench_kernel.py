"""Time the compiled simulation kernel against the numpy fallback.

    python benchmarks/bench_kernel.py --pop 10000 --horizon 500 --repeat 3

Both backends run the same configurations; the script checks that their
outputs agree bit for bit before reporting timings.
"""
import argparse
import time

import numpy as np

from crowdmech import QuadraticCost
from crowdmech import basic, training
from crowdmech.simulation import BACKENDS, SimConfig
from crowdmech.simulation import _rng
from crowdmech.simulation.engine import _kernel_args


def scenarios(pop, horizon):
    c = QuadraticCost(1.0)
    spot = training.TrainingParams(beta_w=1.0, alpha_w=0.9, alpha_t=0.5, n_tasks=4)
    mixed = training.design_mechanism(0.5, 0.5, 1.0, c)
    long_training = training.TrainingParams(beta_w=1.0, alpha_w=0.5, alpha_t=0.6, n_tasks=127, eps=0.05)
    yield "spot-check training", SimConfig(spot, training.ActionPair(1.0, 0.0), pop, horizon)
    yield "mixed validation", SimConfig(mixed, training.ActionPair(0.95, 1.0), pop, horizon)
    yield "N=127 training", SimConfig(long_training, training.ActionPair(0.9, 1.0), pop, horizon)
    yield "consensus only", SimConfig(basic.ConsensusParams(2, 1.0), training.ActionPair(0.8, 0.0), pop, horizon)


def time_backend(name, cfg, repeat):
    fn = BACKENDS[name]
    args = (_rng.seed_key(cfg.seed), cfg.population, cfg.horizon, cfg.horizon // 2)
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **_kernel_args(cfg))
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pop", type=int, default=10_000)
    ap.add_argument("--horizon", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "compiled" not in BACKENDS:
        raise SystemExit("compiled kernel not available; build the package with Cython installed")

    print(f"population {args.pop}, horizon {args.horizon}, best of {args.repeat}")
    print(f"{'scenario':<22}{'python s':>10}{'compiled s':>12}{'speedup':>9}  identical")
    for label, cfg in scenarios(args.pop, args.horizon):
        t_py, out_py = time_backend("python", cfg, args.repeat)
        t_c, out_c = time_backend("compiled", cfg, args.repeat)
        same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
        print(f"{label:<22}{t_py:>10.3f}{t_c:>12.3f}{t_py / t_c:>8.1f}x  {same}")


if __name__ == "__main__":
    main()
