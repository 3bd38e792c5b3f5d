"""Random perturb-and-solve descent over many seeds, with conditioning diagnostics.

Each seed draws 100 over-parameterised exp instances. The script prints the
per-seed success count and, for every miss, the architecture and cond(T_H).

    python3 scripts/descent_sweep.py --seeds 0 30 --workers 8
"""

import argparse
import time

from landscape_lab.activations import builtin
from landscape_lab.descent import DescentConfig, random_instance, run_descent_batch


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs=2, default=(0, 10), metavar=("FIRST", "STOP"))
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--samples", type=int, default=1000, help="path samples per run")
    p.add_argument("--workers", type=int, default=1)
    return p.parse_args()


def sweep(seed, args):
    exp = builtin("exp")
    jobs = [
        (*random_instance(exp, seed, i), args.delta, DescentConfig(seed=i, samples=args.samples))
        for i in range(args.instances)
    ]
    traces = run_descent_batch(jobs, args.workers)
    misses = [(i, job[0].dims, job[1].n_samples, t) for i, (job, t) in enumerate(zip(jobs, traces)) if t.status != "ok"]
    return traces, misses


if __name__ == "__main__":
    args = parse_args()
    clean = 0
    for seed in range(*args.seeds):
        start = time.perf_counter()
        traces, misses = sweep(seed, args)
        clean += not misses
        worst = max(t.condition_T_H for t in traces)
        print(f"seed {seed:3d}: {len(traces) - len(misses)}/{len(traces)} ok, "
              f"max cond(T_H) {worst:.1e}, {time.perf_counter() - start:.2f}s")
        for i, dims, n, t in misses:
            print(f"    instance {i}: dims {dims} N={n} status={t.status} "
                  f"final_loss={t.final_loss:.2e} cond(T_H)={t.condition_T_H:.1e}")
    total = args.seeds[1] - args.seeds[0]
    print(f"{clean}/{total} seeds with every instance at the infimum")
