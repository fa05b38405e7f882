"""Compiled vs pure-Python primal sweep.

    python benchmarks/bench_kernels.py [--repeat 20] [--seed 0]

Times one full sweep (every user, one price vector) on the 57-cell scenario
and on a random small instance, and checks the two backends agree bit for bit.
"""

import argparse
import timeit

import numpy as np

from liquidmaas import kernels, primal
from liquidmaas.scenario import build_neighborhoods, generate_scenario, random_instance


def bench(problem, repeat, rng):
    prices = primal.PriceState(rng.exponential(0.05, problem.num_cells),
                               rng.exponential(0.01, problem.num_users))
    impl = kernels.backends()
    out = {}
    ref = None
    for name in impl:
        res = primal.sweep_full(problem, prices, backend=name)
        if ref is None:
            ref = res
        else:
            for f in ("metric", "g", "count", "demand"):
                assert np.array_equal(getattr(ref, f), getattr(res, f)), (name, f)
            assert np.array_equal(ref.allocation.x, res.allocation.x), name
        t = timeit.repeat(lambda: primal.sweep_full(problem, prices, backend=name),
                          number=repeat, repeat=5)
        out[name] = min(t) / repeat
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    cases = {
        "57 cells / 570 users": build_neighborhoods(generate_scenario(seed=args.seed), 0.1, 3, 1.0),
        "10 cells / 30 users": random_instance(10, 3, seed=args.seed, l_a=2),
    }
    print(f"default backend: {kernels.BACKEND}")
    for label, problem in cases.items():
        t = bench(problem, args.repeat, rng)
        row = "  ".join(f"{k}={v * 1e6:9.1f} us" for k, v in t.items())
        speedup = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:>22s} ({problem.num_edges} edges): {row}  speedup={speedup:.1f}x")


if __name__ == "__main__":
    main()
