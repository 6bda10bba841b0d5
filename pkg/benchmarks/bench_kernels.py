"""Compiled vs pure-Python simulation kernels.

Both backends draw identical samples, so each row also checks that the outputs
match. Run with ``python benchmarks/bench_kernels.py [--repeat R]``.
"""

import argparse
import time

import numpy as np

from couponflux import _backend

CASES = [
    ("clumsy_batch", (8, 0.6), 200),
    ("careless_batch", (4, 0.7), 200),
    ("combined_batch", (4, 0.9, 0.8), 200),
    ("reset_direct_batch", (10, 0.1, None), 200),
    ("reset_regen_batch", (10, 0.1, None), 200),
]


def _args(name, args):
    if name == "reset_regen_batch":
        from couponflux.reset import ResetParams, success_probability
        n, rho, _ = args
        return (n, rho, success_probability(ResetParams(n, rho)))
    return args


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if not _backend.COMPILED:
        print("compiled kernels are not built; only the Python backend is available")
    py = _backend.get("python")
    print(f"{'kernel':<20}{'python s':>12}{'cython s':>12}{'speedup':>10}  identical")
    for name, model_args, count in CASES:
        a = _args(name, model_args)
        budget = 10 ** 9
        tp, op = best_of(lambda: getattr(py, name)(*a, args.seed, 0, count, budget), args.repeat)
        if _backend.COMPILED:
            cy = _backend.get("cython")
            # more samples on the compiled side so its timing is above noise
            scale = 50
            tc, oc = best_of(lambda: getattr(cy, name)(*a, args.seed, 0, count * scale, budget),
                             args.repeat)
            tc /= scale
            same = np.array_equal(op, oc[:count])
            print(f"{name:<20}{tp:>12.4f}{tc:>12.5f}{tp / tc:>10.0f}  {same}")
        else:
            print(f"{name:<20}{tp:>12.4f}{'-':>12}{'-':>10}  -")


if __name__ == "__main__":
    main()
