"""Time the batched entry solver on both backends and report the speedup.

The workload mirrors one template update: one subproblem per upper-triangle
entry of an M x M template, with one hinge row per competing group.  Both
backends must return bitwise-identical minimizers before timing starts.
"""

import argparse
import time

import numpy as np

from tgraph.kernels import available_backends


def make_batch(rng, num_rois, num_hinges):
    n = num_rois * (num_rois - 1) // 2
    a = float(rng.uniform(4.0, 12.0))
    s = a * rng.uniform(-0.9, 0.9, size=n)
    b = rng.uniform(-0.8, 0.8, size=(num_hinges, n))
    return a, s, b


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rois", type=int, nargs="+", default=[64, 128, 200],
                        help="template sizes to benchmark")
    parser.add_argument("--hinges", type=int, default=1,
                        help="competing templates per entry")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions, best is kept")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; nothing to compare")
        return 1
    pure = backends["python"]
    fast = backends["compiled"]
    rng = np.random.default_rng(args.seed)

    header = f"{'rois':>6} {'entries':>8} {'python':>11} {'compiled':>11} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for m in args.rois:
        a, s, b = make_batch(rng, m, args.hinges)
        call = (a, s, b, 0.1, 0.005, 0.05, True)
        ref = pure.solve_entries(*call)
        out = fast.solve_entries(*call)
        if not np.array_equal(ref, out):
            raise SystemExit(f"backends disagree at rois={m}")
        t_pure = best_time(lambda: pure.solve_entries(*call), args.repeats)
        t_fast = best_time(lambda: fast.solve_entries(*call), args.repeats)
        print(f"{m:>6} {s.size:>8} {t_pure * 1e3:>9.2f}ms "
              f"{t_fast * 1e3:>9.2f}ms {t_pure / t_fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
