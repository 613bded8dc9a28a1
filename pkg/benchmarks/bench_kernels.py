"""Compare the numba and numpy backends of the hot kernels.

    python benchmarks/bench_kernels.py [--size N] [--n BITS] [--repeat R]

Each kernel is run once per backend to warm up (JIT compilation for numba),
then timed ``repeat`` times; the table reports the best time and the
speedup.  Outputs of the two backends are compared as a sanity check.
"""

import argparse
import timeit

import numpy as np

from boolflow import flow, kernels


def cases(size, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, size)
    y = rng.uniform(0, 1, size) * kernels.h2(x)
    z = rng.uniform(0, 20, size)
    tables = np.where(flow.all_boolean_tables(n, 0, min(1 << (1 << n), 4096)) < 0, 1 - 1e-6, 1e-6)
    v = kernels.smooth(tables, 0.1, backend="numpy")
    return {
        "h2_inv": (kernels.h2_inv, (y,)),
        "big_l_inv": (kernels.big_l_inv, (z,)),
        "phi": (kernels.phi, (x, y)),
        "kappa": (kernels.kappa, (x, rng.uniform(0, 1, size))),
        "smooth": (kernels.smooth, (tables, 0.1)),
        "kl_edge_sum": (kernels.kl_edge_sum, (v,)),
        "hel_edge_sum": (kernels.hel_edge_sum, (1 - 2 * v,)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000, help="points for scalar kernels")
    ap.add_argument("--n", type=int, default=4, help="hypercube dimension for flow kernels")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not kernels.USE_NUMBA:
        print("numba backend disabled; nothing to compare")
        return
    print(f"{'kernel':<14}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, (fn, a) in cases(args.size, args.n, args.seed).items():
        row, outs = {}, {}
        for backend in ("numpy", "numba"):
            outs[backend] = fn(*a, backend=backend)
            t = timeit.repeat(lambda: fn(*a, backend=backend), number=1, repeat=args.repeat)
            row[backend] = 1e3 * min(t)
        diff = np.nanmax(np.abs(np.asarray(outs["numpy"]) - np.asarray(outs["numba"])))
        print(f"{name:<14}{row['numpy']:>12.2f}{row['numba']:>12.2f}"
              f"{row['numpy'] / row['numba']:>9.1f}x{diff:>13.2e}")


if __name__ == "__main__":
    main()
