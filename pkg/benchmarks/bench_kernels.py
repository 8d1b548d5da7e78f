"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py --sizes 2 4 8 --repeat 5

Each row reports the best-of-``repeat`` wall time per call for both backends
on the same random inputs, and the speedup of the compiled one.
"""
import argparse
import sys
import timeit

import numpy as np

from cran_duality import _pykernels, kernels
from cran_duality.verify import random_channel, substreams


def _inputs(n, seed):
    rng = substreams(seed, 1)[0]
    H = random_channel(n, n, rng).entries
    gamma = rng.uniform(0.05, 0.3, n)
    eta = 2.0 ** rng.uniform(3.0, 6.0, n) - 1.0
    p = rng.uniform(0.1, 2.0, n)
    A = rng.uniform(0.0, 1.0, (n, n))
    return H, p, gamma, eta, A


def _cases(mod, H, p, gamma, eta, A):
    return {
        "gamma_map": lambda: mod.gamma_map(H, p, gamma, eta, 1.0),
        "fixed_point": lambda: mod.fixed_point(H, gamma, eta, 1.0, 1e-10, 10_000, 1e12),
        "perron_root": lambda: mod.perron_root(A, 1e-12, 10_000),
    }


def best_time(fn, repeat):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 8], help="M = K values")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not kernels.compiled_available():
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    from cran_duality import _ckernels

    print(f"{'kernel':<12} {'M=K':>4} {'python':>12} {'cython':>12} {'speedup':>8}")
    for n in args.sizes:
        data = _inputs(n, args.seed)
        py, cy = _cases(_pykernels, *data), _cases(_ckernels, *data)
        for name in py:
            t_py = best_time(py[name], args.repeat)
            t_cy = best_time(cy[name], args.repeat)
            print(f"{name:<12} {n:>4} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
