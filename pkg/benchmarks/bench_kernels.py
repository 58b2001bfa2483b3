"""Compare the numba and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``.  Timings are best-of-N wall
clock after one warm-up call (which also triggers JIT compilation).
"""
import argparse
import timeit

import numpy as np

from sqblockade import _kernels as K


def _triplet_terms(d, rng):
    n = 6
    offa = rng.integers(-2, 3, n)
    offb = rng.integers(-2, 3, n)
    va = rng.random((n, d))
    vb = rng.random((n, d))
    coef = rng.random(n) + 1j * rng.random(n)
    return offa, va, offb, vb, coef


def _best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for d in (16, 64, 128):
        terms = _triplet_terms(d, rng)
        cases.append((f"superop_triplets d={d}",
                      lambda t=terms, d=d: K.np_superop_triplets(d, *t),
                      lambda t=terms, d=d: K.nb_superop_triplets(d, *t)))
    for d in (64, 512):
        p = rng.dirichlet(np.ones(d))
        cases.append((f"factorial_moments d={d}",
                      lambda p=p: K.np_factorial_moments(p, 4),
                      lambda p=p: K.nb_factorial_moments(p, 4)))
    grid = [rng.random(40000) for _ in range(4)]
    for k in (2, 4):
        cases.append((f"wick_moment k={k} n=40000",
                      lambda k=k: K.np_wick_moment(k, *grid),
                      lambda k=k: K.nb_wick_moment(k, *grid)))

    print(f"numba available: {K.HAVE_NUMBA}, active backend: {K.BACKEND}")
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}")
    for name, f_np, f_nb in cases:
        t_np = _best(f_np, args.repeat) * 1e3
        t_nb = _best(f_nb, args.repeat) * 1e3
        print(f"{name:32s} {t_np:12.3f} {t_nb:12.3f} {t_np / t_nb:9.2f}")


if __name__ == "__main__":
    main()
