"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 8 16 32 64]

Prints one line per kernel and size with the best-of-N time for each
backend and the speedup.  Results are also checked to agree.
"""
import argparse
import time

import numpy as np

from multiverse import _backend
from multiverse.linalg import cholesky, sym_eig
from multiverse.rng import Rng


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _spd(d, seed):
    X = Rng(seed).normal((d, 2 * d))
    return X @ X.T / (2 * d) + np.eye(d)


def cases(sizes):
    for d in sizes:
        A = _spd(d, d)
        yield f"sym_eig d={d}", lambda k, A=A: sym_eig(A, kernels=k), lambda r: r.values
        yield f"cholesky d={d}", lambda k, A=A: cholesky(A, kernels=k), lambda r: r.L
        B = Rng(d + 1).normal((d, 64))
        L = cholesky(A)
        yield (f"solve_lower d={d} x64", lambda k, L=L, B=B: k.solve_lower(L.L, B),
               lambda r: np.asarray(r))
    yield ("xoshiro 1e5", lambda k: Rng(1, kernels=k).raw(100_000), lambda r: np.asarray(r))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    args = ap.parse_args()
    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, fn, key in cases(args.sizes):
        times, outs = [], []
        for n in names:
            k = _backend.get(n)
            outs.append(key(fn(k)))
            times.append(_best(lambda: fn(k), args.repeat))
        if len(outs) > 1 and not np.allclose(outs[0], outs[1], rtol=1e-10, atol=1e-12):
            raise SystemExit(f"{label}: backends disagree")
        line = f"{label:<24}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) > 1:
            line += f"  {times[0] / times[1]:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
