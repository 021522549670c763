"""Time the compiled and pure-Python kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from tdapipe import kernels
from tdapipe.complex import rips_filtration
from tdapipe.metrics import euclidean_matrix
from tdapipe.persistence import _union_find_deaths


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    for n in (20, 40, 60):
        f = rips_filtration(euclidean_matrix(rng.normal(size=(n, 3))), 2)
        indptr, indices = f.boundary()
        yield f"reduce n={n} ({len(f)} simplices)", lambda k, f=f, p=indptr, i=indices: k.reduce_columns(
            p, i, f.dims, 2, True, 1)
        yield f"union-find n={n}", lambda k, f=f: _union_find_deaths(f, k)
    for n in (100, 400):
        x, y = rng.normal(size=(2, n))
        yield f"dtw {n}x{n}", lambda k, x=x, y=y: k.dtw(x, y, -1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'case':<36}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, job in cases(np.random.default_rng(0)):
        secs = [best_of(lambda: job(kernels.get_backend(b)), args.repeat) for b in backends]
        row = f"{name:<36}" + "".join(f"{s * 1e3:>10.2f}ms" for s in secs)
        if len(secs) > 1:
            row += f"{secs[backends.index('python')] / secs[backends.index('cython')]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
