"""Compiled vs pure-Python convolution kernels.

Times the raw truncated products on random sparse tables, then one end-to-end
expansion with each backend.  Run from the repository root:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import importlib
import os
import time
import timeit

import numpy as np

from bergjet import _kernels_py
from bergjet._keys import limit as key_limit
from bergjet._keys import pack


def random_table(rng, nvars, degree, density, exact):
    table = {}
    for _ in range(int(density * 4000)):
        exps = rng.multinomial(int(rng.integers(0, degree + 1)), [1 / nvars] * nvars)
        key = pack(tuple(int(e) for e in exps))
        table[key] = int(rng.integers(-1000, 1000)) if exact else float(rng.standard_normal())
    return table


def bench_raw(repeat):
    try:
        from bergjet import _kernels as compiled
    except ImportError:
        print("compiled extension not built; only the Python backend is available")
        return
    rng = np.random.default_rng(0)
    print(f"{'case':<28}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for nvars, degree, density in [(2, 12, 0.05), (3, 10, 0.1), (6, 8, 0.2)]:
        limit = key_limit(degree)
        for exact in (True, False):
            a = random_table(rng, nvars, degree, density, exact)
            b = random_table(rng, nvars, degree, density, exact)
            name = "convolve" if exact else "convolve_float"
            py = getattr(_kernels_py, name)
            cy = getattr(compiled, name)
            ref, got = py(a, b, limit), cy(a, b, limit)
            assert ref.keys() == got.keys()
            assert all(abs(ref[k] - got[k]) <= 1e-9 * (1 + abs(ref[k])) for k in ref)
            tp = min(timeit.repeat(lambda f=py, a=a, b=b, lim=limit: f(a, b, lim), number=1, repeat=repeat))
            tc = min(timeit.repeat(lambda f=cy, a=a, b=b, lim=limit: f(a, b, lim), number=1, repeat=repeat))
            label = f"{nvars}v deg{degree} {'int' if exact else 'float'} ({len(a)}x{len(b)})"
            print(f"{label:<28}{tp * 1e3:>12.2f}{tc * 1e3:>14.2f}{tp / tc:>9.1f}x")


def bench_expand():
    import bergjet._backend as backend
    from bergjet import geometry, recursion

    results = {}
    for pure in (True, False):
        if pure:
            os.environ["BERGJET_PURE_PYTHON"] = "1"
        else:
            os.environ.pop("BERGJET_PURE_PYTHON", None)
        importlib.reload(backend)
        phi = geometry.random_quartic_potential(2, np.random.default_rng(1), 8)
        start = time.perf_counter()
        seq = recursion.expand(phi, 2)
        results[backend.BACKEND] = (time.perf_counter() - start, seq.base_values)
    os.environ.pop("BERGJET_PURE_PYTHON", None)
    importlib.reload(backend)
    values = {tuple(v) for _, v in results.values()}
    assert len(values) == 1, "backends disagree"
    for name, (sec, _) in results.items():
        print(f"expand n=2 N=2 [{name}]: {sec:.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_raw(args.repeat)
    bench_expand()


if __name__ == "__main__":
    main()
