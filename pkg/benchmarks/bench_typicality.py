"""Compare the compiled typicality-scan kernel against the numpy fallback.

Run:  python benchmarks/bench_typicality.py
"""
import time

import numpy as np

from statecoord import _typ_py
from statecoord._typbackend import HAVE_EXT, typical_mask


def bench(fn, codewords, ctx, q, eps, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(codewords, ctx, q, eps)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(0)
    for m, n, n_ctx, n_sym in [(10_000, 100, 4, 2), (200_000, 60, 2, 2),
                               (1_000_000, 24, 2, 2)]:
        codewords = rng.integers(0, n_sym, size=(m, n), dtype=np.int32)
        ctx = rng.integers(0, n_ctx, size=n, dtype=np.int32)
        q = rng.dirichlet(np.ones(n_sym), size=n_ctx)
        q = np.ascontiguousarray(q / q.sum())
        t_py, out_py = bench(_typ_py.typical_mask, codewords, ctx, q, 0.5)
        line = f"M={m:>9} n={n:>4}  numpy {t_py * 1e3:8.2f} ms"
        if HAVE_EXT:
            t_c, out_c = bench(typical_mask, codewords, ctx, q, 0.5)
            assert np.array_equal(np.asarray(out_c), out_py)
            line += f"   compiled {t_c * 1e3:8.2f} ms   speedup {t_py / t_c:5.1f}x"
        else:
            line += "   (compiled kernel unavailable)"
        print(line)


if __name__ == "__main__":
    main()
