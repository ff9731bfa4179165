"""Compare the compiled multiplication kernel against the pure-Python twin.

Usage: python3 benchmarks/bench_core.py [repeats]
"""

import random
import sys
import time

from sdgeom import _core_py

try:
    from sdgeom import _core
except ImportError:
    _core = None


def random_terms(rng, k, n, count):
    terms = {}
    for _ in range(count):
        r = rng.randint(0, min(k, n))
        rows = rng.sample(range(k), r)
        cols = rng.sample(range(n), r)
        key = (sum(1 << b for b in rows), sum(1 << b for b in cols))
        terms[key] = rng.uniform(-5, 5)
    return terms


def bench(mod, pairs, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        for a, b in pairs:
            mod.elem_mul(a, b)
    return time.perf_counter() - start


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    rng = random.Random(0)
    pairs = []
    for _ in range(300):
        k, n = rng.randint(2, 4), rng.randint(2, 4)
        pairs.append((random_terms(rng, k, n, 8), random_terms(rng, k, n, 8)))

    t_py = bench(_core_py, pairs, repeats)
    print(f"pure python : {t_py:8.3f} s "
          f"({repeats * len(pairs) / t_py:,.0f} products/s)")
    if _core is None:
        print("compiled    : not built")
        return
    # sanity: identical results
    for a, b in pairs[:50]:
        got, want = _core.elem_mul(a, b), _core_py.elem_mul(a, b)
        assert set(got) == set(want)
        assert all(abs(got[key] - want[key]) <= 1e-12 for key in got)
    t_c = bench(_core, pairs, repeats)
    print(f"compiled    : {t_c:8.3f} s "
          f"({repeats * len(pairs) / t_c:,.0f} products/s)")
    print(f"speedup     : {t_py / t_c:.1f}x")


if __name__ == "__main__":
    main()
