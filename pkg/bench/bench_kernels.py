"""Compare the compiled and pure-Python integer/contour kernels.

    python3 bench/bench_kernels.py [--hmax 100000] [--repeat 3]
"""
import argparse
import math
import timeit

import numpy as np

from wavekit import _purepy

try:
    from wavekit import _speedups
except ImportError:
    _speedups = None


def _cases(hmax):
    x = np.linspace(0, 4 * math.pi, 200)
    y = np.linspace(0, 1, 120)
    field = np.cos(x)[:, None] * np.sin(math.pi * y)[None, :]
    return {
        "two_square_count_table": (lambda m: m.two_square_count_table(hmax)),
        "two_square_pairs(5**21)": (lambda m: m.two_square_pairs(5**21)),
        "marching_squares(200x120)": (lambda m: m.marching_squares(field, 0.3)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hmax", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _speedups is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<28} {'python [s]':>12} {'cython [s]':>12} {'speedup':>9}")
    for name, fn in _cases(args.hmax).items():
        tp = min(timeit.repeat(lambda: fn(_purepy), number=1, repeat=args.repeat))
        if _speedups is None:
            print(f"{name:<28} {tp:12.4f} {'-':>12} {'-':>9}")
            continue
        tc = min(timeit.repeat(lambda: fn(_speedups), number=1, repeat=args.repeat))
        a, b = fn(_purepy), fn(_speedups)
        same = np.array_equal(np.asarray(a), np.asarray(b)) if name.startswith("two") else \
            np.allclose(np.sort(np.asarray(a).reshape(len(a), -1), axis=0), np.sort(np.asarray(b).reshape(len(b), -1), axis=0))
        print(f"{name:<28} {tp:12.4f} {tc:12.4f} {tp / tc:8.1f}x{'' if same else '  MISMATCH'}")


if __name__ == "__main__":
    main()
