"""Time the numba and numpy enumeration kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both paths return integer histograms; the script asserts they agree before
reporting timings.  The first numba call includes JIT compilation, so it is
warmed up separately.
"""
import argparse
import time

import numpy as np

from strongconv.kernels import gauss_loop_histogram, product_loop_histogram, trace_involution
from strongconv.ncpoly import make_word
from strongconv.weingarten import _gen_positions, _perms

GAUSS_CASES = [
    ("gue 1^12", [1] * 12, False),
    ("gue 1^14", [1] * 14, False),
    ("gue (12)^6", [1, 2] * 6, False),
    ("goe 1^10", [1] * 10, True),
    ("goe 1^12", [1] * 12, True),
]


def unitary_options(word):
    w = make_word(word)
    opts = []
    for plain, starred in _gen_positions(w):
        L = len(plain)
        cur = []
        for a in _perms(L):
            for b in _perms(L):
                cur.append([(2 * plain[i], 2 * starred[a[i]] + 1) for i in range(L)]
                           + [(2 * plain[i] + 1, 2 * starred[b[i]]) for i in range(L)])
        opts.append(cur)
    return trace_involution(len(w)), opts


PRODUCT_CASES = [
    ("haar (1 1*)^3", "1,1*,1,1*,1,1*"),
    ("haar (1 2 1* 2*)^2", "1,2,1*,2*,1,2,1*,2*"),
    ("haar (1 1*)^4", "1,1*,1,1*,1,1*,1,1*"),
]


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    gauss_loop_histogram([1, 1], backend="numba")
    tau, opts = unitary_options("1,1*")
    product_loop_histogram(tau, opts, backend="numba")

    print(f"{'case':<24}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, labels, tw in GAUSS_CASES:
        tn, hn = best(lambda: gauss_loop_histogram(labels, tw, backend="numba"), args.repeat)
        tp, hp = best(lambda: gauss_loop_histogram(labels, tw, backend="numpy"), args.repeat)
        assert np.array_equal(hn, hp), name
        print(f"{name:<24}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}")
    for name, word in PRODUCT_CASES:
        tau, opts = unitary_options(word)
        tn, hn = best(lambda: product_loop_histogram(tau, opts, backend="numba"), args.repeat)
        tp, hp = best(lambda: product_loop_histogram(tau, opts, backend="numpy"), args.repeat)
        assert np.array_equal(hn, hp), name
        print(f"{name:<24}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}")


if __name__ == "__main__":
    main()
