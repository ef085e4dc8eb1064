#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins on desk-scale inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both paths are called directly (``*_nb`` / ``*_np``), so no environment flag
is needed. The first numba call of each kernel is a warm-up and is excluded.
"""

import argparse
import time

import numpy as np

from itts_lab import _kernels as K
from itts_lab._accel import HAVE_NUMBA
from itts_lab.forest import presort


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    L, C, H = 130, 32, 32  # an average synthetic sentence, desk-size encoder
    x = rng.standard_normal((L, C)).astype(np.float32)
    w = (rng.standard_normal((5, C, C)) * 0.1).astype(np.float32)
    b = np.zeros(C, dtype=np.float32)
    w_in = (rng.standard_normal((C, 4 * H)) * 0.1).astype(np.float32)
    bias = np.zeros(4 * H, dtype=np.float32)
    w_rec = (rng.standard_normal((H, 4 * H)) * 0.1).astype(np.float32)
    xp = K.input_projection_np(x, w_in, bias)
    h0 = np.zeros(H, dtype=np.float32)

    n, F = 400, 20
    X = rng.integers(0, 8, size=(n, F)).astype(np.float64)
    y = X[:, 0] * 3 + X[:, 1] * 2 + rng.normal(0, 0.1, n)
    wt = np.ones(n)
    order = presort(X)
    tree = K.grow_tree_np(X, y, wt, order)

    return {
        "conv1d_relu": (x, w, b, 0, L),
        "input_projection": (x, w_in, bias),
        "lstm_scan": (xp, w_rec, h0, h0, 0, L, 1),
        "grow_tree": (X, y, wt, order),
        "predict_tree": (*tree[:5], X),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, call_args in cases(rng).items():
        f_np = getattr(K, f"{name}_np")
        f_nb = getattr(K, f"{name}_nb")
        f_nb(*call_args)  # compile
        t_np = best_of(lambda: f_np(*call_args), args.repeat)
        t_nb = best_of(lambda: f_nb(*call_args), args.repeat)
        print(f"{name:<18}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
