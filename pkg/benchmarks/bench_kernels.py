"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--threads 1]
"""
import argparse
import time

import numpy as np

from frostlab import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng, threads):
    x = rng.random((4000, 2))
    w = np.full(len(x), 1.0 / len(x))
    probes = rng.random((2000, 2))
    u = rng.random((200000, 2)) * 63
    wb = np.full(len(u), 1.0 / len(u))
    return {
        "riesz_rows 4000x4000": lambda k: k.riesz_rows(x, w, 0.7, 0.0, threads),
        "riesz_potential 2000x4000": lambda k: k.riesz_potential(x, w, probes, 0.7, 1e-3, threads),
        "linear_bin 2e5 -> 64^2": lambda k: k.linear_bin(u, wb, np.zeros(2), 1.0, (64, 64)),
        "p_grid_max 120^3": lambda k: k.p_grid_max(2, 1, 1.5, 0.8, 120, threads),
    }


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    try:
        compiled = kernels.backend("compiled")
    except ImportError:
        compiled = None
    python = kernels.backend("python")
    if compiled is None:
        print("compiled backend unavailable; only the python backend can be timed")
    print(f"{'kernel':28s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>8s}  max diff")
    for name, fn in cases(rng, args.threads).items():
        tp, outp = _time(lambda: fn(python), args.repeat)
        if compiled is None:
            print(f"{name:28s} {'-':>12s} {tp * 1e3:12.1f}")
            continue
        tc, outc = _time(lambda: fn(compiled), args.repeat)
        a = np.asarray(outc[0] if isinstance(outc, tuple) else outc, dtype=float)
        b = np.asarray(outp[0] if isinstance(outp, tuple) else outp, dtype=float)
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        print(f"{name:28s} {tc * 1e3:12.1f} {tp * 1e3:12.1f} {tp / tc:8.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
