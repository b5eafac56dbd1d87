#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python reference kernels.

Times the three hot paths — LLL reduction, the priority-queue K-best search,
and the depth-first sphere search — on representative problem sizes, and
prints one table row per (kernel, size) with the speedup of the compiled
backend.  Inputs are seeded, so repeated runs time identical work.

Usage:  python3 benchmarks/bench_kernels.py [--target-ms 100] [--seed 7]
"""

import argparse
import time

import numpy as np

from lrkbest._backend import available_backends, get_backend
from lrkbest.matstack import complex_to_real, mmse_extend, qr_decompose
from lrkbest.simkit import generate_channel


def _time_call(fn, *, target_ms: float) -> float:
    """Median wall time of ``fn()`` in milliseconds, auto-calibrated reps."""
    t0 = time.perf_counter()
    fn()
    once = time.perf_counter() - t0
    reps = max(3, min(200, int(target_ms / 1000.0 / max(once, 1e-9))))
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return 1000.0 * float(np.median(samples))


def _lll_cases(rng):
    for nt in (8, 16, 32):
        hc = generate_channel(rng, nt, nt)
        h, y = complex_to_real(hc, np.zeros(nt, dtype=complex))
        basis = mmse_extend(h, y, 1.0, 10.5).H_ext
        yield f"lll_reduce      {2 * (2 * nt)}x{2 * nt}", basis


def _search_cases(rng):
    for nt, k in ((8, 16), (16, 64), (32, 256)):
        n = 2 * nt
        hc = generate_channel(rng, nt, nt)
        h, y = complex_to_real(hc, np.zeros(nt, dtype=complex))
        r = qr_decompose(mmse_extend(h, y, 1.0, 10.5).H_ext).R
        z_true = rng.integers(-4, 5, size=n)
        ybreve = r @ z_true + 0.1 * rng.standard_normal(n)
        yield f"kbest_search    n={n:<3d} K={k:<4d}", r, ybreve, k


def _sphere_cases(rng):
    for nt, levels in ((2, 4), (4, 4), (4, 8)):
        n = 2 * nt
        a = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
        r = qr_decompose(a).R
        k_true = rng.integers(0, levels, size=n)
        ybreve = r @ (2.0 * k_true - levels + 1) + 0.3 * rng.standard_normal(n)
        yield f"sphere_search   n={n:<3d} L={levels}", r, ybreve, levels


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--target-ms", type=float, default=100.0,
                        help="time budget per (kernel, size, backend) sample loop")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    names = available_backends()
    if "c" not in names:
        print("compiled kernels unavailable; nothing to compare "
              "(only the python backend is importable)")
        return 1
    backends = {name: get_backend(name) for name in ("c", "python")}

    header = f"{'case':<28s} {'c (ms)':>10s} {'python (ms)':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))

    def row(label, runs):
        ms = {name: _time_call(runs[name], target_ms=args.target_ms)
              for name in ("c", "python")}
        print(f"{label:<28s} {ms['c']:>10.3f} {ms['python']:>12.3f} "
              f"{ms['python'] / ms['c']:>7.1f}x")

    rng = np.random.default_rng(args.seed)
    for label, basis in _lll_cases(rng):
        row(label, {name: (lambda b=backends[name], a=basis:
                           b.lll_reduce_kernel(a.copy(), 0.99, 10**6))
                    for name in ("c", "python")})

    rng = np.random.default_rng(args.seed)
    for label, r, ybreve, k in _search_cases(rng):
        row(label, {name: (lambda b=backends[name], rr=r, yy=ybreve, kk=k:
                           b.kbest_search_kernel(rr, yy, kk))
                    for name in ("c", "python")})

    rng = np.random.default_rng(args.seed)
    for label, r, ybreve, levels in _sphere_cases(rng):
        row(label, {name: (lambda b=backends[name], rr=r, yy=ybreve, ll=levels:
                           b.sphere_search_kernel(rr, yy, ll))
                    for name in ("c", "python")})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
