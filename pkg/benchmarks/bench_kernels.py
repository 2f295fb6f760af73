#!/usr/bin/env python3
"""Benchmark the hot kernels on both backends.

Runs each workload twice in subprocesses: once with numba enabled and once
with ISOMOD_DISABLE_NUMBA=1 (pure-numpy fallback), then prints a comparison
table.  Usage: python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    from isomod import _kernels
    from isomod.arrivals import ChannelParams, gaussian_tail
    from isomod.modulation import icsk_stats, irsk_stats

    ch = ChannelParams(n=1640.0, p1=0.6097, p2=0.7208, noise_std=100.0)

    def brownian_3d():
        _kernels.simulate_first_hits(7, 20_000, 1000, 2.6547e-6, 16e-6, 10e-6, 3)

    def brownian_1d():
        _kernels.simulate_first_hits(7, 50_000, 2000, 2.6547e-6, 100e-6, 57e-6, 1)

    grid_b = np.linspace(0.0, 3 * ch.n * ch.p2 + 400.0, 320)
    means, variances, weights = icsk_stats(ch, 4)
    tails = gaussian_tail(
        means[:, :, None], variances[:, :, None], grid_b[None, None, :]
    )
    qte = np.concatenate(
        [np.ones((2, 4, 1)), tails, np.zeros((2, 4, 1))], axis=-1
    )

    def triple_banded():
        _kernels.best_ordered_triple_banded(qte, weights)

    grid_r = np.linspace(0.0, ch.n * ch.p2 + 400.0, 200)
    (m1, v1), (m2, v2) = irsk_stats((ch, ch))

    def ext(m, v):
        t = gaussian_tail(m[:, :, None], v[:, :, None], grid_r[None, None, :])
        return np.concatenate([np.ones((4, 4, 1)), t, np.zeros((4, 4, 1))], axis=-1)

    qtu, qtv = ext(m1, v1), ext(m2, v2)

    def triple_ratio():
        _kernels.best_ordered_triple_ratio(qtu, qtv)

    return {
        "brownian_first_hits_3d (20k x 1k steps)": brownian_3d,
        "brownian_first_hits_1d (50k x 2k steps)": brownian_1d,
        "triple_search_banded (C(320,3) tuples)": triple_banded,
        "triple_search_ratio (C(200,3) tuples)": triple_ratio,
    }


def run_worker() -> None:
    from isomod import _kernels

    results = {"backend": _kernels.BACKEND, "timings": {}}
    for name, fn in workloads().items():
        fn()  # warm-up (JIT compile / cache touch)
        start = time.perf_counter()
        fn()
        results["timings"][name] = time.perf_counter() - start
    print(json.dumps(results))


def main() -> int:
    runs = {}
    for label, env_value in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, ISOMOD_DISABLE_NUMBA=env_value)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        runs[label] = json.loads(proc.stdout.strip().splitlines()[-1])
        if runs[label]["backend"] != label:
            print(f"note: requested {label} backend, got {runs[label]['backend']}")

    print(f"\n{'workload':<42} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    print("-" * 75)
    for name in runs["numba"]["timings"]:
        fast = runs["numba"]["timings"][name]
        slow = runs["numpy"]["timings"][name]
        print(f"{name:<42} {fast * 1e3:>8.1f}ms {slow * 1e3:>8.1f}ms {slow / fast:>8.2f}x")
    return 0


if __name__ == "__main__":
    if "--worker" in sys.argv:
        run_worker()
    else:
        raise SystemExit(main())
