"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel and problem size with the best wall time of each
backend and the speed-up. Noise outputs are checked for bitwise equality first.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qgrad import _fallback

try:
    from qgrad import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")

    noise_cases = [(100, 8, 128), (2000, 8, 128), (200, 6, 4096)]
    for steps, factors, points in noise_cases:
        call = lambda mod: mod.phase_noise(12345, steps, factors, points, 1e-6)
        assert np.array_equal(call(_kernels), call(_fallback)), "backends disagree"
        tc = best_of(lambda: call(_kernels), args.repeat)
        tp = best_of(lambda: call(_fallback), args.repeat)
        draws = steps * factors * points
        print(f"phase_noise     {draws:>11,d} draws  compiled {tc:8.4f}s  python {tp:8.4f}s  x{tp / tc:6.1f}")

    rng = np.random.default_rng(0)
    for size in (1 << 14, 1 << 20):
        values = rng.normal(size=size) ** 2
        assert abs(_kernels.compensated_sum(values) - _fallback.compensated_sum(values)) <= 1e-15 * values.sum()
        tc = best_of(lambda: _kernels.compensated_sum(values), args.repeat)
        tp = best_of(lambda: _fallback.compensated_sum(values), args.repeat)
        print(f"compensated_sum {size:>11,d} values compiled {tc:8.4f}s  python {tp:8.4f}s  x{tp / tc:6.1f}")


if __name__ == "__main__":
    main()
