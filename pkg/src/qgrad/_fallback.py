"""Numpy implementations of the compiled kernels."""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SCALE = 1.0 / 9007199254740992.0


def _unit(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _SCALE


def phase_noise(key: int, steps: int, factors: int, npoints: int, half_width: float) -> np.ndarray:
    acc = np.zeros(npoints, dtype=np.float64)
    offsets = np.arange(npoints, dtype=np.uint64)
    key = np.uint64(key)
    with np.errstate(over="ignore"):
        for s in range(steps):
            for f in range(factors):
                base = key + np.uint64((s * factors + f) * npoints)
                u = _unit(base + offsets)
                acc += (2.0 * u - 1.0) * half_width
    return acc


def compensated_sum(values: np.ndarray) -> float:
    return math.fsum(np.asarray(values, dtype=np.float64))
