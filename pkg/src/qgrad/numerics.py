"""Central difference schemes and function smoothings.

Coefficients are kept as exact fractions; the float copy is only used when
evaluating smoothings on data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from . import kernels
from .grid import GridSpec, map_over_grid

if TYPE_CHECKING:
    from .functions import ObjectiveFunction

Rational = Fraction


@dataclass(frozen=True)
class CentralDifferenceScheme:
    """Coefficients ``a_l`` for ``l = -m..m`` with ``a_0 = 1``."""

    m: int
    coefficients: tuple[Fraction, ...]
    float_cache: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def __getitem__(self, ell: int) -> Fraction:
        if abs(ell) > self.m:
            raise IndexError(f"offset {ell} outside -{self.m}..{self.m}")
        return self.coefficients[ell + self.m]

    def items(self):
        return zip(range(-self.m, self.m + 1), self.coefficients)


def coefficient(m: int, ell: int) -> Fraction:
    if ell == 0:
        return Fraction(1)
    a = abs(ell)
    mf = math.factorial(m)
    sign = -1 if ell % 2 == 0 else 1
    return Fraction(sign * mf * mf, ell * math.factorial(m + a) * math.factorial(m - a))


def make_scheme(m: int) -> CentralDifferenceScheme:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"scheme order m must be a positive integer, got {m!r}")
    m = int(m)
    coeffs = tuple(coefficient(m, ell) for ell in range(-m, m + 1))
    floats = np.array([float(c) for c in coeffs])
    floats.setflags(write=False)
    return CentralDifferenceScheme(m=m, coefficients=coeffs, float_cache=floats)


def moment_sum(scheme: CentralDifferenceScheme, k: int) -> Fraction:
    """Exact ``sum_l a_l * l**k`` (with ``0**0 = 1``)."""
    if k < 0:
        raise ValueError("moment order must be non-negative")
    return sum((a * Fraction(ell) ** k for ell, a in scheme.items()), Fraction(0))


def smoothing_eval(f: ObjectiveFunction, scheme: CentralDifferenceScheme, x) -> float | np.ndarray:
    """``sum_l a_l f(l x)``; ``x`` may be one point or a ``(count, d)`` batch."""
    x = np.asarray(x, dtype=np.float64)
    total = None
    for ell, a in zip(scheme.offsets, scheme.float_cache):
        term = a * np.asarray(f.evaluate(ell * x), dtype=np.float64)
        total = term if total is None else total + term
    return float(total) if np.ndim(total) == 0 else total


def smoothing_on_grid(f: ObjectiveFunction, scheme: CentralDifferenceScheme, grid: GridSpec) -> np.ndarray:
    return map_over_grid(grid, lambda pts: smoothing_eval(f, scheme, pts))


def linearity_defect(f: ObjectiveFunction, scheme: CentralDifferenceScheme, grid: GridSpec) -> float:
    """Mean over every grid point of ``(f_2m(x) - f(0) - grad f(0) . x)**2``."""
    if f.reference_gradient_at_origin is None:
        raise ValueError(f"function {f.name!r} has no reference gradient at the origin")
    grad = np.asarray(f.reference_gradient_at_origin, dtype=np.float64)
    f0 = float(f.evaluate(np.zeros(grid.d)))

    squared = np.empty(grid.size, dtype=np.float64)
    for sl, pts in grid.chunks():
        squared[sl] = (smoothing_eval(f, scheme, pts) - f0 - pts @ grad) ** 2
    return kernels.compensated_sum(squared) / grid.size
