"""Objective functions, the sign-vector test family and Gevrey checks.

Multi-indices follow the coordinate labels ``1..d``: ``alpha = (1, 1)`` is the
second derivative along the first axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e

Domain = tuple[float, float] | None


@dataclass(frozen=True)
class ObjectiveFunction:
    """A real function on ``R^d`` together with its declared smoothness.

    ``evaluate`` takes an array whose last axis has length ``dimension`` and
    returns the values over the leading axes. ``declared_domain`` is an open
    interval applied to every coordinate, or ``None`` for all of space.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    dimension: int
    declared_c: float
    declared_sigma: float
    declared_domain: Domain = None
    reference_gradient_at_origin: np.ndarray | None = None
    name: str = "f"
    partial: Callable[[Sequence[int], np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    numerical_evidence: bool = False

    def __call__(self, x) -> float | np.ndarray:
        out = self.evaluate(np.asarray(x, dtype=np.float64))
        return float(out) if np.ndim(out) == 0 else out


def zero_function(d: int) -> ObjectiveFunction:
    return ObjectiveFunction(
        evaluate=lambda x: np.zeros(np.shape(x)[:-1]),
        dimension=d,
        declared_c=1.0,
        declared_sigma=0.0,
        reference_gradient_at_origin=np.zeros(d),
        name="zero",
    )


def linear_function(slope, offset: float = 0.0, c: float = 1.0) -> ObjectiveFunction:
    """``x -> offset + slope . x``. Only Gevrey-bounded near the origin."""
    slope = np.asarray(slope, dtype=np.float64)
    return ObjectiveFunction(
        evaluate=lambda x: offset + np.asarray(x) @ slope,
        dimension=slope.size,
        declared_c=c,
        declared_sigma=0.0,
        reference_gradient_at_origin=slope.copy(),
        name="linear",
    )


# ---------------------------------------------------------------------------
# test function family


def _sin_derivative(order: int, t: np.ndarray) -> np.ndarray:
    r = order % 4
    if r == 0:
        return np.sin(t)
    if r == 1:
        return np.cos(t)
    if r == 2:
        return -np.sin(t)
    return -np.cos(t)


def _cos_derivative(order: int, t: np.ndarray) -> np.ndarray:
    r = order % 4
    if r == 0:
        return np.cos(t)
    if r == 1:
        return -np.sin(t)
    if r == 2:
        return -np.cos(t)
    return np.sin(t)


def _sum_with_excluded_products(lead: np.ndarray, others: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_j w_j lead_j prod_{k != j} others_k`` along the last axis, without division."""
    ones = np.ones(others.shape[:-1] + (1,))
    prefix = np.cumprod(np.concatenate([ones, others[..., :-1]], axis=-1), axis=-1)
    suffix = np.cumprod(np.concatenate([ones, others[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return np.sum(weights * lead * prefix * suffix, axis=-1)


@dataclass(frozen=True)
class TestFunctionInstance:
    """``sum_j 73 eps b_j / (c d) * sin(c x_j) * prod_{k != j} cos(c x_k)``."""

    __test__ = False  # not a pytest class

    d: int
    c: float
    eps: float
    b: tuple[int, ...]

    def __post_init__(self):
        if len(self.b) != self.d:
            raise ValueError(f"sign vector has length {len(self.b)}, expected d={self.d}")
        if any(s not in (-1, 1) for s in self.b):
            raise ValueError(f"sign vector entries must be +-1, got {self.b}")
        if not (self.c > 0 and self.eps > 0):
            raise ValueError("c and eps must be positive")

    @property
    def weights(self) -> np.ndarray:
        return 73.0 * self.eps * np.asarray(self.b, dtype=np.float64) / (self.c * self.d)

    def flipped(self, j: int) -> TestFunctionInstance:
        """The neighbour whose sign differs in coordinate ``j`` (0-based)."""
        b = list(self.b)
        b[j] = -b[j]
        return TestFunctionInstance(self.d, self.c, self.eps, tuple(b))

    def as_objective(self) -> ObjectiveFunction:
        return ObjectiveFunction(
            evaluate=lambda x: test_function_eval(self, x),
            dimension=self.d,
            declared_c=self.c,
            declared_sigma=0.0,
            reference_gradient_at_origin=gradient_at_origin(self),
            name=f"test(d={self.d},c={self.c:g},eps={self.eps:g})",
            partial=lambda alpha, x: test_function_partial(self, alpha, x),
        )


def test_function_eval(inst: TestFunctionInstance, x) -> np.ndarray:
    t = inst.c * np.asarray(x, dtype=np.float64)
    out = _sum_with_excluded_products(np.sin(t), np.cos(t), inst.weights)
    return float(out) if np.ndim(out) == 0 else out


def test_function_partial(inst: TestFunctionInstance, alpha: Sequence[int], x) -> np.ndarray:
    """Closed-form ``d_alpha f`` with 1-based coordinate labels in ``alpha``."""
    counts = np.zeros(inst.d, dtype=np.int64)
    for j in alpha:
        if not 1 <= j <= inst.d:
            raise ValueError(f"multi-index entry {j} outside 1..{inst.d}")
        counts[j - 1] += 1
    t = inst.c * np.asarray(x, dtype=np.float64)
    lead = np.stack([_sin_derivative(int(a), t[..., j]) for j, a in enumerate(counts)], axis=-1)
    others = np.stack([_cos_derivative(int(a), t[..., j]) for j, a in enumerate(counts)], axis=-1)
    out = inst.c ** len(alpha) * _sum_with_excluded_products(lead, others, inst.weights)
    return float(out) if np.ndim(out) == 0 else out


def gradient_at_origin(inst: TestFunctionInstance) -> np.ndarray:
    return 73.0 * inst.eps / inst.d * np.asarray(inst.b, dtype=np.float64)


# ---------------------------------------------------------------------------
# one-dimensional catalogue


def _scalar(fn):
    return lambda x: fn(np.asarray(x, dtype=np.float64)[..., 0])


def _repeat_partial(fn):
    # fn(k, t) is the k-th derivative of the 1-D function at t
    return lambda alpha, x: fn(len(alpha), np.asarray(x, dtype=np.float64)[..., 0])


# Entries whose declared class cannot hold: 1/2 arctan(cx) tends to pi/4 > 1/2,
# so the order-0 bound fails once |cx| > tan(1).
KNOWN_DISCREPANCIES = frozenset({"half-arctan"})


def catalog(c: float = 1.0) -> dict[str, ObjectiveFunction]:
    """The seven tabulated 1-D functions with their declared ``(c, sigma, domain)``."""

    def half_sine_derivative(k, t):
        return 0.5 * c**k * _sin_derivative(k, c * t)

    def half_cosine_derivative(k, t):
        return 0.5 * c**k * _cos_derivative(k, c * t)

    def shifted_exp_derivative(k, t):
        return 0.5 * (-c) ** k * np.exp(-c * (t + 1))

    def gaussian_derivative(k, t):
        u = c * t
        return 0.5 * (-c) ** k * hermite_e.hermeval(u, [0] * k + [1]) * np.exp(-0.5 * u**2)

    entries = [
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 * np.sin(c * t)),
            dimension=1, declared_c=c, declared_sigma=0.0, declared_domain=None,
            reference_gradient_at_origin=np.array([0.5 * c]), name="half-sine",
            partial=_repeat_partial(half_sine_derivative),
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 * np.cos(c * t)),
            dimension=1, declared_c=c, declared_sigma=0.0, declared_domain=None,
            reference_gradient_at_origin=np.array([0.0]), name="half-cosine",
            partial=_repeat_partial(half_cosine_derivative),
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 * np.exp(-c * (t + 1))),
            dimension=1, declared_c=c, declared_sigma=0.0, declared_domain=(-1.0, math.inf),
            reference_gradient_at_origin=np.array([-0.5 * c * math.exp(-c)]), name="shifted-exponential",
            partial=_repeat_partial(shifted_exp_derivative),
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 * np.exp(-0.5 * (c * t) ** 2)),
            dimension=1, declared_c=c, declared_sigma=0.5, declared_domain=None,
            reference_gradient_at_origin=np.array([0.0]), name="gaussian",
            partial=_repeat_partial(gaussian_derivative), numerical_evidence=True,
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 / (1 + (c * t) ** 2)),
            dimension=1, declared_c=c, declared_sigma=1.0, declared_domain=None,
            reference_gradient_at_origin=np.array([0.0]), name="lorentzian", numerical_evidence=True,
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 * np.arctan(c * t)),
            dimension=1, declared_c=c, declared_sigma=1.0, declared_domain=None,
            reference_gradient_at_origin=np.array([0.5 * c]), name="half-arctan", numerical_evidence=True,
        ),
        ObjectiveFunction(
            evaluate=_scalar(lambda t: 0.5 / (1 + np.exp(-c * t))),
            dimension=1, declared_c=c, declared_sigma=1.0, declared_domain=None,
            reference_gradient_at_origin=np.array([0.125 * c]), name="logistic", numerical_evidence=True,
        ),
    ]
    return {f.name: f for f in entries}


def sample_domain(f: ObjectiveFunction, count: int, rng: np.random.Generator, width: float | None = None) -> np.ndarray:
    """Uniform points inside the declared domain, truncated to a finite window."""
    width = 10.0 / f.declared_c if width is None else width
    lo, hi = (-width, width) if f.declared_domain is None else f.declared_domain
    if math.isinf(lo):
        lo = (hi if math.isfinite(hi) else 0.0) - 2 * width
    if math.isinf(hi):
        hi = lo + 2 * width
    span = hi - lo
    # stay strictly inside the open domain
    return lo + span * (1e-9 + (1 - 2e-9) * rng.random((count, f.dimension)))


# ---------------------------------------------------------------------------
# Gevrey membership


@dataclass(frozen=True)
class GevreyEntry:
    order: int
    alpha: tuple[int, ...]
    point: tuple[float, ...]
    ratio: float
    error_estimate: float = 0.0
    reliable: bool = True


@dataclass
class GevreyReport:
    function: str
    sigma: float
    threshold: float
    mode: str
    entries: list[GevreyEntry]

    @property
    def max_ratio(self) -> float:
        return max((e.ratio for e in self.entries if e.reliable), default=0.0)

    @property
    def status(self) -> str:
        if any(e.reliable and e.ratio > self.threshold for e in self.entries):
            return "FAIL"
        if any(not e.reliable for e in self.entries):
            return "UNRELIABLE"
        return "PASS"

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def _fd_partial(f: ObjectiveFunction, alpha: Sequence[int], x: np.ndarray, h: float) -> np.ndarray:
    k = len(alpha)
    if k == 0:
        return np.asarray(f.evaluate(x), dtype=np.float64)
    total = np.zeros(x.shape[0])
    for signs in itertools.product((1, -1), repeat=k):
        shift = np.zeros(f.dimension)
        for s, j in zip(signs, alpha):
            shift[j - 1] += s * h
        total += math.prod(signs) * np.asarray(f.evaluate(x + shift), dtype=np.float64)
    return total / (2 * h) ** k


def _multi_indices(d: int, order: int, rng: np.random.Generator, random_per_order: int):
    if order <= 2 or d**order <= random_per_order:
        return list(itertools.product(range(1, d + 1), repeat=order))
    return [tuple(int(v) for v in rng.integers(1, d + 1, size=order)) for _ in range(random_per_order)]


def gevrey_check(
    f: ObjectiveFunction,
    max_order: int,
    sample_points,
    *,
    sigma: float | None = None,
    c: float | None = None,
    tolerance: float = 1e-9,
    seed: int = 0,
    random_per_order: int = 50,
) -> GevreyReport:
    """Ratios ``|d_alpha f(x)| / (c^k (k!)^sigma / 2)`` over sampled ``alpha`` and ``x``.

    Uses ``f.partial`` when present, otherwise nested central differences
    (orders up to 4 only). ``sigma`` and ``c`` default to the declared values.
    """
    sigma = f.declared_sigma if sigma is None else sigma
    c = f.declared_c if c is None else c
    mode = "closed-form" if f.partial is not None else "finite-difference"
    if mode == "finite-difference" and max_order > 4:
        raise ValueError("finite-difference Gevrey checks are limited to order 4")
    threshold = 1.05 if f.numerical_evidence else 1.0 + tolerance
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))
    if pts.shape[-1] != f.dimension:
        pts = pts.reshape(-1, f.dimension)
    rng = np.random.default_rng(seed)

    entries: list[GevreyEntry] = []
    for order in range(max_order + 1):
        bound = 0.5 * c**order * math.factorial(order) ** sigma
        for alpha in _multi_indices(f.dimension, order, rng, random_per_order):
            err = np.zeros(pts.shape[0])
            if mode == "closed-form":
                values = np.asarray(f.partial(alpha, pts), dtype=np.float64)
            else:
                h = np.finfo(float).eps ** (1.0 / (order + 2)) / c
                values = _fd_partial(f, alpha, pts, h)
                err = np.abs(values - _fd_partial(f, alpha, pts, 2 * h))
            values = np.broadcast_to(values, (pts.shape[0],))
            for i, x in enumerate(pts):
                entries.append(
                    GevreyEntry(
                        order=order,
                        alpha=tuple(alpha),
                        point=tuple(float(v) for v in x),
                        ratio=float(abs(values[i]) / bound),
                        error_estimate=float(err[i]),
                        reliable=bool(err[i] <= 0.1 * bound),
                    )
                )
    return GevreyReport(function=f.name, sigma=sigma, threshold=threshold, mode=mode, entries=entries)
