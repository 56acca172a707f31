"""Query lower bounds for gradient estimation and their checkable ingredients."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .functions import ObjectiveFunction, TestFunctionInstance, test_function_eval
from .grid import GridSpec, map_over_grid

UNBOUNDED = math.inf


def _check_p1_range(c: float, eps: float) -> None:
    if not (c > 0 and 0 < eps < c / 146):
        raise ValueError(f"need 0 < eps < c/146 = {c / 146:.6g}, got eps={eps}")


def lower_bound_p1(d: int, c: float, eps: float) -> float:
    """``c d^{3/2} / (876 eps)`` for l1-precise estimation with success 17/18."""
    _check_p1_range(c, eps)
    return c * d**1.5 / (876 * eps)


def boosting_repetitions(P: float) -> int:
    """``ceil(18 (1-P) / (P - 1/2)^2)``, raised to 1 so that ``P = 1`` stays finite."""
    if not 0.5 < P <= 1:
        raise ValueError(f"success probability must lie in (1/2, 1], got {P}")
    return max(1, math.ceil(18 * (1 - P) / (P - 0.5) ** 2))


@dataclass(frozen=True)
class LowerBoundReport:
    d: int
    c: float
    eps: float
    p: float
    P: float
    bound_value: float
    N_boost: int
    notes: tuple[str, ...] = field(default_factory=tuple)
    in_range: bool = True

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "c": self.c,
            "eps": self.eps,
            "p": "inf" if math.isinf(self.p) else self.p,
            "P": self.P,
            "bound_value": self.bound_value,
            "N_boost": self.N_boost,
            "notes": list(self.notes),
            "in_range": self.in_range,
        }


def lower_bound_general(
    d: int, c: float, eps: float, p: float, P: float, *, check_range: bool = True
) -> LowerBoundReport:
    """``c d^{1/2 + 1/p} / (1752 N eps)`` for lp-precise estimation with success ``P``.

    With ``check_range=False`` an ``eps`` outside the bound's validity range is
    evaluated anyway and reported with ``in_range=False``.
    """
    if not p >= 1:
        raise ValueError(f"norm order p must be >= 1, got {p}")
    if not (c > 0 and eps > 0):
        raise ValueError("c and eps must be positive")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    limit = c / (292 * d ** (1 - inv_p))
    in_range = eps < limit
    if check_range and not in_range:
        raise ValueError(f"need 0 < eps < c/(292 d^(1-1/p)) = {limit:.6g}, got eps={eps}")
    N = boosting_repetitions(P)
    notes = ("P = 1 gives N = 0; N raised to 1",) if P == 1 else ()
    value = c * d ** (0.5 + inv_p) / (1752 * N * eps)
    return LowerBoundReport(d, c, eps, p, P, value, N, notes, in_range)


def _phase_gaps(f0: ObjectiveFunction, peripherals: Sequence[ObjectiveFunction], grid: GridSpec) -> np.ndarray:
    """``sum_j |e^{i f0(x)} - e^{i fj(x)}|^2`` at every grid point."""
    base = map_over_grid(grid, f0.evaluate)
    total = np.zeros(grid.shape)
    for g in peripherals:
        other = map_over_grid(grid, g.evaluate)
        # |e^{ia} - e^{ib}| = 2 |sin((a - b)/2)|
        total += 4 * np.sin((base - other) / 2) ** 2
    return total


def hybrid_bound(f0: ObjectiveFunction, peripherals: Sequence[ObjectiveFunction], grid: GridSpec) -> float:
    """``sqrt(N / (9 max_x sum_j |e^{i f0(x)} - e^{i fj(x)}|^2))`` for diagonal oracles.

    With diagonal oracles the worst input state is a single basis state, so
    the maximum over states reduces to a maximum over grid points. Returns
    ``inf`` when no peripheral differs from ``f0`` on the grid.
    """
    if len(peripherals) == 0:
        raise ValueError("need at least one peripheral function")
    worst = float(_phase_gaps(f0, peripherals, grid).max())
    if worst == 0.0:
        return UNBOUNDED
    return math.sqrt(len(peripherals) / (9 * worst))


def oracle_distance_sup(bstar, c: float, eps: float, d: int, samples: np.ndarray) -> float:
    """Max over ``samples`` of ``sum_j (f_b*(x) - f_{b*^(j)}(x))^2``, ``b*^(j)`` flipping sign ``j``."""
    inst = TestFunctionInstance(d, c, eps, tuple(int(b) for b in bstar))
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, d)
    base = test_function_eval(inst, samples)
    total = np.zeros(samples.shape[0])
    for j in range(d):
        total += (base - test_function_eval(inst.flipped(j), samples)) ** 2
    return float(total.max(initial=0.0))


def oracle_distance_limit(c: float, eps: float, d: int) -> float:
    return (146 * eps / (c * d)) ** 2


def moment_bound(d: int, k: int, q: float) -> float:
    """``[2 (d/2)^k k!]^q [(d/2)^{2k}]^{1-q}``."""
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    half = d / 2
    return (2 * half**k * math.factorial(k)) ** q * (half ** (2 * k)) ** (1 - q)


def grid_marginal(n: int) -> np.ndarray:
    """Support of one coordinate on the unit-side grid with ``2**n`` points per axis."""
    return (np.arange(-(1 << (n - 1)), 1 << (n - 1)) + 0.5) / (1 << n)


def exact_sum_moment(d: int, k: int, n: int) -> float:
    """Exact ``E[(x_1 + ... + x_d)^{2k}]`` for i.i.d. uniform grid-marginal coordinates."""
    # work with the odd integers 2^{n+1} x and convolve their counts
    size = 1 << n
    counts = np.array([1], dtype=object)
    single = np.ones(size, dtype=object)
    for _ in range(d):
        counts = np.convolve(counts, single)
    lowest = d * (1 - size)
    values = np.arange(lowest, lowest + 2 * counts.size, 2)
    total = sum(int(cnt) * int(v) ** (2 * k) for cnt, v in zip(counts, values))
    denom = (size**d) * (1 << (n + 1)) ** (2 * k)
    return total / denom


@dataclass(frozen=True)
class MomentCheck:
    d: int
    k: int
    q: float
    empirical: float
    stderr: float
    bound: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3 * self.stderr


def moment_bound_check(
    d: int, k: int, q: float, trials: int = 100_000, *, seed: int, n: int = 4, chunk: int = 1 << 15
) -> MomentCheck:
    """Monte Carlo estimate of ``E[(sum_j x_j)^{2k}]`` against :func:`moment_bound`."""
    rng = np.random.default_rng(seed)
    support = grid_marginal(n)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        x = rng.choice(support, size=(size, d))
        v = x.sum(axis=1) ** (2 * k)
        total += float(v.sum())
        total_sq += float((v * v).sum())
        done += size
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return MomentCheck(d, k, q, mean, math.sqrt(var / trials), moment_bound(d, k, q), trials)


@dataclass
class MarkingSurvey:
    d: int
    eps: float
    vertices: list[tuple[int, ...]]
    success: np.ndarray  # (vertex, coordinate) success frequencies
    threshold: float = 2 / 3

    @property
    def marked(self) -> np.ndarray:
        return self.success >= self.threshold

    def coordinate_fractions(self) -> np.ndarray:
        """Fraction of surveyed vertices marked by each coordinate."""
        return self.marked.mean(axis=0)

    def marked_edge_fraction(self) -> float:
        """Fraction of surveyed edges whose two ends are marked in the edge's direction."""
        index = {v: i for i, v in enumerate(self.vertices)}
        total = marked = 0
        for v, i in index.items():
            for j in range(self.d):
                if v[j] != 1:
                    continue
                w = v[:j] + (-1,) + v[j + 1 :]
                if w not in index:
                    continue
                total += 1
                marked += bool(self.marked[i, j] and self.marked[index[w], j])
        return marked / total if total else float("nan")

    def summary(self) -> dict:
        return {
            "d": self.d,
            "eps": self.eps,
            "vertices": len(self.vertices),
            "coordinate_fractions": self.coordinate_fractions().tolist(),
            "marked_edge_fraction": self.marked_edge_fraction(),
        }


def empirical_marking_survey(
    runner: Callable[[ObjectiveFunction, int], np.ndarray],
    d: int,
    c: float,
    eps: float,
    trials_per_vertex: int,
    vertex_budget: int = 16,
    *,
    seed: int,
) -> MarkingSurvey:
    """Per-vertex, per-coordinate frequency of ``|A(f_b)_j - grad_j| <= 72 eps / d``.

    ``runner(f, seed)`` returns one gradient estimate. The whole cube is
    surveyed for ``d <= 4``, otherwise ``vertex_budget`` random vertices.
    """
    ss = np.random.SeedSequence(seed)
    if d <= 4:
        vertices = list(itertools.product((1, -1), repeat=d))
    else:
        rng = np.random.default_rng(ss.spawn(1)[0])
        vertices = sorted({tuple(int(s) for s in rng.choice((-1, 1), size=d)) for _ in range(vertex_budget)})
    tol = 72 * eps / d
    success = np.zeros((len(vertices), d))
    vertex_seeds = ss.spawn(len(vertices) + 1)[1:]
    for i, (b, vs) in enumerate(zip(vertices, vertex_seeds)):
        inst = TestFunctionInstance(d, c, eps, b)
        f = inst.as_objective()
        grad = f.reference_gradient_at_origin
        for ts in vs.spawn(trials_per_vertex):
            est = np.asarray(runner(f, int(ts.generate_state(1)[0])), dtype=np.float64)
            success[i] += np.abs(est - grad) <= tol
    return MarkingSurvey(d, eps, vertices, success / trials_per_vertex)
