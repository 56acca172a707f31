"""Gradient estimation by phase kickback on a grid, with its classical baseline.

One inner loop prepares a uniform superposition over the grid, kicks back the
phase ``S * f_(2m)``, applies the inverse QFT on every axis and rescales the
measured label. The estimate aggregates ``N`` such loops.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .functions import ObjectiveFunction
from .grid import GridSpec, ResourceGuardError, default_memory_guard
from .numerics import CentralDifferenceScheme, make_scheme
from .oracle import CostModel, QueryLedger, SmoothingOracle, query_cost
from .statevector import inverse_qft_all_axes, outcome_distribution, sample_outcome, uniform_superposition


def _root(d: int, p: float) -> float:
    """``d ** (1/p)`` with the ``p = inf`` case equal to 1."""
    return 1.0 if math.isinf(p) else d ** (1.0 / p)


def lp_norm(v, p: float) -> float:
    v = np.abs(np.asarray(v, dtype=np.float64))
    if math.isinf(p):
        return float(v.max(initial=0.0))
    return float(np.sum(v**p) ** (1.0 / p))


@dataclass(frozen=True)
class AlgorithmParams:
    sigma: float
    c: float
    p: float
    d: int
    eps: float

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.p >= 1:
            raise ValueError(f"norm order p must be >= 1, got {self.p}")
        if not 0 < self.eps < self.c:
            raise ValueError(f"eps must lie in (0, c) = (0, {self.c}), got {self.eps}")
        if not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be finite, got {self.sigma}")

    @classmethod
    def for_function(cls, f: ObjectiveFunction, p: float, eps: float) -> AlgorithmParams:
        """Parameters taken from the function's declared smoothness, with ``sigma`` clamped."""
        return cls(clamp_sigma(f.declared_sigma), f.declared_c, p, f.dimension, eps)


def clamp_sigma(sigma: float) -> float:
    """Raise ``sigma < 1/2`` to ``1/2`` (smaller classes are contained in larger ones)."""
    if sigma < 0.5:
        warnings.warn(f"sigma={sigma} is below 1/2; running with sigma=1/2", stacklevel=2)
        return 0.5
    return sigma


@dataclass(frozen=True)
class DerivedConstants:
    eps_prime: float
    m: int
    r: float
    S: int
    n: int
    N: int
    delta: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("eps_prime", "m", "r", "S", "n", "N", "delta")}


def derive_constants(params: AlgorithmParams, *, check_memory: bool = False, memory_guard: int | None = None) -> DerivedConstants:
    sigma, c, d = params.sigma, params.c, params.d
    if not 0.5 <= sigma <= 1:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
    eps_p = params.eps / _root(d, params.p)
    scale = c * d**sigma
    m = max(math.ceil(math.log2(scale / eps_p)), 2)
    r = (2**sigma / (2 * math.e * m * scale)) * (
        (2**sigma * eps_p) / (272 * math.pi * math.e * m * scale)
    ) ** (1.0 / (2 * m))
    S = math.ceil(8 * math.pi / (r * eps_p))
    if S < 1:
        raise AssertionError(f"derived S={S} is not positive")
    n = math.ceil(math.log2(12 * c / eps_p))
    N = math.ceil(18 * math.log2(3 * d))
    delta = 1.0 / (12 * math.sqrt(2) * S)
    if check_memory:
        guard = default_memory_guard() if memory_guard is None else memory_guard
        if n * d > guard:
            raise ResourceGuardError(
                f"these parameters need n*d = {n}*{d} = {n * d} qubits, memory guard is {guard}"
            )
    return DerivedConstants(eps_p, m, r, S, n, N, delta)


def grid_spec(params: AlgorithmParams, dc: DerivedConstants) -> GridSpec:
    return GridSpec(d=params.d, n=dc.n, r=dc.r)


@dataclass
class RunResult:
    estimate: np.ndarray
    ledger: QueryLedger
    per_loop_estimates: np.ndarray
    seed: int
    constants: DerivedConstants | None = None
    extras: dict = field(default_factory=dict)


def run_inner_loop(
    f: ObjectiveFunction,
    dc: DerivedConstants,
    spec: GridSpec,
    scheme: CentralDifferenceScheme,
    rng: np.random.Generator,
    ledger: QueryLedger,
    *,
    oracle: SmoothingOracle | None = None,
    perturb: bool = False,
    transform: str = "fft",
) -> np.ndarray:
    """One loop; returns ``2 pi h / (S r)`` for the measured label ``h``.

    Pass a prebuilt ``oracle`` to reuse its cached phases across loops.
    """
    if oracle is None:
        oracle = SmoothingOracle(f, spec, scheme, dc.delta)
    state = uniform_superposition(spec)
    state = oracle.apply(state, ledger, repetitions=dc.S, perturb=rng if perturb else None)
    state = inverse_qft_all_axes(state, method=transform)
    h = sample_outcome(state, rng)
    return (2 * math.pi / (dc.S * dc.r)) * h.astype(np.float64)


def loop_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Per-loop seed sequences; loop ``i`` depends only on ``(seed, i)``."""
    return [np.random.SeedSequence(entropy=seed, spawn_key=(i,)) for i in range(count)]


def aggregate(samples: np.ndarray, how: str = "median") -> np.ndarray:
    if how == "median":
        return np.median(samples, axis=0)
    if how == "mean":
        return np.mean(samples, axis=0)
    raise ValueError(f"unknown aggregation {how!r}")


def run_qge(
    f: ObjectiveFunction,
    params: AlgorithmParams,
    seed: int,
    *,
    cost_model: CostModel = CostModel.EXACT_SIM,
    how: str = "median",
    perturb: bool = False,
    workers: int = 1,
    oracle: SmoothingOracle | None = None,
) -> RunResult:
    """``N`` independent inner loops aggregated coordinate-wise.

    The result does not depend on ``workers``: every loop draws from its own
    stream derived from ``(seed, loop index)``.
    """
    if f.dimension != params.d:
        raise ValueError(f"function has dimension {f.dimension}, params say d={params.d}")
    dc = derive_constants(params, check_memory=True)
    spec = grid_spec(params, dc)
    scheme = make_scheme(dc.m)
    if oracle is None:
        oracle = SmoothingOracle(f, spec, scheme, dc.delta)
    elif oracle.spec != spec or oracle.scheme.m != dc.m:
        raise ValueError("supplied oracle does not match the derived grid")
    ledger = QueryLedger(cost_model)

    def one(ss: np.random.SeedSequence) -> np.ndarray:
        return run_inner_loop(f, dc, spec, scheme, np.random.default_rng(ss), ledger, oracle=oracle, perturb=perturb)

    seeds = loop_seeds(seed, dc.N)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            loops = list(pool.map(one, seeds))
    else:
        loops = [one(ss) for ss in seeds]
    per_loop = np.array(loops).reshape(dc.N, params.d)

    expected = dc.N * dc.S * query_cost(dc.m, dc.delta, cost_model)
    if ledger.base_calls != expected:
        raise AssertionError(f"ledger counted {ledger.base_calls} base calls, expected {expected}")
    return RunResult(aggregate(per_loop, how), ledger, per_loop, seed, dc)


@dataclass
class SuccessEstimate:
    successes: int
    trials: int
    low: float
    high: float
    exact: float | None = None
    per_loop: float | None = None

    @property
    def fraction(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _median_success(p_low: float, p_high: float, loops: int) -> float:
    """Probability that the median of ``loops`` (odd) draws lands in the middle band."""
    k = loops // 2 + 1
    return 1.0 - stats.binom.sf(k - 1, loops, p_low) - stats.binom.sf(k - 1, loops, p_high)


def exact_loop_distribution(f: ObjectiveFunction, params: AlgorithmParams) -> tuple[np.ndarray, np.ndarray, DerivedConstants]:
    """Exact estimates and probabilities of one unperturbed inner loop (all ``d``)."""
    dc = derive_constants(params, check_memory=True)
    spec = grid_spec(params, dc)
    oracle = SmoothingOracle(f, spec, make_scheme(dc.m), dc.delta)
    state = oracle.apply(uniform_superposition(spec), QueryLedger(), repetitions=dc.S)
    dist = outcome_distribution(inverse_qft_all_axes(state))
    labels = spec.axis_indices()
    values = (2 * math.pi / (dc.S * dc.r)) * labels.astype(np.float64)
    return values, dist.probabilities, dc


def estimate_success_probability(
    f: ObjectiveFunction,
    params: AlgorithmParams,
    trials: int,
    seed: int,
    *,
    exact: bool = False,
    cost_model: CostModel = CostModel.EXACT_SIM,
    how: str = "median",
    on_run=None,
) -> SuccessEstimate:
    """Fraction of runs with ``||estimate - grad f(0)||_p <= eps``.

    ``exact=True`` (``d = 1`` only) integrates the outcome distribution: it
    returns the per-loop probability of landing within ``eps'`` and the exact
    probability that the median of ``N`` loops does.
    """
    if f.reference_gradient_at_origin is None:
        raise ValueError(f"function {f.name!r} has no reference gradient at the origin")
    target = np.asarray(f.reference_gradient_at_origin, dtype=np.float64)
    if exact:
        if params.d != 1:
            raise ValueError("the exact shortcut is only available for d = 1")
        values, probs, dc = exact_loop_distribution(f, params)
        tol = params.eps
        low = float(probs[values < target[0] - tol].sum())
        high = float(probs[values > target[0] + tol].sum())
        inside = float(probs[np.abs(values - target[0]) <= dc.eps_prime].sum())
        if dc.N % 2 == 1 and how == "median":
            p = _median_success(low, high, dc.N)
        else:
            p = float("nan")
        return SuccessEstimate(0, 0, p, p, exact=p, per_loop=inside)

    wins = 0
    for ss in np.random.SeedSequence(seed).spawn(trials):
        run_seed = int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
        res = run_qge(f, params, run_seed, cost_model=cost_model, how=how)
        if on_run is not None:
            on_run(res)
        wins += lp_norm(res.estimate - target, params.p) <= params.eps
    lo, hi = wilson_interval(wins, trials)
    return SuccessEstimate(wins, trials, lo, hi)


def naive_gradient(f: ObjectiveFunction, eps: float, c: float, sigma: float) -> tuple[np.ndarray, int]:
    """Forward differences with step ``4 eps / (c**2 2**sigma)``; returns ``(g, evaluations)``."""
    d = f.dimension
    r = 4 * eps / (c * c * 2**sigma)
    x0 = np.zeros(d)
    f0 = float(f.evaluate(x0))
    g = np.empty(d)
    for j in range(d):
        xj = x0.copy()
        xj[j] = r
        g[j] = (float(f.evaluate(xj)) - f0) / r
    return g, d + 1


def _pairwise_distance(samples: np.ndarray, p: float) -> np.ndarray:
    diff = np.abs(samples[:, None, :] - samples[None, :, :])
    if math.isinf(p):
        return diff.max(axis=-1)
    return np.sum(diff**p, axis=-1) ** (1.0 / p)


def _stab_boxes(samples: np.ndarray, eps: float, need: int) -> np.ndarray | None:
    """A point covered by at least ``need`` of the boxes ``[s - eps, s + eps]``."""
    d = samples.shape[1]

    def search(axis: int, members: np.ndarray, point: list[float]):
        if axis == d:
            return np.array(point)
        col = samples[members, axis]
        for v in np.unique(col - eps):
            keep = members[(col - eps <= v) & (v <= col + eps)]
            if keep.size >= need:
                found = search(axis + 1, keep, point + [float(v)])
                if found is not None:
                    return found
        return None

    return search(0, np.arange(samples.shape[0]), [])


def boost_samples(samples, eps: float, p: float, *, exact_linf: bool = False) -> np.ndarray:
    """A vector near which a strict majority of ``samples`` sits.

    Each sample is tried as a centre with radius ``2 eps``; if a strict
    majority lies within ``eps`` of some target, the returned vector is within
    ``3 eps`` of it. With ``exact_linf`` (``p = inf`` only) the search is over
    all points and a majority within ``eps`` is found whenever one exists.
    Returns the zero vector when nothing qualifies.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    need = samples.shape[0] // 2 + 1
    if exact_linf:
        if not math.isinf(p):
            raise ValueError("the exact search is for p = inf")
        found = _stab_boxes(samples, eps, need)
        return np.zeros(samples.shape[1]) if found is None else found
    counts = (_pairwise_distance(samples, p) <= 2 * eps).sum(axis=1)
    best = int(np.argmax(counts))
    if counts[best] >= need:
        return samples[best].copy()
    return np.zeros(samples.shape[1])


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_theta || a - e^{i theta} b ||`` for unit vectors."""
    overlap = abs(np.vdot(a.ravel(), b.ravel()))
    return math.sqrt(max(0.0, 2.0 - 2.0 * overlap))


@dataclass(frozen=True)
class ClosenessReport:
    perturbed: float
    unperturbed: float
    coherent: float
    constants: DerivedConstants

    @property
    def limit(self) -> float:
        return 1.0 / 6.0


def state_closeness(f: ObjectiveFunction, params: AlgorithmParams, seed: int) -> ClosenessReport:
    """Distance between the pre-transform state and the ideal linear-phase state.

    The ideal state carries phase ``S (f(0) + grad f(0) . x)``; the produced
    state is built with per-factor oracle noise at the derived precision.
    ``coherent`` replaces the random noise by the extreme case where every
    factor errs by the full ``delta / (2m)`` with a per-point sign.
    """
    if f.reference_gradient_at_origin is None:
        raise ValueError(f"function {f.name!r} has no reference gradient at the origin")
    dc = derive_constants(params, check_memory=True)
    spec = grid_spec(params, dc)
    grad = np.asarray(f.reference_gradient_at_origin, dtype=np.float64)
    f0 = float(f.evaluate(np.zeros(params.d)))
    start = uniform_superposition(spec)
    linear = np.empty(spec.size)
    for sl, pts in spec.chunks():
        linear[sl] = f0 + pts @ grad
    ideal = start.amplitudes * np.exp(1j * dc.S * linear.reshape(spec.shape))

    oracle = SmoothingOracle(f, spec, make_scheme(dc.m), dc.delta)
    clean = oracle.apply(start, QueryLedger(), repetitions=dc.S)
    rng = np.random.default_rng(seed)
    noisy = oracle.apply(start, QueryLedger(), repetitions=dc.S, perturb=rng)
    signs = rng.choice((-1.0, 1.0), size=spec.shape)
    extreme = clean.amplitudes * np.exp(1j * dc.S * dc.delta * signs)
    return ClosenessReport(
        phase_aligned_distance(noisy.amplitudes, ideal),
        phase_aligned_distance(clean.amplitudes, ideal),
        phase_aligned_distance(extreme, ideal),
        dc,
    )
