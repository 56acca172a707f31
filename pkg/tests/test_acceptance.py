"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines interleaved, or
``python tests/test_acceptance.py`` for the lines alone.
"""

import math
import time
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from qgrad import bounds, numerics, statevector
from qgrad.functions import TestFunctionInstance
from qgrad.oracle import CostModel
from qgrad.qge import (
    AlgorithmParams,
    boost_samples,
    derive_constants,
    estimate_success_probability,
    grid_spec,
    lp_norm,
    state_closeness,
)

RESULTS = {}


def report(number, title, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    passed = bool(ok) and within
    budget = f" / {limit:g}s" if limit is not None else ""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2} {title}: {detail} [{elapsed:.2f}s{budget}]"
    RESULTS[number] = line
    print("\n" + line, flush=True)
    assert ok, line
    assert within, line


# d=1 and d=2 problems; the test-function amplitude sits below c/146
INSTANCES = [
    (AlgorithmParams(0.5, 1.0, math.inf, 1, 0.1), TestFunctionInstance(1, 1.0, 0.0068, (1,))),
    (AlgorithmParams(0.5, 1.0, 1, 2, 0.2), TestFunctionInstance(2, 1.0, 0.0068, (-1, 1))),
    (AlgorithmParams(0.5, 1.0, math.inf, 2, 0.2), TestFunctionInstance(2, 1.0, 0.0068, (1, 1))),
]


def test_criterion_01_coefficient_identities():
    start = time.perf_counter()
    bad = []
    for m in range(1, 21):
        scheme = numerics.make_scheme(m)
        for k in range(2 * m + 1):
            value = numerics.moment_sum(scheme, k)
            assert isinstance(value, Fraction)
            if value != (1 if k in (0, 1) else 0):
                bad.append((m, k))
    report(1, "coefficient identities", not bad, f"m<=20, violations {bad or 'none'}", time.perf_counter() - start, 5)


def test_criterion_02_coefficient_magnitude():
    start = time.perf_counter()
    bad = []
    for m in range(1, 21):
        scheme = numerics.make_scheme(m)
        for ell in range(-m, m + 1):
            if ell and not abs(scheme[ell]) < Fraction(1, abs(ell)):
                bad.append(("a", m, ell))
        for k in range(2 * m + 1, 2 * m + 11):
            if not abs(numerics.moment_sum(scheme, k)) <= 2 * m**k:
                bad.append(("moment", m, k))
    report(2, "coefficient magnitude", not bad, f"m<=20, violations {bad or 'none'}", time.perf_counter() - start, 5)


def test_criterion_03_qft_robustness():
    start = time.perf_counter()
    worst, where = 1.0, None
    for n in range(4, 9):
        for a in np.linspace(-2 * math.pi / 3, 2 * math.pi / 3, 100):
            prob = statevector.qft_peak_probability(n, float(a))
            if prob < worst:
                worst, where = prob, (n, float(a))
    report(
        3, "qft robustness", worst >= 5 / 6,
        f"min peak {worst:.6f} at n={where[0]}, a={where[1]:.4f} (need >= 0.833333)",
        time.perf_counter() - start, 30,
    )


def test_criterion_04_linearity_defect():
    start = time.perf_counter()
    parts, ok = [], True
    for params, inst in INSTANCES:
        dc = derive_constants(params)
        assert dc.n * params.d <= 20
        defect = numerics.linearity_defect(inst.as_objective(), numerics.make_scheme(dc.m), grid_spec(params, dc))
        limit = 1 / (144 * dc.S**2)
        ok &= defect <= limit
        parts.append(f"d={params.d},p={params.p:g}: {defect:.2e} <= {limit:.2e}")
    report(4, "linearity defect", ok, "; ".join(parts), time.perf_counter() - start, 120)


def test_criterion_05_state_closeness():
    start = time.perf_counter()
    parts, ok = [], True
    for seed, (params, inst) in enumerate(INSTANCES):
        rep = state_closeness(inst.as_objective(), params, seed)
        ok &= rep.perturbed <= 1 / 6 and rep.coherent <= 1 / 6
        parts.append(f"d={params.d},p={params.p:g}: {rep.perturbed:.2e} (worst-case {rep.coherent:.3f})")
    report(5, "state closeness", ok, "; ".join(parts) + " <= 1/6", time.perf_counter() - start, 120)


SUCCESS_CASES = [
    (AlgorithmParams(0.5, 1.0, 1, 1, 0.1), TestFunctionInstance(1, 1.0, 0.0068, (1,))),
    (AlgorithmParams(0.5, 1.0, math.inf, 1, 0.1), TestFunctionInstance(1, 1.0, 0.0068, (-1,))),
    (AlgorithmParams(0.5, 1.0, 1, 2, 0.2), TestFunctionInstance(2, 1.0, 0.0068, (-1, 1))),
    (AlgorithmParams(0.5, 1.0, math.inf, 2, 0.2), TestFunctionInstance(2, 1.0, 0.0068, (1, 1))),
]

_ledger_log = []


@pytest.fixture(scope="module")
def success_runs():
    """200 seeded trials per case under both cost models; ledgers kept for criterion 7."""
    start = time.perf_counter()
    out = []
    for case, (params, inst) in enumerate(SUCCESS_CASES):
        f = inst.as_objective()
        per_model = {}
        for model in CostModel:
            runs = []
            est = estimate_success_probability(f, params, 200, 1000 + case, cost_model=model, on_run=runs.append)
            per_model[model] = (est, runs)
        out.append((params, per_model))
    return out, time.perf_counter() - start


def test_criterion_06_success_probability(success_runs):
    cases, elapsed = success_runs
    parts, ok = [], True
    for params, per_model in cases:
        est, runs = per_model[CostModel.EXACT_SIM]
        other, other_runs = per_model[CostModel.PAPER_MODEL]
        # the cost model only changes the bookkeeping
        assert all(np.array_equal(a.estimate, b.estimate) for a, b in zip(runs, other_runs))
        assert other.successes == est.successes
        ok &= est.low >= 0.60
        parts.append(f"d={params.d},p={params.p:g}: {est.successes}/{est.trials} (Wilson low {est.low:.3f})")
    report(6, "end-to-end success", ok, "; ".join(parts), elapsed, 600)


def test_criterion_07_query_accounting(success_runs):
    start = time.perf_counter()
    cases, _ = success_runs
    checked = mismatches = 0
    for params, per_model in cases:
        for model, (_, runs) in per_model.items():
            for res in runs:
                dc = res.constants
                if model is CostModel.EXACT_SIM:
                    per_call = 2 * dc.m + 1
                else:
                    per_call = 2 * dc.m * math.ceil(math.log2(2 * dc.m / dc.delta)) + 1
                checked += 1
                mismatches += res.ledger.cost_model is not model
                mismatches += res.ledger.base_calls != dc.N * dc.S * per_call
                mismatches += res.ledger.smoothing_calls != dc.N * dc.S
    report(
        7, "query accounting", checked == 1600 and mismatches == 0,
        f"{checked} ledgers checked, {mismatches} mismatches", time.perf_counter() - start,
    )


def test_criterion_08_oracle_distance():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst, triples = -math.inf, 0
    for d in (1, 2, 3, 5):
        for c, eps in ((1.0, 0.005), (2.0, 0.013), (0.5, 0.001), (3.0, 3 / 146 * 0.999)):
            bstar = rng.choice((-1, 1), size=d)
            span = 2 * math.pi / c
            x = rng.uniform(-span, span, size=(100_000, d))
            # include the origin, where the peripheral gap is largest along each axis
            x[0] = 0
            sup = bounds.oracle_distance_sup(bstar, c, eps, d, x)
            worst = max(worst, sup - (146 * eps / (c * d)) ** 2)
            triples += 1
    report(
        8, "oracle-distance supremum", worst <= 1e-12,
        f"{triples} triples x 1e5 points, max sup - limit = {worst:.3g}", time.perf_counter() - start, 60,
    )


def test_criterion_09_moment_bounds():
    start = time.perf_counter()
    failures, count = [], 0
    for d in (1, 2, 4, 8):
        for k in (1, 2, 3):
            for q in (0, 0.5, 1):
                check = bounds.moment_bound_check(d, k, q, 100_000, seed=d * 100 + k * 10 + int(2 * q))
                count += 1
                if not check.passed:
                    failures.append((d, k, q, check.empirical, check.bound))
    report(
        9, "moment bounds", not failures,
        f"{count} (d,k,q) cases, failures {failures or 'none'}", time.perf_counter() - start, 60,
    )


def _pathology(eps, target):
    """Two tight l1 clusters of five inside the eps-ball plus an outlier; the coordinate-wise median leaves the ball."""
    t = np.asarray(target, dtype=np.float64)
    spread = np.linspace(-0.01, 0.01, 5)[:, None] * eps
    a = t + np.array([0.95 * eps, 0.0]) + spread * np.array([0, 1])
    b = t + np.array([0.0, 0.95 * eps]) + spread * np.array([1, 0])
    return np.vstack([a, b, t + [50 * eps, 50 * eps]])


def test_criterion_10_boosting():
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    misses = pathologies = median_failures = 0
    for trial in range(1000):
        if trial % 10 == 0:
            eps = float(rng.uniform(0.01, 1))
            target = rng.normal(size=2) * 5
            samples = rng.permutation(_pathology(eps, target))
            p = 1
            pathologies += 1
            median_failures += lp_norm(np.median(samples, axis=0) - target, 1) > eps
        else:
            d = int(rng.integers(1, 7))
            p = [1, 2, math.inf][trial % 3]
            eps = float(rng.uniform(0.01, 2))
            total = int(rng.integers(1, 40))
            good = total // 2 + 1
            target = rng.normal(size=d) * 3
            direction = rng.normal(size=(good, d))
            direction /= np.array([max(lp_norm(v, p), 1e-300) for v in direction])[:, None]
            near = target + direction * rng.uniform(0, eps, size=(good, 1))
            far = target + rng.normal(scale=rng.uniform(0.1, 20) * eps, size=(total - good, d))
            samples = rng.permutation(np.vstack([near, far]))
        g = boost_samples(samples, eps, p)
        misses += lp_norm(g - target, p) > 3 * eps * (1 + 1e-12)
    report(
        10, "boosting", misses == 0 and median_failures == pathologies,
        f"1000 geometries ({pathologies} median pathologies, median failed on {median_failures}), {misses} misses",
        time.perf_counter() - start, 10,
    )


def _independent_p1(d, c, eps):
    getcontext().prec = 40
    D = Decimal(d)
    return Decimal(c) * D * D.sqrt() / (876 * Decimal(eps))


def _independent_general(d, c, eps, p, P):
    getcontext().prec = 40
    Pf = Fraction(P)
    N = max(1, math.ceil(18 * (1 - Pf) / (Pf - Fraction(1, 2)) ** 2))
    expo = Decimal(1) / 2 + (Decimal(0) if math.isinf(p) else Decimal(1) / Decimal(p))
    return Decimal(c) * (expo * Decimal(d).ln()).exp() / (1752 * N * Decimal(eps)), N


def test_criterion_11_bound_formulas():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    worst, N_mismatch = 0.0, 0
    for i in range(20):
        d = int(rng.integers(1, 200))
        c = float(rng.uniform(0.1, 5))
        p = [1, 2, 3, math.inf][i % 4]
        P = float(rng.uniform(0.55, 0.99)) if i % 5 else [17 / 18, 2 / 3, 0.75, 0.9][i // 5]
        limit = min(c / 146, c / (292 * d ** (1 - (0 if math.isinf(p) else 1 / p))))
        eps = float(rng.uniform(0.05, 0.95)) * limit
        got = bounds.lower_bound_p1(d, c, eps)
        want = float(_independent_p1(d, c, eps))
        worst = max(worst, abs(got - want) / want)
        rep = bounds.lower_bound_general(d, c, eps, p, P)
        want_g, N = _independent_general(d, c, eps, p, P)
        N_mismatch += rep.N_boost != N
        worst = max(worst, abs(rep.bound_value - float(want_g)) / float(want_g))
    report(
        11, "bound formulas", worst < 1e-12 and N_mismatch == 0,
        f"20 tuples, max relative error {worst:.2e}, N mismatches {N_mismatch}", time.perf_counter() - start,
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
