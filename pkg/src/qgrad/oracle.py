"""Simulated (fractional) phase oracles and query accounting.

Oracles are diagonal, so applying one is an elementwise phase multiplication.
Block-encoding ancillas are not simulated: imperfect fractional oracles are
modelled as bounded per-point phase errors.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .functions import ObjectiveFunction
from .grid import GridSpec, map_over_grid
from .numerics import CentralDifferenceScheme
from .statevector import State

PHASE_BOUND = 0.5
_PHASE_SLACK = 1e-12


class PhaseRangeError(ValueError):
    """Raised when ``|f| > 1/2`` somewhere on the grid an oracle is applied to."""


class CostModel(str, enum.Enum):
    EXACT_SIM = "exact"
    PAPER_MODEL = "paper"


def fractional_query_cost(precision: float, model: CostModel) -> int:
    """Base-oracle calls for one fractional application at the given precision."""
    if CostModel(model) is CostModel.EXACT_SIM:
        return 1
    if not 0 < precision < 1:
        raise ValueError(f"precision must lie in (0, 1), got {precision}")
    return math.ceil(math.log2(1.0 / precision))


def query_cost(m: int, delta: float, model: CostModel) -> int:
    """Base-oracle calls for one smoothing-oracle application.

    Exact simulation counts ``2m + 1``. The model count charges each of the
    ``2m`` fractional factors ``ceil(log2(2m / delta))`` calls, plus one plain call.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if CostModel(model) is CostModel.EXACT_SIM:
        return 2 * m + 1
    return 2 * m * fractional_query_cost(delta / (2 * m), model) + 1


@dataclass
class QueryLedger:
    cost_model: CostModel = CostModel.EXACT_SIM
    base_calls: int = 0
    smoothing_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.cost_model = CostModel(self.cost_model)

    def add_base(self, calls: int) -> None:
        with self._lock:
            self.base_calls += int(calls)

    def add_smoothing(self, m: int, delta: float, count: int = 1) -> None:
        cost = query_cost(m, delta, self.cost_model)
        with self._lock:
            self.smoothing_calls += int(count)
            self.base_calls += int(count) * cost

    def merge(self, other: QueryLedger) -> None:
        if other.cost_model is not self.cost_model:
            raise ValueError("cannot merge ledgers with different cost models")
        with self._lock:
            self.base_calls += other.base_calls
            self.smoothing_calls += other.smoothing_calls

    def as_dict(self) -> dict:
        return {
            "cost_model": self.cost_model.value,
            "base_calls": self.base_calls,
            "smoothing_calls": self.smoothing_calls,
        }


def _checked_values(f: ObjectiveFunction, spec: GridSpec, scale: float) -> np.ndarray:
    values = map_over_grid(spec, lambda pts: f.evaluate(scale * pts))
    worst = float(np.max(np.abs(values)))
    if worst > PHASE_BOUND + _PHASE_SLACK:
        raise PhaseRangeError(
            f"|{f.name}| reaches {worst:.6g} > 1/2 on the grid (scale {scale:g})"
        )
    return values


def apply_fractional_phase(
    state: State,
    f: ObjectiveFunction,
    xi: float,
    ledger: QueryLedger,
    *,
    scale: float = 1.0,
    precision: float | None = None,
) -> State:
    """Multiply the amplitude at grid point ``x`` by ``exp(i xi f(scale * x))``.

    ``|xi| = 1`` is a plain oracle call. Fractional powers are charged by the
    ledger's cost model; the model count needs ``precision``.
    """
    if not -1 < xi <= 1:
        raise ValueError(f"power xi must lie in (-1, 1], got {xi}")
    if xi == 0:
        return state.copy()
    values = _checked_values(f, state.spec, scale)
    if abs(xi) == 1 or ledger.cost_model is CostModel.EXACT_SIM:
        ledger.add_base(1)
    else:
        if precision is None:
            raise ValueError("the paper cost model needs a precision for fractional calls")
        ledger.add_base(fractional_query_cost(precision, ledger.cost_model))
    return State(state.spec, state.amplitudes * np.exp(1j * xi * values))


class SmoothingOracle:
    """Phase oracle for ``f_(2m)`` on one grid, built from fractional calls on ``l * x``.

    The composed phase is computed once and cached; every application is
    still charged to the ledger.
    """

    def __init__(self, f: ObjectiveFunction, spec: GridSpec, scheme: CentralDifferenceScheme, delta: float):
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.f = f
        self.spec = spec
        self.scheme = scheme
        self.delta = delta
        self._phases: np.ndarray | None = None

    @property
    def phases(self) -> np.ndarray:
        if self._phases is None:
            total = np.zeros(self.spec.shape)
            # plain call for l = 0, fractional calls with powers a_l elsewhere
            for ell, a in zip(self.scheme.offsets, self.scheme.float_cache):
                total += a * _checked_values(self.f, self.spec, float(ell))
            total.setflags(write=False)
            self._phases = total
        return self._phases

    def apply(
        self,
        state: State,
        ledger: QueryLedger,
        repetitions: int = 1,
        perturb: np.random.Generator | int | None = None,
    ) -> State:
        """Apply the oracle ``repetitions`` times.

        With ``perturb`` (a generator or seed), every fractional factor of every
        repetition picks up an independent per-point phase error uniform in
        ``[-delta/(2m), delta/(2m)]``.
        """
        if state.spec != self.spec:
            raise ValueError("state grid does not match the oracle grid")
        if repetitions < 0:
            raise ValueError("repetitions must be non-negative")
        ledger.add_smoothing(self.scheme.m, self.delta, repetitions)
        angle = repetitions * self.phases
        if perturb is not None and repetitions > 0:
            rng = perturb if isinstance(perturb, np.random.Generator) else np.random.default_rng(perturb)
            key = int(rng.integers(0, 2**63))
            factors = 2 * self.scheme.m
            noise = kernels.phase_noise(key, repetitions, factors, self.spec.size, self.delta / factors)
            angle = angle + noise.reshape(self.spec.shape)
        return State(state.spec, state.amplitudes * np.exp(1j * angle))


def apply_smoothing_oracle(
    state: State,
    f: ObjectiveFunction,
    scheme: CentralDifferenceScheme,
    delta: float,
    ledger: QueryLedger,
    perturb: np.random.Generator | int | None = None,
    repetitions: int = 1,
) -> State:
    return SmoothingOracle(f, state.spec, scheme, delta).apply(state, ledger, repetitions, perturb)
