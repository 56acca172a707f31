"""Simulation of grid-based quantum gradient estimation and its lower bounds."""

__version__ = "0.1.0"

from .grid import GridSpec, ResourceGuardError, grid_point
from .numerics import CentralDifferenceScheme, linearity_defect, make_scheme, moment_sum, smoothing_eval
from .functions import ObjectiveFunction, TestFunctionInstance, catalog, gevrey_check
from .oracle import CostModel, QueryLedger, apply_fractional_phase, apply_smoothing_oracle, query_cost
from .statevector import State, inverse_qft_all_axes, outcome_distribution, qft_peak_probability, uniform_superposition
from .qge import AlgorithmParams, DerivedConstants, RunResult, boost_samples, derive_constants, naive_gradient, run_qge

__all__ = [
    "AlgorithmParams", "CentralDifferenceScheme", "CostModel", "DerivedConstants", "GridSpec",
    "ObjectiveFunction", "QueryLedger", "ResourceGuardError", "RunResult", "State",
    "TestFunctionInstance", "apply_fractional_phase", "apply_smoothing_oracle", "boost_samples",
    "catalog", "derive_constants", "gevrey_check", "grid_point", "inverse_qft_all_axes",
    "linearity_defect", "make_scheme", "moment_sum", "naive_gradient", "outcome_distribution",
    "qft_peak_probability", "query_cost", "run_qge", "smoothing_eval", "uniform_superposition",
]
