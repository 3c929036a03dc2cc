"""Quantum correlation scaling toolkit.

Builds many-site states, maximizes the projector-resolved correlation of
additive observables over them, and classifies how the maximum grows with
system size. Ships violation diagnostics (parity and collective two-setting
scores), sufficient-condition checks for mixtures, and a measurement protocol
that trims one site from a two-branch superposition.
"""

from __future__ import annotations

from .correlation import (
    CorrelationResult,
    ProjectorSpec,
    check_mixture_conditions,
    collective_chsh_maximum,
    correlation_value,
    double_commutator,
    local_product_expectation,
    maximal_correlation,
    mermin_score,
    pure_state_maximum,
    single_site_conversion,
    variance_product_bound,
)
from .linalg import CapacityError, HermitianOperator, hermitian_eig
from .observables import AdditiveObservable, covariance_matrix, expectation, variance
from .optimize import (
    Optimum,
    OptimizerConfig,
    maximize_correlation,
    maximize_variance,
)
from .scaling import IndexFit, SweepPoint, fit_index, secant_slopes, sweep
from .states import (
    FAMILIES,
    MixedState,
    PureState,
    TwoBranchState,
    resolve_state,
    state_from_text,
    state_to_text,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveObservable",
    "CapacityError",
    "CorrelationResult",
    "FAMILIES",
    "HermitianOperator",
    "IndexFit",
    "MixedState",
    "Optimum",
    "OptimizerConfig",
    "ProjectorSpec",
    "PureState",
    "SweepPoint",
    "TwoBranchState",
    "check_mixture_conditions",
    "collective_chsh_maximum",
    "correlation_value",
    "covariance_matrix",
    "double_commutator",
    "expectation",
    "fit_index",
    "hermitian_eig",
    "local_product_expectation",
    "maximal_correlation",
    "maximize_correlation",
    "maximize_variance",
    "mermin_score",
    "pure_state_maximum",
    "resolve_state",
    "secant_slopes",
    "single_site_conversion",
    "state_from_text",
    "state_to_text",
    "sweep",
    "variance",
    "variance_product_bound",
    "__version__",
]
