"""Uncertainty propagation for 1-D shock-forming conservation laws.

Core pipeline: Karhunen-Loeve decomposition of the uncertain initial
condition, dynamically bi-orthogonal evolution with a non-oscillatory
central flux, per-sample Gegenbauer reprojection against the Gibbs
phenomenon, and Monte Carlo / intrusive polynomial-chaos baselines with
shared ensemble statistics.
"""

import warnings as _warnings

# The numba fallback from TBB to the OpenMP/workqueue layer is harmless.
_warnings.filterwarnings("ignore", message=".*TBB threading layer requires TBB.*")

from .errors import (
    ConfigError,
    ContractViolationError,
    KernelNotPSDError,
    NoShockError,
    NumericFailureError,
    SchemaError,
    SolverFailureError,
)
from .kernels import InitialConditionSpec, KernelSpec, eval_kernel, kernel_matrix, mean_initial
from .numerics import Grid1D, QuadratureRule, gauss_gegenbauer_rule, gauss_legendre_rule, spatial_inner_product, symmetric_eigen
from .chaos import ChaosBasis, GermEnsemble, basis_eval, hermite_eval, sample_germ, stochastic_project
from .kle import KLDecomposition, initial_coefficients, sample_initial_field, solve_fredholm

__version__ = "0.1.0"

__all__ = [
    "ChaosBasis",
    "ConfigError",
    "ContractViolationError",
    "GermEnsemble",
    "Grid1D",
    "InitialConditionSpec",
    "KLDecomposition",
    "KernelNotPSDError",
    "KernelSpec",
    "NoShockError",
    "NumericFailureError",
    "QuadratureRule",
    "SchemaError",
    "SolverFailureError",
    "basis_eval",
    "eval_kernel",
    "gauss_gegenbauer_rule",
    "gauss_legendre_rule",
    "hermite_eval",
    "initial_coefficients",
    "kernel_matrix",
    "mean_initial",
    "sample_germ",
    "sample_initial_field",
    "solve_fredholm",
    "spatial_inner_product",
    "stochastic_project",
    "symmetric_eigen",
]
