"""Uncertain initial condition: mean profile and covariance kernels.

The initial random field has an arctan-shaped mean profile and a Gaussian
fluctuation described by one of four covariance kernels.  Kernel evaluation
is pure and vectorized; all kinds produce symmetric positive semidefinite
matrices on any finite grid (the triangular kernel only for shape parameter
t <= 1 / domain width).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError

KERNEL_KINDS = ("exponential", "squared_exponential", "triangular", "uniformly_modulated")

# Scaling modes for the initial field u(x,0): "fluctuation" applies the
# scale s to the zero-mean fluctuation only; "full" multiplies mean and
# fluctuation alike.
SCALING_MODES = ("fluctuation", "full")


@dataclass(frozen=True)
class KernelSpec:
    """Covariance kernel selector with its two scalar parameters.

    sigma2 is the variance prefactor; corr_len holds the second parameter of
    the chosen kind: the decay rate of the exponential kernel, the shape
    parameter t of the triangular kernel (keep t <= 1/domain width for
    positive semidefiniteness), and is unused by the squared-exponential and
    uniformly-modulated kinds.  The triangular formula carries no variance
    prefactor of its own: sigma2 defaults to 1 and multiplies it verbatim.
    """

    kind: str
    sigma2: float = 1.0
    corr_len: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ContractViolationError(f"unknown kernel kind {self.kind!r}")
        if not self.sigma2 > 0:
            raise ContractViolationError(f"kernel sigma2 must be > 0, got {self.sigma2}")
        if not self.corr_len > 0:
            raise ContractViolationError(f"kernel corr_len must be > 0, got {self.corr_len}")


def eval_kernel(k: KernelSpec, x1, x2):
    """Evaluate the covariance C(x1, x2); broadcasts over array inputs."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d = np.abs(x1 - x2)
    if k.kind == "exponential":
        out = k.sigma2 * np.exp(-k.corr_len * d)
    elif k.kind == "squared_exponential":
        out = k.sigma2 * np.exp(-((x1 - x2) ** 2))
    elif k.kind == "triangular":
        out = k.sigma2 * (1.0 - k.corr_len * d) * np.exp(-d)
    elif k.kind == "uniformly_modulated":
        out = k.sigma2 * np.exp(-(x1 + x2)) * np.exp(-d)
    else:  # pragma: no cover - guarded by KernelSpec
        raise ContractViolationError(f"unknown kernel kind {k.kind!r}")
    return out if out.ndim else float(out)


def kernel_matrix(k: KernelSpec, x) -> np.ndarray:
    """Dense covariance matrix [C(x_i, x_j)] on the points x."""
    x = np.asarray(x, dtype=float)
    return eval_kernel(k, x[:, None], x[None, :])


@dataclass(frozen=True)
class InitialConditionSpec:
    """Mean profile parameters plus the fluctuation kernel and scaling mode."""

    u_b: float = 0.0
    x0: float = 0.0
    s: float = 0.1
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("exponential", 0.25, 1.0))
    scaling: str = "fluctuation"

    def __post_init__(self):
        if self.s < 0:
            raise ContractViolationError(f"fluctuation scale s must be >= 0, got {self.s}")
        if self.scaling not in SCALING_MODES:
            raise ContractViolationError(f"unknown scaling mode {self.scaling!r}")


def mean_initial(ic: InitialConditionSpec, x):
    """Mean of the initial field: u_b - arctan(x - x0), strictly decreasing in x."""
    x = np.asarray(x, dtype=float)
    out = ic.u_b - np.arctan(x - ic.x0)
    return out if out.ndim else float(out)
