"""Karhunen-Loeve decomposition of the initial covariance operator.

The Fredholm eigenproblem is discretized by Nystrom with trapezoid weights:
with W the diagonal weight matrix and K the kernel matrix, the symmetrized
problem W^(1/2) K W^(1/2) z = lambda z is solved and eigenfunctions are
recovered as u = W^(-1/2) z, which makes them orthonormal under the
trapezoid inner product by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chaos import ChaosBasis, GermEnsemble, project_all, basis_matrix
from .errors import ContractViolationError, KernelNotPSDError
from .kernels import InitialConditionSpec, KernelSpec, kernel_matrix, mean_initial
from .numerics import Grid1D, symmetric_eigen


@dataclass(frozen=True)
class KLDecomposition:
    """Leading eigenpairs of the initial covariance operator on a grid."""

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    grid: Grid1D

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    """Make each eigenfunction positive at x_min (first nonzero component)."""
    out = modes.copy()
    for i, u in enumerate(out):
        scale = np.max(np.abs(u))
        if scale == 0.0:
            continue
        nonzero = np.flatnonzero(np.abs(u) > 1e-12 * scale)
        if nonzero.size and u[nonzero[0]] < 0:
            out[i] = -u
    return out


def solve_fredholm(kernel, grid: Grid1D, n_modes: int) -> KLDecomposition:
    """Top n_modes eigenpairs of the covariance operator of `kernel` on `grid`.

    kernel is a KernelSpec or any callable C(x1, x2) broadcasting over grids.
    """
    if not 1 <= n_modes <= grid.nx:
        raise ContractViolationError(f"n_modes must be in 1..{grid.nx}, got {n_modes}")
    x = grid.points
    if isinstance(kernel, KernelSpec):
        k_mat = kernel_matrix(kernel, x)
    else:
        k_mat = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    sqw = np.sqrt(grid.trapezoid_weights())
    b = sqw[:, None] * k_mat * sqw[None, :]
    eigvals, eigvecs = symmetric_eigen(0.5 * (b + b.T))
    top = max(eigvals[0], 0.0)
    if eigvals[-1] < -1e-10 * max(top, 1e-300):
        raise KernelNotPSDError(
            f"kernel is not positive semidefinite: min eigenvalue {eigvals[-1]:.3e} "
            f"vs top {top:.3e}"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    modes = (eigvecs[:, :n_modes] / sqw[:, None]).T
    return KLDecomposition(eigvals[:n_modes].copy(), _fix_signs(modes), grid)


def initial_coefficients(
    kl: KLDecomposition,
    basis: ChaosBasis,
    gaussian: bool = True,
    field_samples: np.ndarray | None = None,
    germ: GermEnsemble | None = None,
    mean_field: np.ndarray | None = None,
) -> np.ndarray:
    """Initial chaos coefficients of the KL random variables, one row per mode.

    Gaussian path: the only nonzero entry of row i is sqrt(lambda_i) at the
    degree-1 basis index of germ dimension i, which reproduces Var[Y_i] =
    lambda_i exactly.  Non-Gaussian path: Monte Carlo Galerkin projection of
    the mean-removed field samples onto each mode and basis function.
    """
    if basis.germ_dim != kl.n_modes:
        raise ContractViolationError(
            f"basis germ_dim {basis.germ_dim} must equal number of KL modes {kl.n_modes}"
        )
    if gaussian:
        coeffs = np.zeros((kl.n_modes, basis.size))
        for i in range(kl.n_modes):
            coeffs[i, basis.linear_index(i + 1) - 1] = np.sqrt(kl.eigenvalues[i])
        return coeffs
    if field_samples is None or germ is None or mean_field is None:
        raise ContractViolationError(
            "non-Gaussian initialization requires field samples, a germ ensemble, "
            "and the mean field"
        )
    field_samples = np.asarray(field_samples, dtype=float)
    if field_samples.shape != (germ.count, kl.grid.nx):
        raise ContractViolationError("field samples are not aligned with the germ ensemble")
    w = kl.grid.trapezoid_weights()
    fluct = field_samples - np.asarray(mean_field, dtype=float)[None, :]
    per_sample = fluct @ (w[:, None] * kl.eigenfunctions.T)  # (S, N)
    psi = basis_matrix(basis, germ.xi)
    return project_all(per_sample, basis, psi).T  # (N, P)


def sample_initial_field(kl: KLDecomposition, ic: InitialConditionSpec, xi) -> np.ndarray:
    """One realization of the initial field for germ vector xi."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (kl.n_modes,):
        raise ContractViolationError(f"germ vector must have dimension {kl.n_modes}")
    return sample_initial_fields(kl, ic, xi[None, :])[0]


def sample_initial_fields(kl: KLDecomposition, ic: InitialConditionSpec, xi: np.ndarray) -> np.ndarray:
    """Realizations of the initial field for germ rows xi (S, N) -> (S, nx).

    Accumulates modes in fixed order so results are bit-identical regardless
    of BLAS threading or worker scheduling.
    """
    xi = np.asarray(xi, dtype=float)
    mean = mean_initial(ic, kl.grid.points)
    fields = np.repeat(mean[None, :], xi.shape[0], axis=0)
    amp = np.sqrt(kl.eigenvalues)
    for i in range(kl.n_modes):
        fields += (ic.s * amp[i]) * xi[:, i, None] * kl.eigenfunctions[i][None, :]
    if ic.scaling == "full":
        # Full-scaling reading of the initial condition: s multiplies the
        # mean as well as the fluctuation.
        fields += (ic.s - 1.0) * mean[None, :]
    return fields
