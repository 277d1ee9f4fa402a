"""Shared numerical kernels: uniform 1-D grid, quadrature rules, dense symmetric eigensolver.

Spatial inner products use the composite trapezoid rule on the solver grid;
Gauss rules (Legendre, Gegenbauer) are built by Golub-Welsch from the
three-term recurrence of the ultraspherical polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, pi

import numpy as np

from .errors import ContractViolationError, NumericFailureError


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of nx points spanning [x_min, x_max]."""

    x_min: float
    x_max: float
    nx: int

    def __post_init__(self):
        if self.nx < 3:
            raise ContractViolationError(f"Grid1D requires nx >= 3, got nx={self.nx}")
        if not self.x_max > self.x_min:
            raise ContractViolationError("Grid1D requires x_max > x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.nx, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def spatial_inner_product(f, g, grid: Grid1D) -> float:
    """Trapezoid approximation of the spatial inner product of two grid functions."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[-1] != grid.nx or g.shape[-1] != grid.nx:
        raise ContractViolationError(
            f"grid functions must have length nx={grid.nx}, got {f.shape[-1]} and {g.shape[-1]}"
        )
    return float((f * g) @ grid.trapezoid_weights())


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a quadrature rule on its natural interval."""

    nodes: np.ndarray
    weights: np.ndarray
    weight_kind: str
    lambda_g: float | None = None

    def integrate(self, values) -> float:
        return float(np.asarray(values) @ self.weights)


def gegenbauer_weight_mass(lambda_g: float) -> float:
    """Total mass of the weight (1-x^2)^(lambda-1/2) on [-1, 1]."""
    return float(np.exp(0.5 * log(pi) + lgamma(lambda_g + 0.5) - lgamma(lambda_g + 1.0)))


def gauss_gegenbauer_rule(n: int, lambda_g: float) -> QuadratureRule:
    """n-point Gauss rule for the weight (1-x^2)^(lambda-1/2) on [-1, 1].

    Built by Golub-Welsch: the symmetric tridiagonal Jacobi matrix of the
    orthonormal ultraspherical recurrence has the nodes as eigenvalues, and
    each weight is the total weight mass times the squared first component
    of the corresponding eigenvector.  Exact for polynomials of degree
    <= 2n-1.
    """
    if n < 1:
        raise ContractViolationError(f"quadrature rule needs n >= 1, got {n}")
    if lambda_g <= 0:
        raise ContractViolationError(f"Gegenbauer parameter must be > 0, got {lambda_g}")
    mu0 = gegenbauer_weight_mass(lambda_g)
    if n == 1:
        return QuadratureRule(np.zeros(1), np.array([mu0]), "gegenbauer", lambda_g)
    k = np.arange(1, n, dtype=float)
    # Monic recurrence coefficients beta_k for the ultraspherical weight.
    beta = k * (k + 2.0 * lambda_g - 1.0) / (4.0 * (k + lambda_g) * (k + lambda_g - 1.0))
    jac = np.diag(np.sqrt(beta), 1)
    jac = jac + jac.T
    try:
        nodes, vecs = np.linalg.eigh(jac)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericFailureError(f"Jacobi matrix eigensolve failed: {exc}") from exc
    weights = mu0 * vecs[0, :] ** 2
    return QuadratureRule(nodes, weights, "gegenbauer", lambda_g)


def gauss_legendre_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1] (unit weight; lambda = 1/2)."""
    rule = gauss_gegenbauer_rule(n, 0.5)
    return QuadratureRule(rule.nodes, rule.weights, "legendre", None)


def symmetric_eigen(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a dense symmetric matrix.

    Returns eigenvalues sorted descending and the matching orthonormal
    eigenvectors as columns.  Input asymmetric beyond 1e-12 * max|a| is a
    contract violation.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ContractViolationError("matrix is not symmetric within 1e-12 * max|a|")
    try:
        vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"symmetric eigensolve did not converge: {exc}") from exc
    return vals[::-1].copy(), vecs[:, ::-1].copy()
