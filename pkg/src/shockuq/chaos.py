"""Multivariate probabilists' Hermite chaos basis over a Gaussian germ.

Basis functions are products of 1-D probabilists' Hermite polynomials
He_n (standard-normal weight, <He_n^2> = n!), indexed 1-based in graded
lexicographic order: index 1 is the constant, all degree-1 indices precede
degree-2 indices, and within a degree the leading germ dimension carries
the highest multi-index component first.

Stochastic-direction inner products are Monte Carlo estimates over shared
germ sample sets; sampling is counter-based per sample id so ensembles are
reproducible regardless of generation order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError


def multi_indices(germ_dim: int, order: int) -> np.ndarray:
    """All multi-indices with total degree <= order, graded-lexicographic."""
    if germ_dim < 1 or order < 0:
        raise ContractViolationError("germ_dim must be >= 1 and order >= 0")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for lead in range(total, -1, -1):
            for rest in compositions(total - lead, parts - 1):
                yield (lead,) + rest

    rows = []
    for degree in range(order + 1):
        rows.extend(compositions(degree, germ_dim))
    return np.array(rows, dtype=np.int64)


def hermite_eval(n: int, t):
    """Probabilists' Hermite He_n(t) via the three-term recurrence."""
    if n < 0:
        raise ContractViolationError(f"Hermite degree must be >= 0, got {n}")
    t = np.asarray(t, dtype=float)
    h_prev = np.ones_like(t)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = t.copy()
    for k in range(1, n):
        h, h_prev = t * h - k * h_prev, h
    return h if h.ndim else float(h)


def hermite_table(max_degree: int, t: np.ndarray) -> np.ndarray:
    """Stack He_0(t)..He_max(t) as rows; t may be any shape."""
    t = np.asarray(t, dtype=float)
    out = np.empty((max_degree + 1,) + t.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t
    for k in range(1, max_degree):
        out[k + 1] = t * out[k] - k * out[k - 1]
    return out


@dataclass(frozen=True)
class ChaosBasis:
    """Hermite chaos basis metadata: index map and squared norms."""

    germ_dim: int
    order: int
    index_map: np.ndarray
    norms: np.ndarray

    @classmethod
    def total_degree(cls, germ_dim: int, order: int) -> "ChaosBasis":
        idx = multi_indices(germ_dim, order)
        fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
        norms = np.prod(fact[idx], axis=1)
        return cls(germ_dim, order, idx, norms)

    @property
    def size(self) -> int:
        return self.index_map.shape[0]

    def linear_index(self, dim: int) -> int:
        """1-based basis index of the degree-1 function in germ dimension dim (1-based)."""
        if not 1 <= dim <= self.germ_dim:
            raise ContractViolationError(f"germ dimension {dim} out of range 1..{self.germ_dim}")
        target = np.zeros(self.germ_dim, dtype=np.int64)
        target[dim - 1] = 1
        hits = np.flatnonzero((self.index_map == target).all(axis=1))
        return int(hits[0]) + 1


def basis_eval(basis: ChaosBasis, p: int, xi) -> float:
    """Evaluate basis function psi_p (1-based) at a single germ realization."""
    if not 1 <= p <= basis.size:
        raise ContractViolationError(f"basis index {p} out of range 1..{basis.size}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.germ_dim,):
        raise ContractViolationError(
            f"germ realization must have dimension {basis.germ_dim}, got shape {xi.shape}"
        )
    value = 1.0
    for d, m in enumerate(basis.index_map[p - 1]):
        if m:
            value *= hermite_eval(int(m), xi[d])
    return float(value)


def basis_matrix(basis: ChaosBasis, xi: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at sample rows xi (S, germ_dim) -> (S, P)."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 2 or xi.shape[1] != basis.germ_dim:
        raise ContractViolationError(
            f"expected samples of shape (S, {basis.germ_dim}), got {xi.shape}"
        )
    psi = np.ones((xi.shape[0], basis.size))
    for d in range(basis.germ_dim):
        tab = hermite_table(basis.order, xi[:, d])
        psi *= tab[basis.index_map[:, d], :].T
    return psi


@dataclass(frozen=True)
class GermEnsemble:
    """Standard-normal germ realizations with their seed lineage.

    Row s is drawn from an independent stream keyed by (seed, ids[s]), so a
    sample's values depend only on its id, never on generation order.
    Quadrature grids carry explicit node weights; sampled ensembles leave
    weights as None (uniform 1/S).
    """

    xi: np.ndarray
    seed: int
    ids: np.ndarray
    weights: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.xi.shape[0]

    @property
    def dim(self) -> int:
        return self.xi.shape[1]

    def sample(self, s: int) -> np.ndarray:
        return self.xi[s]


def sample_germ(germ_dim: int, count: int, seed: int, ids=None) -> GermEnsemble:
    """Draw count i.i.d. N(0, I) germ vectors from per-sample counter streams."""
    if count < 1:
        raise ContractViolationError(f"sample count must be >= 1, got {count}")
    if ids is None:
        ids = np.arange(count, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (count,):
            raise ContractViolationError("ids must have one entry per sample")
    xi = np.empty((count, germ_dim))
    for row, sample_id in enumerate(ids):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(int(sample_id),)))
        xi[row] = rng.standard_normal(germ_dim)
    return GermEnsemble(xi, int(seed), ids)


def gauss_hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule for the standard normal weight (probabilists').

    Golub-Welsch on the monic Hermite recurrence (beta_k = k); weights sum
    to 1 and the rule is exact for polynomials of degree <= 2n - 1 under
    the N(0, 1) density.
    """
    if n < 1:
        raise ContractViolationError(f"quadrature rule needs n >= 1, got {n}")
    if n == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, n, dtype=float))
    jac = np.diag(off, 1)
    nodes, vecs = np.linalg.eigh(jac + jac.T)
    return nodes, vecs[0, :] ** 2


def hermite_collocation(germ_dim: int, n_1d: int) -> GermEnsemble:
    """Tensor Gauss-Hermite collocation grid as a weighted germ ensemble.

    Node ordering is deterministic (lexicographic over dimensions).  The
    returned ensemble carries the product weights in `weights`; seed -1
    marks it as a quadrature grid rather than a sampled ensemble.
    """
    nodes, weights = gauss_hermite_rule(n_1d)
    grids = np.meshgrid(*([nodes] * germ_dim), indexing="ij")
    xi = np.stack([g.ravel() for g in grids], axis=1)
    w_grids = np.meshgrid(*([weights] * germ_dim), indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in w_grids], axis=1), axis=1)
    return GermEnsemble(xi, -1, np.arange(xi.shape[0]), w)


def stochastic_project(values, basis: ChaosBasis, p: int, germ: GermEnsemble, psi=None) -> float:
    """Monte Carlo estimate of <values, psi_p> / <psi_p^2> over the germ samples."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        raise ContractViolationError("cannot project an empty ensemble")
    if values.shape[0] != germ.count:
        raise ContractViolationError(
            f"values ({values.shape[0]}) are not aligned with samples ({germ.count})"
        )
    if not 1 <= p <= basis.size:
        raise ContractViolationError(f"basis index {p} out of range 1..{basis.size}")
    if psi is None:
        psi = basis_matrix(basis, germ.xi)
    return float(values @ psi[:, p - 1] / (germ.count * basis.norms[p - 1]))


def project_all(values: np.ndarray, basis: ChaosBasis, psi: np.ndarray) -> np.ndarray:
    """Project per-sample values (S,) or (S, K) onto every basis function at once."""
    values = np.asarray(values, dtype=float)
    coeff = psi.T @ values / values.shape[0]
    if coeff.ndim == 1:
        return coeff / basis.norms
    return coeff / basis.norms[:, None]
