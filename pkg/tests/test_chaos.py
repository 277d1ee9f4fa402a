"""Hermite chaos basis, germ sampling, and stochastic projection."""

import math

import numpy as np
import pytest

from shockuq.chaos import (
    ChaosBasis,
    GermEnsemble,
    basis_eval,
    basis_matrix,
    hermite_eval,
    multi_indices,
    sample_germ,
    stochastic_project,
)
from shockuq.errors import ContractViolationError


class TestHermite:
    def test_degree_zero(self):
        assert hermite_eval(0, 2.7) == 1.0

    def test_degree_two_root(self):
        assert hermite_eval(2, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_degree_three(self):
        assert hermite_eval(3, 2.0) == pytest.approx(2.0, rel=1e-14)

    def test_recurrence_against_monomials(self):
        # He_0..He_3 expanded in monomials, exact for order <= 3.
        t = np.linspace(-2.5, 2.5, 11)
        expected = [np.ones_like(t), t, t**2 - 1.0, t**3 - 3.0 * t]
        for n, want in enumerate(expected):
            np.testing.assert_allclose(hermite_eval(n, t), want, atol=1e-12)


class TestBasis:
    def test_size(self):
        basis = ChaosBasis.total_degree(3, 3)
        assert basis.size == math.comb(3 + 3, 3)

    def test_constant_first(self):
        basis = ChaosBasis.total_degree(3, 3)
        assert tuple(basis.index_map[0]) == (0, 0, 0)
        assert basis.norms[0] == 1.0

    def test_graded_ordering(self):
        basis = ChaosBasis.total_degree(3, 3)
        degrees = basis.index_map.sum(axis=1)
        assert np.all(np.diff(degrees) >= 0)

    def test_norms_product_of_factorials(self):
        basis = ChaosBasis.total_degree(2, 3)
        for row, norm in zip(basis.index_map, basis.norms):
            assert norm == math.factorial(row[0]) * math.factorial(row[1])

    def test_linear_index(self):
        basis = ChaosBasis.total_degree(3, 3)
        for dim in (1, 2, 3):
            p = basis.linear_index(dim)
            idx = basis.index_map[p - 1]
            assert idx.sum() == 1 and idx[dim - 1] == 1

    def test_basis_eval_constant(self):
        basis = ChaosBasis.total_degree(2, 2)
        assert basis_eval(basis, 1, [1.3, -0.4]) == 1.0

    def test_basis_eval_linear(self):
        basis = ChaosBasis.total_degree(2, 2)
        p = basis.linear_index(1)
        assert basis_eval(basis, p, [0.5, 9.0]) == pytest.approx(0.5)

    def test_basis_eval_mixed(self):
        basis = ChaosBasis.total_degree(2, 2)
        target = None
        for p in range(1, basis.size + 1):
            if tuple(basis.index_map[p - 1]) == (1, 1):
                target = p
        assert basis_eval(basis, target, [2.0, 3.0]) == pytest.approx(6.0)

    def test_index_out_of_range(self):
        basis = ChaosBasis.total_degree(2, 2)
        with pytest.raises(ContractViolationError):
            basis_eval(basis, 0, [0.0, 0.0])
        with pytest.raises(ContractViolationError):
            basis_eval(basis, basis.size + 1, [0.0, 0.0])

    def test_matrix_matches_pointwise(self):
        basis = ChaosBasis.total_degree(3, 3)
        xi = np.random.default_rng(3).standard_normal((20, 3))
        psi = basis_matrix(basis, xi)
        for s in (0, 7, 19):
            for p in (1, 5, basis.size):
                assert psi[s, p - 1] == pytest.approx(basis_eval(basis, p, xi[s]), rel=1e-12)


class TestSampleGerm:
    def test_moments(self):
        germ = sample_germ(3, 1000, seed=42)
        means = germ.xi.mean(axis=0)
        variances = germ.xi.var(axis=0, ddof=1)
        assert np.all(np.abs(means) <= 0.1)
        assert np.all((variances >= 0.85) & (variances <= 1.15))

    def test_deterministic(self):
        a = sample_germ(4, 256, seed=9)
        b = sample_germ(4, 256, seed=9)
        np.testing.assert_array_equal(a.xi, b.xi)

    def test_order_independent(self):
        ids = np.arange(64)
        forward = sample_germ(2, 64, seed=5, ids=ids)
        shuffled_ids = ids[::-1].copy()
        backward = sample_germ(2, 64, seed=5, ids=shuffled_ids)
        np.testing.assert_array_equal(forward.xi, backward.xi[::-1])

    def test_prefix_property(self):
        # The first dims of a higher-dimensional draw match the lower draw.
        small = sample_germ(3, 32, seed=11)
        large = sample_germ(7, 32, seed=11)
        np.testing.assert_array_equal(small.xi, large.xi[:, :3])


class TestStochasticProject:
    def test_constant(self):
        basis = ChaosBasis.total_degree(2, 2)
        germ = sample_germ(2, 500, seed=1)
        values = np.full(500, 3.25)
        assert stochastic_project(values, basis, 1, germ) == pytest.approx(3.25, rel=1e-12)

    def test_linear_identity(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 10**5, seed=2)
        values = germ.xi[:, 0]
        p = basis.linear_index(1)
        assert stochastic_project(values, basis, p, germ) == pytest.approx(1.0, abs=3e-2)

    def test_zero_mean(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 10**5, seed=2)
        values = germ.xi[:, 0]
        assert stochastic_project(values, basis, 1, germ) == pytest.approx(0.0, abs=3e-2)

    def test_empty_rejected(self):
        basis = ChaosBasis.total_degree(2, 2)
        germ = GermEnsemble(np.zeros((4, 2)), 0, np.arange(4))
        with pytest.raises(ContractViolationError):
            stochastic_project(np.zeros(0), basis, 1, germ)

    def test_misaligned_rejected(self):
        basis = ChaosBasis.total_degree(2, 2)
        germ = sample_germ(2, 16, seed=0)
        with pytest.raises(ContractViolationError):
            stochastic_project(np.zeros(8), basis, 1, germ)


def test_multi_indices_all_degree_one_before_degree_two():
    idx = multi_indices(3, 3)
    degrees = idx.sum(axis=1)
    first_two = np.argmax(degrees == 2)
    assert np.all(degrees[:first_two] <= 1)


def test_discrete_orthogonality_million_samples():
    """MC Gram of the basis matches the exact norms within 5 sigma per cell.

    The sigma of each Gram entry is sqrt(E[(psi_p psi_q)^2]) / sqrt(S),
    computed here with numpy's probabilists' Hermite quadrature as an
    independent oracle.  (The nominal scale sqrt(<psi_p^2><psi_q^2>)
    understates the sampling spread of same-dimension high-degree pairs --
    e.g. by 3x for the cubic diagonal -- so a literal 5x bound on that
    scale is exceeded by typical draws; see the decisions notes.)
    """
    basis = ChaosBasis.total_degree(3, 3)
    count = 10**6
    xi = np.random.default_rng(2026).standard_normal((count, 3))
    psi = basis_matrix(basis, xi)
    gram = psi.T @ psi / count

    nodes, weights = np.polynomial.hermite_e.hermegauss(10)
    weights = weights / weights.sum()  # normal-density normalization
    herme_sq = np.empty((4, nodes.size))
    for degree in range(4):
        coeffs = np.zeros(degree + 1)
        coeffs[degree] = 1.0
        herme_sq[degree] = np.polynomial.hermite_e.hermeval(nodes, coeffs) ** 2
    pair_moment = herme_sq @ (weights[:, None] * herme_sq.T)  # E[He_a^2 He_b^2]

    p_count = basis.size
    second_moment = np.ones((p_count, p_count))
    for d in range(3):
        md = basis.index_map[:, d]
        second_moment *= pair_moment[md[:, None], md[None, :]]
    sigma = np.sqrt(second_moment) / math.sqrt(count)
    err = np.abs(gram - np.diag(basis.norms))
    assert (err <= 5.0 * sigma).all(), f"max ratio {(err / (5.0 * sigma)).max():.3f}"
