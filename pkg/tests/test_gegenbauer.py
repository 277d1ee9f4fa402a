"""Gegenbauer machinery and the per-sample reprojection pipeline."""

import math

import numpy as np
import pytest

import shockuq as sq
from shockuq import dbfe
from shockuq.chaos import ChaosBasis, GermEnsemble, sample_germ
from shockuq.errors import ContractViolationError, NoShockError
from shockuq.gegenbauer import (
    AnalyticityInterval,
    GegenbauerConfig,
    analyticity_intervals,
    chaos_project_post,
    cubic_interpolate,
    detect_shock,
    gegenbauer_eval,
    gegenbauer_norm,
    gegenbauer_table,
    gegenbauer_value_at_one,
    postprocess_ensemble,
    reconstruct_post,
    reproject_sample,
)
from shockuq.numerics import gauss_gegenbauer_rule


def deterministic_state(grid, mean_field, n_modes=1):
    """Zero-variance DBFE state with a prescribed mean, for pipeline tests."""
    basis = ChaosBasis.total_degree(n_modes, 3)
    return dbfe.DBFEState(
        np.asarray(mean_field, dtype=float),
        np.zeros((n_modes, grid.nx)),
        np.zeros((n_modes, basis.size)),
        1.0,
        basis,
        grid,
    )


class TestPolynomials:
    def test_degree_zero(self):
        assert gegenbauer_eval(0, 7.0, 0.37) == 1.0

    def test_degree_one(self):
        assert gegenbauer_eval(1, 7.0, 0.5) == pytest.approx(7.0, rel=1e-14)

    def test_value_at_one_degree_two(self):
        # Gamma(4) / (2! Gamma(2)) = 3 for lambda = 1.
        assert gegenbauer_eval(2, 1.0, 1.0) == pytest.approx(3.0, rel=1e-13)
        assert gegenbauer_value_at_one(2, 1.0) == pytest.approx(3.0, rel=1e-13)

    @pytest.mark.parametrize("lam", [1.0, 3.5, 7.0])
    def test_recurrence_matches_closed_form_at_one(self, lam):
        for n in range(11):
            rec = gegenbauer_eval(n, lam, 1.0)
            closed = gegenbauer_value_at_one(n, lam)
            assert rec == pytest.approx(closed, rel=1e-10)

    def test_norm_chebyshev_u(self):
        for n in range(8):
            assert gegenbauer_norm(n, 1.0) == pytest.approx(math.pi / 2.0, rel=1e-10)

    def test_norm_quadrature_cross_check(self):
        lam = 7.0
        rule = gauss_gegenbauer_rule(100, lam)
        table = gegenbauer_table(7, lam, rule.nodes)
        for n in range(8):
            integral = rule.integrate(table[n] * table[n])
            assert integral == pytest.approx(gegenbauer_norm(n, lam), abs=1e-9 * integral)

    def test_orthogonality(self):
        lam = 7.0
        rule = gauss_gegenbauer_rule(100, lam)
        table = gegenbauer_table(7, lam, rule.nodes)
        for n in range(8):
            for m in range(8):
                integral = rule.integrate(table[n] * table[m])
                expected = gegenbauer_norm(n, lam) if n == m else 0.0
                assert integral == pytest.approx(expected, abs=1e-9)


class TestDetectShock:
    def test_linear_crossing(self, grid):
        x_s = detect_shock(-grid.points, grid)
        assert abs(x_s) <= grid.dx

    def test_step_location(self):
        g = sq.Grid1D(-1.0, 1.0, 401)
        u = np.where(g.points < 0.3, 1.0, -1.0)
        assert abs(detect_shock(u, g) - 0.3) <= g.dx

    def test_no_crossing(self, grid):
        with pytest.raises(NoShockError):
            detect_shock(np.ones(grid.nx), grid)

    def test_picks_steepest(self, grid):
        # Two sign changes; the steeper one wins.
        x = grid.points
        u = np.where(x < -0.5, 0.05, -0.05)
        u[x >= 0.5] = 3.0
        # crossing at -0.5 has jump 0.1; crossing at 0.5 has jump 3.05
        assert detect_shock(u, grid) == pytest.approx(0.5, abs=2 * grid.dx)


class TestAnalyticityIntervals:
    def test_symmetric_case(self, grid):
        left, right = analyticity_intervals(0.0, grid, margin=2)
        assert left.a == pytest.approx(-1.0)
        assert left.b == pytest.approx(-0.02)
        assert right.a == pytest.approx(0.02)
        assert right.b == pytest.approx(1.0)

    def test_near_boundary_side_omitted(self, grid):
        x_s = grid.x_min + 5 * grid.dx
        left, right = analyticity_intervals(x_s, grid, margin=2)
        assert left is None
        assert right is not None

    def test_map_definitions(self):
        iv = AnalyticityInterval(0.2, 0.8)
        assert iv.epsilon == pytest.approx(0.3)
        assert iv.delta == pytest.approx(0.5)
        assert iv.to_unit(0.2) == pytest.approx(-1.0)
        assert iv.to_unit(0.8) == pytest.approx(1.0)
        assert iv.from_unit(0.0) == pytest.approx(0.5)

    def test_shock_outside_domain(self, grid):
        with pytest.raises(ContractViolationError):
            analyticity_intervals(1.5, grid)


class TestCubicInterpolation:
    def test_reproduces_cubics(self, grid):
        x = grid.points
        values = 1.0 - 2.0 * x + 0.5 * x**2 + 0.25 * x**3
        xq = np.linspace(-0.95, 0.95, 57)
        want = 1.0 - 2.0 * xq + 0.5 * xq**2 + 0.25 * xq**3
        np.testing.assert_allclose(cubic_interpolate(grid, values, xq), want, atol=1e-12)

    def test_outside_grid_rejected(self, grid):
        with pytest.raises(ContractViolationError):
            cubic_interpolate(grid, np.zeros(grid.nx), np.array([1.5]))


class TestReproject:
    def test_constant_field(self, grid):
        state = deterministic_state(grid, np.full(grid.nx, 2.5))
        iv = AnalyticityInterval(-0.9, 0.4)
        cfg = GegenbauerConfig(7.0, 7, 100)
        g_hat = reproject_sample(state, np.zeros(1), iv, cfg)
        table = gegenbauer_table(6, 7.0, np.linspace(-1, 1, 33))
        recon = g_hat @ table
        np.testing.assert_allclose(recon, 2.5, atol=1e-10)

    def test_linear_field_two_terms(self, grid):
        state = deterministic_state(grid, 0.3 + 1.7 * grid.points)
        iv = AnalyticityInterval(-0.8, 0.6)
        cfg = GegenbauerConfig(7.0, 7, 100)
        g_hat = reproject_sample(state, np.zeros(1), iv, cfg)
        assert np.abs(g_hat[2:]).max() <= 1e-9

    def test_exponential_truncation_error(self):
        # Gegenbauer series of exp on [-1, 1]: 7 terms reach 1e-5 accuracy
        # (weight exponent 1/2; the truncation error at the endpoints grows
        # with the exponent, e.g. 7.8e-5 at 7.0).
        g = sq.Grid1D(-1.0, 1.0, 201)
        state = deterministic_state(g, np.exp(g.points))
        iv = AnalyticityInterval(-1.0, 1.0)
        cfg = GegenbauerConfig(0.5, 7, 100)
        g_hat = reproject_sample(state, np.zeros(1), iv, cfg)
        z = np.linspace(-1.0, 1.0, 201)
        recon = g_hat @ gegenbauer_table(6, 0.5, z)
        assert np.abs(recon - np.exp(z)).max() <= 1e-5

    @pytest.mark.parametrize("degree", [0, 1, 2, 3, 4, 5, 6])
    def test_polynomial_exactness_on_rule(self, degree):
        # Projection + reconstruction is exact for degree <= M-1 when the
        # node values are supplied exactly (no grid interpolation).
        from shockuq.gegenbauer import _project_on_rule

        cfg = GegenbauerConfig(7.0, 7, 100)
        rule = gauss_gegenbauer_rule(cfg.n_quad, cfg.lambda_g)
        coeffs = np.zeros(degree + 1)
        coeffs[degree] = 1.0
        g_hat = _project_on_rule(
            np.polynomial.polynomial.polyval(rule.nodes, coeffs), cfg, rule
        )
        z = np.linspace(-1.0, 1.0, 41)
        recon = g_hat @ gegenbauer_table(6, 7.0, z)
        want = np.polynomial.polynomial.polyval(z, coeffs)
        np.testing.assert_allclose(recon, want, atol=1e-9)

    @pytest.mark.parametrize("degree", [0, 1, 2, 3, 4, 5, 6])
    def test_polynomial_pipeline_with_interpolation(self, grid, degree):
        # Through the grid route, cubic interpolation bounds the error for
        # degree >= 4 (exact through degree 3).
        coeffs = np.zeros(degree + 1)
        coeffs[degree] = 1.0
        field = np.polynomial.polynomial.polyval(grid.points, coeffs)
        state = deterministic_state(grid, field)
        iv = AnalyticityInterval(-0.7, 0.9)
        cfg = GegenbauerConfig(7.0, 7, 100)
        g_hat = reproject_sample(state, np.zeros(1), iv, cfg)
        xq = np.linspace(iv.a, iv.b, 41)
        recon = g_hat @ gegenbauer_table(6, 7.0, iv.to_unit(xq))
        want = np.polynomial.polynomial.polyval(xq, coeffs)
        tol = 1e-9 if degree <= 3 else 5e-7
        np.testing.assert_allclose(recon, want, atol=tol)


class TestChaosProjectPost:
    def test_constant_coefficients(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 4000, seed=3)
        g_samples = np.full((4000, 5), 1.75)
        mat = chaos_project_post(g_samples, basis, germ)
        np.testing.assert_allclose(mat[:, 0], 1.75, rtol=1e-12)
        assert np.abs(mat[:, 1:]).max() <= 0.05

    def test_linear_germ_dependence(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 10**5, seed=4)
        g_samples = germ.xi[:, :1] * np.ones((1, 3))
        mat = chaos_project_post(g_samples, basis, germ)
        p = basis.linear_index(1)
        np.testing.assert_allclose(mat[:, p - 1], 1.0, atol=3e-2)

    def test_round_trip(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 2 * 10**4, seed=5)
        xi = germ.xi
        g_samples = (1.0 + xi[:, 0] + 0.3 * (xi[:, 1] ** 2 - 1.0))[:, None]
        mat = chaos_project_post(g_samples, basis, germ)
        from shockuq.chaos import basis_matrix

        recon = basis_matrix(basis, xi) @ mat.T
        resid = np.abs(recon - g_samples).mean()
        assert resid <= 0.05

    def test_misalignment_rejected(self):
        basis = ChaosBasis.total_degree(2, 3)
        germ = sample_germ(2, 100, seed=6)
        with pytest.raises(ContractViolationError):
            chaos_project_post(np.zeros((99, 3)), basis, germ)


class TestReconstructPost:
    def test_outside_interval_rejected(self):
        basis = ChaosBasis.total_degree(1, 3)
        iv = AnalyticityInterval(-0.5, 0.5)
        with pytest.raises(ContractViolationError):
            reconstruct_post(np.zeros((3, basis.size)), iv, 0.9, np.zeros(1), basis, 7.0)

    def test_constant_reproduced(self):
        basis = ChaosBasis.total_degree(1, 3)
        iv = AnalyticityInterval(-0.5, 0.5)
        coeffs = np.zeros((3, basis.size))
        coeffs[0, 0] = 4.2  # constant polynomial, constant chaos term
        out = reconstruct_post(coeffs, iv, np.linspace(-0.4, 0.4, 7), np.zeros(1), basis, 7.0)
        np.testing.assert_allclose(out, 4.2, atol=1e-12)


class TestPipelineDeterministic:
    def test_smooth_field_reproduced(self, grid):
        # Zero-variance pipeline on a smooth monotone profile: the post-
        # processed field matches the raw field on both intervals to 1e-4.
        x = grid.points
        mean = 0.4 - x - 0.3 * x**3
        state = deterministic_state(grid, mean)
        germ = GermEnsemble(np.zeros((4, 1)), 0, np.arange(4))
        cfg = GegenbauerConfig(7.0, 7, 100)
        result = postprocess_ensemble(state, germ, cfg, margin=2)
        x_s = result.shock_locations[0]
        for iv_mask in (x <= x_s - 2 * grid.dx - 1e-12, x >= x_s + 2 * grid.dx + 1e-12):
            err = np.abs(result.ensemble.fields[0, iv_mask] - mean[iv_mask]).max()
            assert err <= 1e-4

    def test_no_shock_passthrough(self, grid):
        state = deterministic_state(grid, np.full(grid.nx, 1.0))
        germ = GermEnsemble(np.zeros((4, 1)), 0, np.arange(4))
        result = postprocess_ensemble(state, germ, GegenbauerConfig(7.0, 7, 100))
        assert result.skipped.all()
        np.testing.assert_array_equal(result.ensemble.fields, result.raw.fields)

    def test_gap_keeps_raw_values(self, grid):
        mean = 0.4 - grid.points - 0.3 * grid.points**3
        state = deterministic_state(grid, mean)
        germ = GermEnsemble(np.zeros((2, 1)), 0, np.arange(2))
        result = postprocess_ensemble(state, germ, GegenbauerConfig(7.0, 7, 100), margin=2)
        x_s = result.shock_locations[0]
        gap = np.abs(grid.points - x_s) < 2 * grid.dx - 1e-12
        np.testing.assert_array_equal(
            result.ensemble.fields[0, gap], result.raw.fields[0, gap]
        )


def test_lambda_sweep_roundoff_trend(grid):
    # For fixed M, pushing the weight exponent far up degrades the
    # reprojection (roundoff and weight concentration), so the error at the
    # largest exponent exceeds the best error over the sweep.
    state = deterministic_state(grid, np.exp(grid.points))
    cfg_errors = []
    iv = AnalyticityInterval(-1.0, 1.0)
    z = np.linspace(-1.0, 1.0, 201)
    for lam in (1.0, 3.0, 7.0, 31.0, 101.0, 301.0):
        cfg = GegenbauerConfig(lam, 7, 100)
        g_hat = reproject_sample(state, np.zeros(1), iv, cfg)
        recon = g_hat @ gegenbauer_table(6, lam, z)
        cfg_errors.append(np.abs(recon - np.exp(z)).max())
    assert cfg_errors[-1] > min(cfg_errors)
