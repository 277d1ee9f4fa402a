"""Dynamically bi-orthogonal field equations (DBFE) for stochastic Burgers.

The solution is expanded as u(x,t;w) = mean(x,t) + sum_i Y_i(t;w) u_i(x,t)
with the KL random variables Y_i carried in a Hermite chaos basis,
Y_i = sum_p Y[i,p] psi_p.  The dynamic-orthogonality condition closes the
system: the mean evolves by the expected spatial operator, each mode by the
covariance-weighted conditional expectation with its span component
removed, and the chaos coefficients by Galerkin projection of the
mean-removed operator.

Stochastic expectations are Monte Carlo averages over a germ sample set
that is fixed for the whole run and reused at every RK4 stage, which keeps
the time integrator free of sampling jitter.  The spatial operator is the
same first-order central KT flux used by the deterministic solver,
evaluated per sample; its chaos-projected interface tensors (the gPC
expansion of the local speed and its products with the KL variables) are
exposed for diagnostics through flux_tensors.

Boundary data keeps its initial value: the mean is pinned at the domain
endpoints, while the mode endpoint values rotate with the span-mixing
term of the DO projection.  That rotation is the expansion-consistent
realization of the frozen boundary condition: freezing the mode endpoint
values themselves lets the reconstructed per-sample boundary values drift
as the coefficients evolve, and the error advects into the domain along
the inflow characteristics (observed as O(0.1) relative errors over the
outer half of the domain).

The per-stage sample sweep is a compiled kernel with fixed-chunk
accumulation, so runs are bit-reproducible regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import burgers
from .burgers import _row_rhs
from .chaos import ChaosBasis, GermEnsemble, basis_matrix, sample_germ
from .errors import ContractViolationError, SolverFailureError
from .kernels import InitialConditionSpec, mean_initial
from .kle import KLDecomposition, initial_coefficients
from .mc import Ensemble
from .numerics import Grid1D

DISSIPATION_MODES = ("full", "mean_only", "central")
_DISSIPATION_FLAG = {"full": 0, "mean_only": 1, "central": 2}


@dataclass
class DBFEState:
    """Evolving mean field, orthonormal modes, and chaos coefficient matrix."""

    mean: np.ndarray
    modes: np.ndarray
    coeffs: np.ndarray
    t: float
    basis: ChaosBasis
    grid: Grid1D
    bc_mean: np.ndarray = field(default=None)
    bc_modes: np.ndarray = field(default=None)
    bc_chaos: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.bc_mean is None:
            self.bc_mean = self.mean[[0, -1]].copy()
        if self.bc_modes is None:
            self.bc_modes = self.modes[:, [0, -1]].copy()
        if self.bc_chaos is None:
            # Chaos representation of the frozen boundary fluctuation:
            # H[p, b] = sum_k Y[k, p](0) u_k(beta_b, 0).
            self.bc_chaos = self.coeffs.T @ self.bc_modes

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]


def init_state(kl: KLDecomposition, ic: InitialConditionSpec, basis: ChaosBasis) -> DBFEState:
    """Initial DBFE state; the fluctuation scale s is folded into the coefficients."""
    mean = mean_initial(ic, kl.grid.points)
    if ic.scaling == "full":
        mean = ic.s * mean
    coeffs = ic.s * initial_coefficients(kl, basis, gaussian=True)
    return DBFEState(mean, kl.eigenfunctions.copy(), coeffs, 0.0, basis, kl.grid)


def covariance(state: DBFEState) -> np.ndarray:
    """Covariance matrix of the KL variables from their chaos coefficients.

    C_ik = sum_{p>=2} Y[i,p] Y[k,p] <psi_p^2>; the constant term carries no
    variance.  The product is symmetrized so C equals its transpose exactly
    (BLAS computes the two triangles in different summation orders).
    """
    y_fluct = state.coeffs[:, 1:]
    raw = (y_fluct * state.basis.norms[1:][None, :]) @ y_fluct.T
    return 0.5 * (raw + raw.T)


def regularized_inverse(c: np.ndarray) -> np.ndarray:
    """Eigendecomposition pseudo-inverse with a relative eigenvalue floor.

    Eigenvalues below eps = 1e-8 * max(trace/N, 1e-30) are inverted as
    1/eps, which keeps the inverse finite when a mode's variance collapses.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
    floor = 1e-8 * max(np.trace(c) / n, 1e-30)
    inv_vals = 1.0 / np.maximum(vals, floor)
    return (vecs * inv_vals[None, :]) @ vecs.T


# Fixed partial-sum count for the parallel sample sweep.  Each chunk
# accumulates its own partials and the partials are combined in chunk
# order, so results are bit-identical for any number of threads.
_SWEEP_CHUNKS = 16


@nb.njit(parallel=True, cache=True)
def _stage_sweep(mean, modes, y_samples, w, dx, flag, need_dots,
                 op_mean_sum, op_y_sum, ely_sum, dots, partials):
    """Accumulate E[L], E[L Y] and per-sample weighted mode dots in one sweep.

    flag selects the dissipation variant: 0 = KT flux everywhere, 1 = KT in
    the mean block only (central elsewhere), 2 = central everywhere.
    partials is scratch of shape (_SWEEP_CHUNKS, n_modes + 2, nx).
    """
    count, n_modes = y_samples.shape
    nx = mean.shape[0]
    n_chunks = partials.shape[0]
    chunk = (count + n_chunks - 1) // n_chunks
    for c in nb.prange(n_chunks):
        part = partials[c]
        part[:] = 0.0
        row = np.empty(nx)
        op_f = np.empty(nx)
        op_c = np.empty(nx)
        lo = c * chunk
        hi = min(count, lo + chunk)
        for s in range(lo, hi):
            for j in range(nx):
                row[j] = mean[j]
            for i in range(n_modes):
                ys = y_samples[s, i]
                for j in range(nx):
                    row[j] += ys * modes[i, j]
            if flag == 0:
                _row_rhs(row, dx, op_f)
                op_m = op_f
                op_y = op_f
            elif flag == 1:
                _row_rhs(row, dx, op_f)
                _row_central(row, dx, op_c)
                op_m = op_f
                op_y = op_c
            else:
                _row_central(row, dx, op_c)
                op_m = op_c
                op_y = op_c
            for j in range(nx):
                part[0, j] += op_m[j]
                part[1, j] += op_y[j]
            for i in range(n_modes):
                ys = y_samples[s, i]
                for j in range(nx):
                    part[2 + i, j] += ys * op_y[j]
            if need_dots:
                for i in range(n_modes):
                    acc = 0.0
                    for j in range(nx):
                        acc += op_y[j] * w[j] * modes[i, j]
                    dots[s, i] = acc
    op_mean_sum[:] = 0.0
    op_y_sum[:] = 0.0
    ely_sum[:] = 0.0
    for c in range(n_chunks):
        for j in range(nx):
            op_mean_sum[j] += partials[c, 0, j]
            op_y_sum[j] += partials[c, 1, j]
        for i in range(n_modes):
            for j in range(nx):
                ely_sum[i, j] += partials[c, 2 + i, j]


@nb.njit(inline="always", cache=True)
def _row_central(row, dx, out):
    """Central flux-average derivative of one row (no dissipation term)."""
    nx = row.shape[0]
    out[0] = 0.0
    out[nx - 1] = 0.0
    f_prev = 0.0
    for i in range(nx - 1):
        ul = row[i]
        ur = row[i + 1]
        f = 0.5 * (0.5 * ul * ul + 0.5 * ur * ur)
        if i > 0:
            out[i] = -(f - f_prev) / dx
        f_prev = f


@dataclass
class FluxTensors:
    """Chaos-projected interface tensors of the local speed (diagnostics)."""

    a_hat: np.ndarray  # (P, n_interfaces)
    m: np.ndarray      # (N, P, n_interfaces)
    t3: np.ndarray     # (N, N, P, n_interfaces)


@dataclass
class Workspace:
    """Per-run immutable sampling data shared by every RK4 stage."""

    germ: GermEnsemble
    psi: np.ndarray
    w: np.ndarray
    dissipation: str = "full"
    boundary: str = "rotation"
    bc_relax_time: float = 0.02

    @property
    def count(self) -> int:
        return self.psi.shape[0]


def make_workspace(
    state: DBFEState,
    s_int: int,
    seed: int,
    dissipation: str = "full",
    germ: GermEnsemble | None = None,
    boundary: str = "rotation",
    bc_relax_time: float = 0.02,
) -> Workspace:
    if dissipation not in DISSIPATION_MODES:
        raise ContractViolationError(f"unknown dissipation mode {dissipation!r}")
    if boundary not in BOUNDARY_MODES:
        raise ContractViolationError(f"unknown boundary mode {boundary!r}")
    if germ is None:
        germ = sample_germ(state.basis.germ_dim, s_int, seed)
    psi = basis_matrix(state.basis, germ.xi)
    return Workspace(germ, psi, state.grid.trapezoid_weights(), dissipation, boundary,
                     bc_relax_time)


def _gram(modes: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gram matrix of the modes under the trapezoid inner product."""
    return (modes * w[None, :]) @ modes.T


def _rhs(mean, modes, coeffs, basis, ws: Workspace, dx, need_coeff_rhs, y_samples,
         buffers):
    """Evolution right-hand sides for (mean, modes[, coefficients])."""
    op_mean_sum, op_y_sum, ely_sum, dots, partials = buffers
    count = ws.count
    _stage_sweep(
        mean, modes, y_samples, ws.w, dx, _DISSIPATION_FLAG[ws.dissipation],
        need_coeff_rhs, op_mean_sum, op_y_sum, ely_sum, dots, partials,
    )
    mean_rhs = op_mean_sum / count
    ely = ely_sum / count

    c = (coeffs[:, 1:] * basis.norms[1:][None, :]) @ coeffs[:, 1:].T
    velocity = regularized_inverse(c) @ ely
    # Modes whose variance is numerical dust carry no dynamics information;
    # without this guard the floored inverse amplifies round-off in E[L Y]
    # into spurious velocities.
    dead = np.diag(c) <= 1e-26
    if dead.any():
        velocity[dead] = 0.0

    # Remove the span component so the update is orthogonal to every
    # current mode; solving against the Gram matrix keeps the removal exact
    # even under tiny orthonormality drift.  The mixing term rotates the
    # mode endpoint values along with the coefficient frame (velocity
    # itself vanishes there).
    proj = velocity @ (modes * ws.w[None, :]).T  # proj[j, i] = <velocity_j, u_i>
    gram = _gram(modes, ws.w)
    try:
        coeff_mix = np.linalg.solve(gram, proj.T).T
    except np.linalg.LinAlgError:
        coeff_mix = np.linalg.lstsq(gram, proj.T, rcond=None)[0].T
    mode_rhs = velocity - coeff_mix @ modes

    if not need_coeff_rhs:
        return mean_rhs, mode_rhs, None

    # Per-sample <L - E[L], u_i> = dots[s, i] - mean over samples of the
    # same dots (linearity of the inner product; this route also cancels
    # exactly when every sample coincides).
    fluct_dots = dots - dots.mean(axis=0)[None, :]
    coeff_rhs = (ws.psi.T @ fluct_dots).T / (count * basis.norms[None, :])
    return mean_rhs, mode_rhs, coeff_rhs


def _make_buffers(state: DBFEState, ws: Workspace):
    n, nx = state.modes.shape
    return (
        np.empty(nx),
        np.empty(nx),
        np.empty((n, nx)),
        np.empty((ws.count, n)),
        np.empty((_SWEEP_CHUNKS, n + 2, nx)),
    )


def dbfe_rhs(state: DBFEState, ws: Workspace):
    """Instantaneous (mean, mode, coefficient) derivatives of the state."""
    y_samples = ws.psi @ state.coeffs.T
    return _rhs(
        state.mean, state.modes, state.coeffs, state.basis, ws, state.grid.dx,
        True, y_samples, _make_buffers(state, ws),
    )


BOUNDARY_MODES = ("relaxed", "rotation", "projected", "frozen")


def boundary_targets(state: DBFEState) -> np.ndarray:
    """Covariance-consistent mode endpoint values for the frozen boundary data.

    Solves C(t) u(beta) = E[h(beta) Y(t)] through the chaos representation
    of h; rows are modes, columns the two endpoints.
    """
    norms = state.basis.norms
    b = state.coeffs[:, 1:] @ (norms[1:, None] * state.bc_chaos[1:, :])
    return regularized_inverse(covariance(state)) @ b


def apply_boundary(state: DBFEState, mode: str = "rotation", blend: float = 1.0) -> DBFEState:
    """Enforce the frozen boundary data; interior values untouched.

    The mean endpoints are pinned to their initial values in every variant
    (the boundary data is frozen).  Mode endpoint treatment:

    - "projected" (default): solve C(t) u(beta) = E[h(beta) Y(t)] for the
      mode endpoint values, the covariance-consistent representation of the
      frozen boundary data in the current coefficient frame, evaluated
      through the chaos representation of h.
    - "rotation": leave the endpoints to the DO span rotation (no-op here).
    - "frozen": pin the mode endpoints to their initial values (literal
      frozen-Dirichlet variant; the reconstructed per-sample boundary
      values drift once the coefficients evolve).
    """
    if mode not in BOUNDARY_MODES:
        raise ContractViolationError(f"unknown boundary mode {mode!r}")
    state.mean[0], state.mean[-1] = state.bc_mean
    if mode == "frozen":
        state.modes[:, 0] = state.bc_modes[:, 0]
        state.modes[:, -1] = state.bc_modes[:, 1]
    elif mode in ("projected", "relaxed"):
        # Degenerate (zero-variance) coefficients carry no boundary
        # information; leave the endpoints to the span rotation.
        if np.trace(covariance(state)) > 1e-28:
            endpoints = boundary_targets(state)
            if mode == "projected":
                state.modes[:, 0] = endpoints[:, 0]
                state.modes[:, -1] = endpoints[:, 1]
            else:
                state.modes[:, 0] += blend * (endpoints[:, 0] - state.modes[:, 0])
                state.modes[:, -1] += blend * (endpoints[:, 1] - state.modes[:, -1])
    return state


def step(state: DBFEState, ws: Workspace, dt: float, buffers=None) -> DBFEState:
    """One time step: RK4 on mean and modes, forward Euler on the coefficients.

    The coefficients are held at their start-of-step values through the RK4
    stages (their ODE is integrated with the explicit Euler pairing); the
    per-sample flux data is rebuilt at every stage.
    """
    if dt <= 0:
        raise ContractViolationError(f"dt must be positive, got {dt}")
    if buffers is None:
        buffers = _make_buffers(state, ws)
    dx = state.grid.dx
    basis = state.basis
    y_samples = ws.psi @ state.coeffs.T
    k1m, k1u, kc = _rhs(state.mean, state.modes, state.coeffs, basis, ws, dx, True,
                        y_samples, buffers)
    k2m, k2u, _ = _rhs(state.mean + 0.5 * dt * k1m, state.modes + 0.5 * dt * k1u,
                       state.coeffs, basis, ws, dx, False, y_samples, buffers)
    k3m, k3u, _ = _rhs(state.mean + 0.5 * dt * k2m, state.modes + 0.5 * dt * k2u,
                       state.coeffs, basis, ws, dx, False, y_samples, buffers)
    k4m, k4u, _ = _rhs(state.mean + dt * k3m, state.modes + dt * k3u,
                       state.coeffs, basis, ws, dx, False, y_samples, buffers)
    mean = state.mean + (dt / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
    modes = state.modes + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    coeffs = state.coeffs + dt * kc
    if not (np.isfinite(mean).all() and np.isfinite(modes).all() and np.isfinite(coeffs).all()):
        raise SolverFailureError("non-finite DBFE state", phase="dbfe")
    out = DBFEState(
        mean, modes, coeffs, state.t + dt, state.basis, state.grid,
        state.bc_mean, state.bc_modes, state.bc_chaos,
    )
    blend = min(1.0, dt / ws.bc_relax_time) if ws.bc_relax_time > 0 else 1.0
    return apply_boundary(out, ws.boundary, blend)


def reorthonormalize(state: DBFEState) -> DBFEState:
    """Gram-Schmidt repair of mode orthonormality (optional; off by default)."""
    w = state.grid.trapezoid_weights()
    modes = state.modes
    for i in range(modes.shape[0]):
        for k in range(i):
            modes[i] -= ((modes[i] * w) @ modes[k]) * modes[k]
        norm = np.sqrt((modes[i] * w) @ modes[i])
        if norm > 0:
            modes[i] /= norm
    return state


def flux_tensors(state: DBFEState, germ: GermEnsemble, psi: np.ndarray | None = None) -> FluxTensors:
    """Chaos projections of the interface local speed and its KL products.

    Per interface: a(xi) = max(|u_j(xi)|, |u_{j+1}(xi)|) is projected onto
    every basis function, as are Y_i a and Y_i Y_k a.  The first coefficient
    of each is the Monte Carlo mean of the corresponding product.
    """
    if psi is None:
        psi = basis_matrix(state.basis, germ.xi)
    count = psi.shape[0]
    norms = state.basis.norms
    y_samples = psi @ state.coeffs.T
    fields = state.mean[None, :] + y_samples @ state.modes
    speed = burgers.local_speed(fields[:, :-1], fields[:, 1:])  # (S, nI)
    proj = psi.T / (count * norms[:, None])  # (P, S)
    a_hat = proj @ speed
    n = state.n_modes
    m = np.empty((n, a_hat.shape[0], a_hat.shape[1]))
    t3 = np.empty((n, n, a_hat.shape[0], a_hat.shape[1]))
    for i in range(n):
        m[i] = proj @ (y_samples[:, i, None] * speed)
        for k in range(n):
            t3[i, k] = proj @ (y_samples[:, i, None] * y_samples[:, k, None] * speed)
    return FluxTensors(a_hat, m, t3)


def reconstruct_sample(state: DBFEState, xi) -> np.ndarray:
    """Evaluate the bi-orthogonal expansion at one germ realization."""
    xi = np.asarray(xi, dtype=float)
    psi = basis_matrix(state.basis, xi[None, :])
    return (state.mean[None, :] + (psi @ state.coeffs.T) @ state.modes)[0]


def reconstruct_ensemble(state: DBFEState, germ: GermEnsemble, method: str = "dbfe") -> Ensemble:
    """Evaluate the expansion at every germ sample, aligned row-for-row."""
    psi = basis_matrix(state.basis, germ.xi)
    fields = state.mean[None, :] + (psi @ state.coeffs.T) @ state.modes
    meta = {
        "method": method,
        "seed": int(germ.seed),
        "samples": int(germ.count),
        "germ_dim": int(germ.dim),
        "t_end": float(state.t),
    }
    return Ensemble(fields, germ, state.grid, float(state.t), meta)


@dataclass
class DBFERun:
    """Final state plus per-run diagnostics."""

    state: DBFEState
    do_residual_max: float
    ortho_drift_max: float
    y1_max: float
    series_t: np.ndarray
    series_mode_variance: np.ndarray
    series_do_residual: np.ndarray
    series_ortho_drift: np.ndarray
    steps: int


def run_dbfe(
    kl: KLDecomposition,
    ic: InitialConditionSpec,
    basis: ChaosBasis,
    t_end: float,
    dt: float,
    s_int: int,
    seed: int,
    dissipation: str = "full",
    germ_int: GermEnsemble | None = None,
    repair_orthonormality: bool = False,
    record_every: int = 50,
    boundary: str = "rotation",
    bc_relax_time: float = 0.02,
) -> DBFERun:
    """Advance the DBFE state to t_end, tracking DO diagnostics every step."""
    state = init_state(kl, ic, basis)
    ws = make_workspace(state, s_int, seed, dissipation, germ_int, boundary, bc_relax_time)
    buffers = _make_buffers(state, ws)
    w = ws.w
    eye = np.eye(state.n_modes)

    do_max = 0.0
    ortho_max = 0.0
    y1_max = float(np.max(np.abs(state.coeffs[:, 0])))
    times = [0.0]
    mode_var = [np.diag(covariance(state)).copy()]
    do_series = [0.0]
    gram = (state.modes * w[None, :]) @ state.modes.T
    ortho_series = [float(np.max(np.abs(gram - eye)))]

    t = 0.0
    step_idx = 0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        prev_modes = state.modes.copy()
        try:
            state = step(state, ws, h, buffers)
        except SolverFailureError as exc:
            raise SolverFailureError(
                "DBFE step failed", step=step_idx + 1, phase="dbfe"
            ) from exc
        if repair_orthonormality:
            state = reorthonormalize(state)
        t = state.t
        step_idx += 1

        resid = (prev_modes * w[None, :]) @ ((state.modes - prev_modes) / h).T
        do_now = float(np.max(np.abs(resid)))
        gram = (state.modes * w[None, :]) @ state.modes.T
        ortho_now = float(np.max(np.abs(gram - eye)))
        do_max = max(do_max, do_now)
        ortho_max = max(ortho_max, ortho_now)
        y1_max = max(y1_max, float(np.max(np.abs(state.coeffs[:, 0]))))
        if step_idx % record_every == 0 or t >= t_end - 1e-12:
            times.append(t)
            mode_var.append(np.diag(covariance(state)).copy())
            do_series.append(do_now)
            ortho_series.append(ortho_now)

    return DBFERun(
        state=state,
        do_residual_max=do_max,
        ortho_drift_max=ortho_max,
        y1_max=y1_max,
        series_t=np.array(times),
        series_mode_variance=np.array(mode_var),
        series_do_residual=np.array(do_series),
        series_ortho_drift=np.array(ortho_series),
        steps=step_idx,
    )
