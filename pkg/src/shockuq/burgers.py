"""Deterministic 1-D inviscid Burgers solver.

First-order central Kurganov-Tadmor flux (the local Lax-Friedrichs form
f_hat = (f_l + f_r)/2 - a (u_r - u_l)/2 with a = max(|u_l|, |u_r|)) and
classical RK4 in time, with frozen Dirichlet endpoints.  Used per sample by
the Monte Carlo propagator and as the physics oracle for the spectral
solvers.

Batches (S, nx) advance in lockstep through a compiled per-row kernel:
rows never interact, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import SolverFailureError
from .numerics import Grid1D

CFL_LIMIT = 0.5


@dataclass
class FieldState:
    """Grid field with its time stamp."""

    u: np.ndarray
    t: float
    grid: Grid1D


def flux(u):
    """Burgers flux f(u) = u^2 / 2."""
    u = np.asarray(u, dtype=float)
    return 0.5 * u * u


def local_speed(u_l, u_r):
    """Maximum local wave speed max(|f'|) = max(|u_l|, |u_r|) over a cell."""
    return np.maximum(np.abs(u_l), np.abs(u_r))


def kt_flux(u_l, u_r):
    """First-order central KT interface flux (consistent: kt_flux(u, u) = f(u))."""
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    return 0.5 * (flux(u_l) + flux(u_r)) - 0.5 * local_speed(u_l, u_r) * (u_r - u_l)


def rhs_field(u: np.ndarray, dx: float) -> np.ndarray:
    """Flux-difference time derivative; endpoints frozen (derivative 0).

    Reference NumPy implementation, shape (nx,) or (S, nx); the compiled
    row kernel used by `solve` computes the same expression.
    """
    f_iface = kt_flux(u[..., :-1], u[..., 1:])
    out = np.zeros_like(u)
    out[..., 1:-1] = -(f_iface[..., 1:] - f_iface[..., :-1]) / dx
    return out


def rhs(state: FieldState) -> np.ndarray:
    return rhs_field(state.u, state.grid.dx)


def total_variation(u: np.ndarray) -> np.ndarray:
    """Discrete total variation sum |u_{j+1} - u_j| (per batch row if 2-D)."""
    return np.sum(np.abs(np.diff(u, axis=-1)), axis=-1)


@nb.njit(inline="always", cache=True)
def _row_rhs(row, dx, out):
    """KT flux-difference derivative of one row; endpoint derivatives 0."""
    nx = row.shape[0]
    out[0] = 0.0
    out[nx - 1] = 0.0
    f_prev = 0.0
    for i in range(nx - 1):
        ul = row[i]
        ur = row[i + 1]
        al = ul if ul >= 0.0 else -ul
        ar = ur if ur >= 0.0 else -ur
        a = al if al > ar else ar
        f = 0.5 * (0.5 * ul * ul + 0.5 * ur * ur) - 0.5 * a * (ur - ul)
        if i > 0:
            out[i] = -(f - f_prev) / dx
        f_prev = f


@nb.njit(parallel=True, cache=True)
def _rk4_step_batch(u, dx, h, scratch, ok):
    """One RK4 step for every row; scratch is (n_chunks, 5, nx)."""
    count, nx = u.shape
    n_chunks = scratch.shape[0]
    chunk = (count + n_chunks - 1) // n_chunks
    for c in nb.prange(n_chunks):
        k1 = scratch[c, 0]
        k2 = scratch[c, 1]
        k3 = scratch[c, 2]
        k4 = scratch[c, 3]
        tmp = scratch[c, 4]
        lo = c * chunk
        hi = min(count, lo + chunk)
        for s in range(lo, hi):
            row = u[s]
            _row_rhs(row, dx, k1)
            for j in range(nx):
                tmp[j] = row[j] + 0.5 * h * k1[j]
            _row_rhs(tmp, dx, k2)
            for j in range(nx):
                tmp[j] = row[j] + 0.5 * h * k2[j]
            _row_rhs(tmp, dx, k3)
            for j in range(nx):
                tmp[j] = row[j] + h * k3[j]
            _row_rhs(tmp, dx, k4)
            fine = True
            for j in range(nx):
                val = row[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                row[j] = val
                if not np.isfinite(val):
                    fine = False
            ok[s] = fine


@nb.njit(parallel=True, cache=True)
def _euler_step_batch(u, dx, h, scratch, ok):
    """One forward-Euler step for every row; scratch is (n_chunks, 5, nx)."""
    count, nx = u.shape
    n_chunks = scratch.shape[0]
    chunk = (count + n_chunks - 1) // n_chunks
    for c in nb.prange(n_chunks):
        k1 = scratch[c, 0]
        lo = c * chunk
        hi = min(count, lo + chunk)
        for s in range(lo, hi):
            row = u[s]
            _row_rhs(row, dx, k1)
            fine = True
            for j in range(nx):
                val = row[j] + h * k1[j]
                row[j] = val
                if not np.isfinite(val):
                    fine = False
            ok[s] = fine


def solve(
    u0: np.ndarray,
    grid: Grid1D,
    t_end: float,
    dt: float,
    method: str = "rk4",
) -> FieldState:
    """Advance u0 to t_end; the final step is shortened to land exactly.

    u0 may be a single field (nx,) or a batch (S, nx); rows evolve
    independently.  A CFL violation against dt <= 0.5 dx / max|u0| warns but
    does not abort.  NaN/Inf raises SolverFailureError with the step index
    (and the first offending batch row).
    """
    if method not in ("rk4", "euler"):
        raise SolverFailureError(f"unknown time integration method {method!r}")
    u = np.array(u0, dtype=float)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    if u.shape[-1] != grid.nx:
        raise SolverFailureError(
            f"initial field length {u.shape[-1]} does not match grid nx={grid.nx}"
        )
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    if umax > 0 and dt > CFL_LIMIT * grid.dx / umax:
        warnings.warn(
            f"dt={dt:g} exceeds CFL bound {CFL_LIMIT * grid.dx / umax:g}; continuing",
            stacklevel=2,
        )
    n_chunks = min(64, u.shape[0])
    scratch = np.empty((n_chunks, 5, grid.nx))
    ok = np.ones(u.shape[0], dtype=np.bool_)
    stepper = _rk4_step_batch if method == "rk4" else _euler_step_batch
    dx = grid.dx
    t = 0.0
    step = 0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        stepper(u, dx, h, scratch, ok)
        t += h
        step += 1
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise SolverFailureError(
                "non-finite field value", step=step, sample=None if single else bad
            )
    return FieldState(u[0] if single else u, float(t_end), grid)
