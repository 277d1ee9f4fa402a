"""Intrusive Galerkin polynomial-chaos baseline for stochastic Burgers.

Every chaos coefficient field is advanced in lockstep: the quadratic flux
is Galerkin-projected through the exact Hermite triple-product tensor, and
interface dissipation uses a single deterministic speed bounding the
stochastic local speed (sampled E[|u|] plus two standard deviations),
applied to every coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chaos import ChaosBasis, GermEnsemble, basis_matrix
from .errors import ContractViolationError, SolverFailureError
from .kernels import InitialConditionSpec, mean_initial
from .kle import KLDecomposition, initial_coefficients
from .mc import Ensemble
from .numerics import Grid1D


def _triple_1d(a: int, b: int, c: int) -> float:
    """Exact <He_a He_b He_c> for probabilists' Hermite polynomials."""
    total = a + b + c
    if total % 2:
        return 0.0
    s = total // 2
    if s < a or s < b or s < c:
        return 0.0
    return (
        math.factorial(a) * math.factorial(b) * math.factorial(c)
        / (math.factorial(s - a) * math.factorial(s - b) * math.factorial(s - c))
    )


def triple_products(basis: ChaosBasis) -> np.ndarray:
    """Tensor <psi_i psi_j psi_k> of the full basis, exact and symmetric."""
    order = basis.order
    table = np.empty((order + 1, order + 1, order + 1))
    for a in range(order + 1):
        for b in range(order + 1):
            for c in range(order + 1):
                table[a, b, c] = _triple_1d(a, b, c)
    idx = basis.index_map
    p = basis.size
    out = np.ones((p, p, p))
    for d in range(basis.germ_dim):
        md = idx[:, d]
        out *= table[md[:, None, None], md[None, :, None], md[None, None, :]]
    return out


@dataclass
class GPCState:
    """Chaos coefficient fields, one row per basis function."""

    u_hat: np.ndarray
    basis: ChaosBasis
    t: float
    grid: Grid1D
    bc: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.bc is None:
            self.bc = self.u_hat[:, [0, -1]].copy()


def init_state(kl: KLDecomposition, ic: InitialConditionSpec, basis: ChaosBasis) -> GPCState:
    """Exact chaos representation of the (linear-in-germ) initial field."""
    mean = mean_initial(ic, kl.grid.points)
    if ic.scaling == "full":
        mean = ic.s * mean
    u_hat = np.zeros((basis.size, kl.grid.nx))
    u_hat[0] = mean
    amps = ic.s * initial_coefficients(kl, basis, gaussian=True)
    for i in range(kl.n_modes):
        u_hat[basis.linear_index(i + 1) - 1] = amps[i, basis.linear_index(i + 1) - 1] * kl.eigenfunctions[i]
    return GPCState(u_hat, basis, 0.0, kl.grid)


def _galerkin_flux(u_hat: np.ndarray, tensor_over_norms: np.ndarray) -> np.ndarray:
    """Chaos coefficients of u^2/2 at every grid point: (P, nx)."""
    outer = np.einsum("ix,jx->ijx", u_hat, u_hat)
    return 0.5 * np.einsum("ijk,ijx->kx", tensor_over_norms, outer)


def speed_bound(state: GPCState, psi_rec: np.ndarray) -> np.ndarray:
    """Deterministic dissipation speed per point: sampled E[|u|] + 2 std.

    A single robust bound on the stochastic local speed, applied to every
    coefficient field.
    """
    samples = psi_rec @ state.u_hat
    return np.abs(samples).mean(axis=0) + 2.0 * samples.std(axis=0)


def gpc_rhs(u_hat: np.ndarray, a_iface: np.ndarray, tensor_over_norms: np.ndarray, dx: float) -> np.ndarray:
    """Flux-difference derivative of every coefficient field; endpoints frozen."""
    g = _galerkin_flux(u_hat, tensor_over_norms)
    f_iface = 0.5 * (g[:, :-1] + g[:, 1:]) - 0.5 * a_iface[None, :] * (u_hat[:, 1:] - u_hat[:, :-1])
    out = np.zeros_like(u_hat)
    out[:, 1:-1] = -(f_iface[:, 1:] - f_iface[:, :-1]) / dx
    return out


def gpc_step(
    state: GPCState,
    dt: float,
    psi_rec: np.ndarray,
    tensor_over_norms: np.ndarray,
) -> GPCState:
    """One RK4 step; the dissipation speed is refreshed at every stage."""
    if dt <= 0:
        raise ContractViolationError(f"dt must be positive, got {dt}")
    dx = state.grid.dx

    def stage_rhs(u_stage):
        samples = psi_rec @ u_stage
        a_pt = np.abs(samples).mean(axis=0) + 2.0 * samples.std(axis=0)
        return gpc_rhs(u_stage, np.maximum(a_pt[:-1], a_pt[1:]), tensor_over_norms, dx)

    u = state.u_hat
    k1 = stage_rhs(u)
    k2 = stage_rhs(u + 0.5 * dt * k1)
    k3 = stage_rhs(u + 0.5 * dt * k2)
    k4 = stage_rhs(u + dt * k3)
    u_new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(u_new).all():
        raise SolverFailureError("non-finite gPC coefficient field", phase="gpc")
    u_new[:, 0] = state.bc[:, 0]
    u_new[:, -1] = state.bc[:, 1]
    return GPCState(u_new, state.basis, state.t + dt, state.grid, state.bc)


def run_gpc(
    kl: KLDecomposition,
    ic: InitialConditionSpec,
    basis: ChaosBasis,
    t_end: float,
    dt: float,
    s_speed: int = 2000,
    seed: int = 0,
    germ_speed: GermEnsemble | None = None,
) -> GPCState:
    """Advance the Galerkin system to t_end."""
    from .chaos import sample_germ

    state = init_state(kl, ic, basis)
    if germ_speed is None:
        germ_speed = sample_germ(basis.germ_dim, s_speed, seed)
    psi_rec = basis_matrix(basis, germ_speed.xi)
    tensor = triple_products(basis) / basis.norms[None, None, :]
    t = 0.0
    step_idx = 0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        try:
            state = gpc_step(state, h, psi_rec, tensor)
        except SolverFailureError as exc:
            raise SolverFailureError("gPC step failed", step=step_idx + 1, phase="gpc") from exc
        t = state.t
        step_idx += 1
    return state


def reconstruct_ensemble(state: GPCState, germ: GermEnsemble) -> Ensemble:
    """Evaluate the chaos expansion at every germ sample."""
    psi = basis_matrix(state.basis, germ.xi)
    fields = psi @ state.u_hat
    meta = {
        "method": "gpc",
        "seed": int(germ.seed),
        "samples": int(germ.count),
        "germ_dim": int(germ.dim),
        "t_end": float(state.t),
    }
    return Ensemble(fields, germ, state.grid, float(state.t), meta)
