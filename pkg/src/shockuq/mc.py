"""Monte Carlo reference propagator.

Samples initial fields from the KL decomposition, advances every sample
with the deterministic solver (vectorized over the ensemble), and collects
the aligned ensemble.  Row s of the result always corresponds to germ
sample s; that alignment carries the pairing used by chaos projections and
the windowed L1 metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import burgers
from .chaos import GermEnsemble, sample_germ
from .errors import ContractViolationError, SolverFailureError
from .kernels import InitialConditionSpec
from .kle import KLDecomposition, sample_initial_fields
from .numerics import Grid1D


@dataclass
class Ensemble:
    """Solution values at the final time, one row per germ sample."""

    fields: np.ndarray
    germ: GermEnsemble
    grid: Grid1D
    t_final: float
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.fields.shape[0]


def run_mc(
    kl: KLDecomposition,
    ic: InitialConditionSpec,
    count: int,
    t_end: float,
    dt: float,
    seed: int,
    germ: GermEnsemble | None = None,
) -> Ensemble:
    """Propagate `count` sampled initial conditions to t_end.

    Deterministic given the seed; a pre-built germ ensemble may be supplied
    to share samples with another method.
    """
    if count < 2:
        raise ContractViolationError(f"Monte Carlo needs at least 2 samples, got {count}")
    if germ is None:
        germ = sample_germ(kl.n_modes, count, seed)
    elif germ.count != count or germ.dim != kl.n_modes:
        raise ContractViolationError("provided germ ensemble does not match count/n_modes")
    u0 = sample_initial_fields(kl, ic, germ.xi)
    try:
        result = burgers.solve(u0, kl.grid, t_end, dt)
    except SolverFailureError as exc:
        raise SolverFailureError(
            "Monte Carlo sample failed", step=exc.step, sample=exc.sample, phase="mc"
        ) from exc
    meta = {
        "method": "mc",
        "seed": int(germ.seed),
        "samples": int(count),
        "germ_dim": int(kl.n_modes),
        "dt": float(dt),
        "t_end": float(t_end),
        "kernel": ic.kernel.kind,
        "sigma2": float(ic.kernel.sigma2),
        "corr_len": float(ic.kernel.corr_len),
    }
    return Ensemble(result.u, germ, kl.grid, float(t_end), meta)
