"""Ensemble statistics: pointwise moments, confidence bounds, windowed L1 error.

The relative L1 metric follows the two-adjoining-cells window convention:
at each grid point the sample-averaged absolute discrepancy is integrated
over [x_{j-1}, x_{j+1}] by trapezoid and divided by the same integral of
the reference magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .mc import Ensemble


@dataclass
class EnsembleStats:
    """Pointwise sample statistics of an ensemble."""

    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    zero_variance: np.ndarray
    conf_lo: np.ndarray | None = None
    conf_hi: np.ndarray | None = None
    conf_level: float | None = None


def moments(e: Ensemble) -> EnsembleStats:
    """First four pointwise moments.

    Variance is the unbiased sample variance; skewness m3/m2^(3/2) and raw
    kurtosis m4/m2^2 use biased central moments.  Points with zero variance
    report 0 for both shape statistics and are flagged.
    """
    u = e.fields
    count = u.shape[0]
    if count < 4:
        raise ContractViolationError(f"moments need at least 4 samples, got {count}")
    mean = u.mean(axis=0)
    d = u - mean[None, :]
    m2 = np.mean(d * d, axis=0)
    m3 = np.mean(d**3, axis=0)
    m4 = np.mean(d**4, axis=0)
    variance = m2 * count / (count - 1)
    zero = m2 <= 0.0
    safe_m2 = np.where(zero, 1.0, m2)
    skewness = np.where(zero, 0.0, m3 / safe_m2**1.5)
    kurtosis = np.where(zero, 0.0, m4 / safe_m2**2)
    return EnsembleStats(mean, variance, skewness, kurtosis, zero)


def confidence_bound(e: Ensemble, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise empirical quantile band at level q (e.g. 0.9 -> 5%..95%)."""
    if not 0.0 < q < 1.0:
        raise ContractViolationError(f"confidence level must be in (0, 1), got {q}")
    lo, hi = np.quantile(e.fields, [(1.0 - q) / 2.0, (1.0 + q) / 2.0], axis=0)
    return lo, hi


def _window_sum(values: np.ndarray, dx: float, window: int) -> np.ndarray:
    """Trapezoid integral over the window of `window` cells on each side.

    Windows are truncated at the domain ends (one-sided there).
    """
    nx = values.shape[-1]
    out = np.zeros_like(values, dtype=float)
    for j in range(nx):
        lo = max(j - window, 0)
        hi = min(j + window, nx - 1)
        w = np.full(hi - lo + 1, dx)
        w[0] *= 0.5
        w[-1] *= 0.5
        out[..., j] = values[..., lo : hi + 1] @ w
    return out


def l1_error(reference: Ensemble, approx: Ensemble, window: int = 1) -> np.ndarray:
    """Windowed relative L1 error field of `approx` against `reference`.

    Requires sample alignment (same seed and count) and a common grid.
    Points where the reference magnitude integrates to zero are returned as
    NaN (undefined).
    """
    if reference.grid != approx.grid:
        raise ContractViolationError("ensembles live on different grids")
    if reference.count != approx.count:
        raise ContractViolationError("ensembles have different sample counts")
    if reference.germ.seed != approx.germ.seed:
        raise ContractViolationError(
            f"ensembles are not sample-aligned: seeds {reference.germ.seed} != {approx.germ.seed}"
        )
    dx = reference.grid.dx
    num = _window_sum(np.mean(np.abs(reference.fields - approx.fields), axis=0), dx, window)
    den = _window_sum(np.mean(np.abs(reference.fields), axis=0), dx, window)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.nan)
    return out
