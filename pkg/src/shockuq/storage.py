"""CSV persistence with plain-text metadata sidecars.

All numeric values are written in shortest round-trip decimal form, so a
run with a fixed seed produces byte-identical payload rows; timestamps
live only in the sidecars.
"""

from __future__ import annotations

import os
import time

import numpy as np

from .chaos import GermEnsemble
from .errors import SchemaError
from .mc import Ensemble
from .numerics import Grid1D


def _fmt(value) -> str:
    return repr(float(value))


def write_rows(path, header_cells, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header_cells) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_sidecar(path, meta: dict, timestamp: bool = True):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"{key}={meta[key]}\n")
        if timestamp:
            fh.write(f"written_at={time.strftime('%Y-%m-%dT%H:%M:%S')}\n")


def read_sidecar(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                out[key] = value
    return out


def write_ensemble_csv(path, ensemble: Ensemble, sidecar: bool = True):
    """Header row carries the grid coordinates; one row per sample."""
    x = ensemble.grid.points
    write_rows(path, [_fmt(v) for v in x], ensemble.fields)
    if sidecar:
        write_sidecar(str(path) + ".meta.txt", ensemble.meta)


def read_ensemble_csv(path, germ: GermEnsemble | None = None) -> Ensemble:
    data = np.loadtxt(path, delimiter=",")
    x, fields = data[0], data[1:]
    grid = Grid1D(float(x[0]), float(x[-1]), x.size)
    meta = {}
    sidecar = str(path) + ".meta.txt"
    if os.path.exists(sidecar):
        meta = read_sidecar(sidecar)
    if germ is None:
        seed = int(meta.get("seed", -1))
        dim = int(meta.get("germ_dim", 1))
        germ = GermEnsemble(np.zeros((fields.shape[0], dim)), seed, np.arange(fields.shape[0]))
    t_final = float(meta.get("t_end", "nan"))
    return Ensemble(fields, germ, grid, t_final, meta)


def write_stats_csv(path, x, stats, l1=None):
    """Columns: x, mean, var, skew, kurt, lo90, hi90 and optionally l1."""
    header = ["x", "mean", "var", "skew", "kurt", "lo90", "hi90"]
    cols = [x, stats.mean, stats.variance, stats.skewness, stats.kurtosis,
            stats.conf_lo, stats.conf_hi]
    if l1 is not None:
        header.append("l1")
        cols.append(l1)
    write_rows(path, header, zip(*cols))


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Read a named-column CSV into a dict of arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def require_columns(path, table: dict, names) -> None:
    for name in names:
        if name not in table:
            raise SchemaError(f"{path}: missing column {name!r}")


def write_state_csvs(prefix, state, meta: dict):
    """Mean, mode, and coefficient snapshots plus a metadata sidecar."""
    x = state.grid.points
    write_rows(f"{prefix}_mean.csv", ["x", "mean"], zip(x, state.mean))
    n = state.modes.shape[0]
    write_rows(
        f"{prefix}_modes.csv",
        ["x"] + [f"u_{i + 1}" for i in range(n)],
        zip(x, *state.modes),
    )
    write_rows(
        f"{prefix}_coeffs.csv",
        ["mode"] + [f"p{p + 1}" for p in range(state.coeffs.shape[1])],
        [(i + 1, *state.coeffs[i]) for i in range(n)],
    )
    info = dict(meta)
    info.update(n_modes=n, chaos_size=state.coeffs.shape[1], t=float(state.t))
    write_sidecar(f"{prefix}_state.meta.txt", info)


def write_kl_csvs(prefix, kl):
    x = kl.grid.points
    write_rows(
        f"{prefix}_kl_eigenfunctions.csv",
        ["x"] + [f"u_{i + 1}" for i in range(kl.n_modes)],
        zip(x, *kl.eigenfunctions),
    )
    write_rows(
        f"{prefix}_kl_eigenvalues.csv",
        ["i", "lambda"],
        zip(range(1, kl.n_modes + 1), kl.eigenvalues),
    )


def write_mode_variance_csv(path, times, variances):
    n = variances.shape[1]
    write_rows(path, ["t"] + [f"var_{i + 1}" for i in range(n)],
                zip(times, *variances.T))


def write_timing_csv(path, rows):
    """rows: iterable of (method, wall_seconds, cpu_seconds)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("method,wall_s,cpu_s\n")
        for method, wall, cpu in rows:
            fh.write(f"{method},{_fmt(wall)},{_fmt(cpu)}\n")


def write_sweep_csv(path, rows):
    """rows: iterable of (value, peak_l1_pre, peak_l1_post, runtime)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value,peak_l1_pre,peak_l1_post,runtime_s\n")
        for value, pre, post, runtime in rows:
            fh.write(f"{value},{_fmt(pre)},{_fmt(post)},{_fmt(runtime)}\n")
