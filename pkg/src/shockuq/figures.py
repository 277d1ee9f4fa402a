"""Paper-style figures rendered from the pipeline's CSV outputs.

Every figure kind reads only CSV files (the CLI's external interface),
validates the expected columns, and writes a PNG at fixed size, DPI and
fonts with metadata stripped, so re-rendering the same inputs is
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import SchemaError
from .storage import read_csv_columns, read_ensemble_csv, require_columns

_RC = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "shockuq",
}

STATS_COLUMNS = ["x", "mean", "var", "skew", "kurt", "lo90", "hi90"]


@dataclass
class FigureSpec:
    """One figure: kind, input CSVs, output path, style options."""

    kind: str
    inputs: list[str]
    output: str
    options: dict = field(default_factory=dict)


def _require_inputs(spec: FigureSpec, minimum: int, maximum: int | None = None):
    n = len(spec.inputs)
    if n < minimum or (maximum is not None and n > maximum):
        rng = f"{minimum}" if maximum == minimum else f"{minimum}+" if maximum is None else f"{minimum}..{maximum}"
        raise SchemaError(f"figure {spec.kind!r} expects {rng} input CSVs, got {n}")


def _save(fig, spec: FigureSpec):
    fig.savefig(spec.output, metadata={"Software": None})
    plt.close(fig)


def _label(spec: FigureSpec, i: int, default: str) -> str:
    labels = spec.options.get("labels")
    if labels and i < len(labels):
        return labels[i]
    return default


def _fig(nrows=1, ncols=1, width=6.0, height=4.5):
    return plt.subplots(nrows, ncols, figsize=(width, height))


def render_samples(spec: FigureSpec):
    """Sample overlays: initial-condition samples and final-time samples."""
    _require_inputs(spec, 1, 2)
    fig, axes = _fig(1, len(spec.inputs), width=6.0 * len(spec.inputs))
    axes = np.atleast_1d(axes)
    titles = ("initial condition samples", "solution samples")
    for i, path in enumerate(spec.inputs):
        ens = read_ensemble_csv(path)
        x = ens.grid.points
        show = min(20, ens.count)
        for s in range(show):
            axes[i].plot(x, ens.fields[s], color="steelblue", alpha=0.35, lw=0.7)
        axes[i].plot(x, ens.fields.mean(axis=0), color="black", lw=1.8, label="mean")
        axes[i].set_xlabel("x")
        axes[i].set_ylabel("u")
        axes[i].set_title(_label(spec, i, titles[min(i, 1)]))
        axes[i].legend()
    _save(fig, spec)


def render_eigen(spec: FigureSpec):
    """Eigenvalue decay and the first four eigenfunctions."""
    _require_inputs(spec, 2, 2)
    funcs_path, vals_path = None, None
    for path in spec.inputs:
        table = read_csv_columns(path)
        if "lambda" in table:
            vals_path = path
        else:
            funcs_path = path
    if vals_path is None or funcs_path is None:
        raise SchemaError("eigen figure needs one eigenvalue CSV (column 'lambda') "
                          "and one eigenfunction CSV (columns x, u_1..)")
    vals = read_csv_columns(vals_path)
    require_columns(vals_path, vals, ["i", "lambda"])
    funcs = read_csv_columns(funcs_path)
    require_columns(funcs_path, funcs, ["x", "u_1"])
    fig, (ax1, ax2) = _fig(1, 2, width=12.0)
    ax1.semilogy(vals["i"], np.maximum(vals["lambda"], 1e-300), "o-")
    ax1.set_xlabel("mode index")
    ax1.set_ylabel("eigenvalue")
    ax1.set_title("covariance eigenvalues")
    for i in range(1, 5):
        key = f"u_{i}"
        if key in funcs:
            ax2.plot(funcs["x"], funcs[key], label=key)
    ax2.set_xlabel("x")
    ax2.set_ylabel("u_i(x, 0)")
    ax2.set_title("leading eigenfunctions")
    ax2.legend()
    _save(fig, spec)


def render_scheme(spec: FigureSpec):
    """Mean and first-eigenfunction comparison across flux variants."""
    _require_inputs(spec, 2)
    mean_tables, mode_tables = [], []
    for path in spec.inputs:
        table = read_csv_columns(path)
        if "mean" in table:
            require_columns(path, table, ["x", "mean"])
            mean_tables.append((path, table))
        elif "u_1" in table:
            mode_tables.append((path, table))
        else:
            raise SchemaError(f"{path}: missing column 'mean' (or 'u_1' for mode panels)")
    ncols = 2 if mode_tables else 1
    fig, axes = _fig(1, ncols, width=6.0 * ncols)
    axes = np.atleast_1d(axes)
    for i, (path, table) in enumerate(mean_tables):
        axes[0].plot(table["x"], table["mean"], label=_label(spec, i, f"scheme {i + 1}"))
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("mean")
    axes[0].set_title("mean field by scheme")
    axes[0].legend()
    if mode_tables:
        for i, (path, table) in enumerate(mode_tables):
            axes[1].plot(table["x"], table["u_1"], label=_label(spec, i, f"scheme {i + 1}"))
        axes[1].set_xlabel("x")
        axes[1].set_ylabel("u_1")
        axes[1].set_title("first eigenfunction by scheme")
        axes[1].legend()
    _save(fig, spec)


def render_l1(spec: FigureSpec):
    """Windowed relative L1 error curves, one per input CSV."""
    _require_inputs(spec, 1)
    fig, ax = _fig()
    for i, path in enumerate(spec.inputs):
        table = read_csv_columns(path)
        if "l1" in table:
            x, y = table["x"], table["l1"]
        elif "l1_dbfe" in table:
            x = table["x"]
            ax.semilogy(x, np.maximum(table["l1_dbfe"], 1e-300), label=_label(spec, i, "before post"))
            if "l1_post" in table:
                ax.semilogy(x, np.maximum(table["l1_post"], 1e-300), label=_label(spec, i + 1, "after post"))
            continue
        else:
            raise SchemaError(f"{path}: missing column 'l1'")
        ax.semilogy(x, np.maximum(y, 1e-300), label=_label(spec, i, f"run {i + 1}"))
    ax.set_xlabel("x")
    ax.set_ylabel("relative L1 error")
    ax.set_title("L1 error vs reference")
    ax.legend()
    _save(fig, spec)


def render_mode_variance(spec: FigureSpec):
    """Eigenmode variance evolution over time."""
    _require_inputs(spec, 1, 1)
    table = read_csv_columns(spec.inputs[0])
    require_columns(spec.inputs[0], table, ["t", "var_1"])
    fig, ax = _fig()
    for name in sorted(k for k in table if k.startswith("var_")):
        ax.semilogy(table["t"], np.maximum(table[name], 1e-300), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("mode variance")
    ax.set_title("eigenmode variance evolution")
    ax.legend()
    _save(fig, spec)


def render_confidence(spec: FigureSpec):
    """Confidence-bound overlays from stats CSVs (reference first)."""
    _require_inputs(spec, 1)
    fig, ax = _fig()
    styles = ["-", "--", "-.", ":"]
    for i, path in enumerate(spec.inputs):
        table = read_csv_columns(path)
        require_columns(path, table, STATS_COLUMNS)
        x = table["x"]
        style = styles[i % len(styles)]
        name = _label(spec, i, f"method {i + 1}")
        ax.plot(x, table["lo90"], style, color=f"C{i}", label=f"{name} 90% bound")
        ax.plot(x, table["hi90"], style, color=f"C{i}")
        ax.plot(x, table["mean"], style, color=f"C{i}", alpha=0.4, lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title("90% confidence bounds")
    ax.legend()
    _save(fig, spec)


def render_post_samples(spec: FigureSpec):
    """Per-sample comparison grid: reference vs raw vs post-processed."""
    _require_inputs(spec, 3, 3)
    ref = read_ensemble_csv(spec.inputs[0])
    raw = read_ensemble_csv(spec.inputs[1])
    post = read_ensemble_csv(spec.inputs[2])
    show = min(6, ref.count, raw.count, post.count)
    fig, axes = _fig(2, 3, width=12.0, height=7.0)
    x = ref.grid.points
    for s in range(show):
        ax = axes.flat[s]
        ax.plot(x, ref.fields[s], "k-", lw=1.0, label="reference")
        ax.plot(x, raw.fields[s], "C1--", lw=1.0, label="expansion")
        ax.plot(x, post.fields[s], "C0-", lw=1.0, label="post-processed")
        ax.set_title(f"sample {s + 1}")
        if s == 0:
            ax.legend(fontsize=7)
    for ax in axes.flat[show:]:
        ax.axis("off")
    _save(fig, spec)


def render_moments(spec: FigureSpec):
    """2 x 2 grid of mean, variance, skewness, kurtosis."""
    _require_inputs(spec, 1)
    fig, axes = _fig(2, 2, width=11.0, height=8.0)
    panels = [("mean", "mean"), ("var", "variance"), ("skew", "skewness"), ("kurt", "kurtosis")]
    for i, path in enumerate(spec.inputs):
        table = read_csv_columns(path)
        require_columns(path, table, STATS_COLUMNS)
        name = _label(spec, i, f"method {i + 1}")
        for ax, (col, title) in zip(axes.flat, panels):
            ax.plot(table["x"], table[col], label=name)
    for ax, (col, title) in zip(axes.flat, panels):
        ax.set_xlabel("x")
        ax.set_title(title)
        ax.legend(fontsize=7)
    _save(fig, spec)


def render_timing(spec: FigureSpec):
    """Bar chart of wall/CPU time per method."""
    _require_inputs(spec, 1)
    methods, walls, cpus = [], [], []
    for path in spec.inputs:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if header != ["method", "wall_s", "cpu_s"]:
                missing = set(["method", "wall_s", "cpu_s"]) - set(header)
                raise SchemaError(f"{path}: missing column {sorted(missing)[0]!r}")
            for line in fh:
                cells = line.strip().split(",")
                if len(cells) == 3:
                    methods.append(cells[0])
                    walls.append(float(cells[1]))
                    cpus.append(float(cells[2]))
    fig, ax = _fig()
    pos = np.arange(len(methods))
    ax.bar(pos - 0.2, walls, width=0.4, label="wall")
    ax.bar(pos + 0.2, cpus, width=0.4, label="cpu")
    ax.set_xticks(pos, methods, rotation=20)
    ax.set_ylabel("seconds")
    ax.set_title("computational cost")
    ax.legend()
    _save(fig, spec)


def render_lambda_tol(spec: FigureSpec):
    """Post-processing error against the Gegenbauer weight exponent."""
    _require_inputs(spec, 1)
    fig, ax = _fig()
    for i, path in enumerate(spec.inputs):
        table = read_csv_columns(path)
        require_columns(path, table, ["value", "peak_l1_post"])
        ax.semilogy(table["value"], np.maximum(table["peak_l1_post"], 1e-300), "o-",
                    label=_label(spec, i, f"sweep {i + 1}"))
    tol = float(spec.options.get("tol", 0.1))
    ax.axhline(tol, color="red", ls="--", lw=1.0, label=f"tolerance {tol}")
    ax.set_xlabel("Gegenbauer weight exponent")
    ax.set_ylabel("peak L1 after post-processing")
    ax.set_title("post-processing error vs weight exponent")
    ax.legend()
    _save(fig, spec)


def render_sigma2_error(spec: FigureSpec):
    """L1 error before/after post-processing as the variance grows."""
    _require_inputs(spec, 1, 1)
    table = read_csv_columns(spec.inputs[0])
    require_columns(spec.inputs[0], table, ["value", "peak_l1_pre", "peak_l1_post"])
    fig, ax = _fig()
    ax.semilogy(table["value"], np.maximum(table["peak_l1_pre"], 1e-300), "o-", label="before post")
    ax.semilogy(table["value"], np.maximum(table["peak_l1_post"], 1e-300), "s-", label="after post")
    ax.set_xlabel("variance sigma^2")
    ax.set_ylabel("peak relative L1 error")
    ax.set_title("error growth with input variance")
    ax.legend()
    _save(fig, spec)


FIGURE_KINDS = {
    "samples": render_samples,
    "eigen": render_eigen,
    "scheme": render_scheme,
    "l1": render_l1,
    "mode_variance": render_mode_variance,
    "confidence": render_confidence,
    "post_samples": render_post_samples,
    "moments": render_moments,
    "timing": render_timing,
    "lambda_tol": render_lambda_tol,
    "sigma2_error": render_sigma2_error,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if spec.kind not in FIGURE_KINDS:
        raise SchemaError(
            f"unknown figure kind {spec.kind!r}; expected one of {sorted(FIGURE_KINDS)}"
        )
    with plt.rc_context(_RC):
        FIGURE_KINDS[spec.kind](spec)
    return spec.output
