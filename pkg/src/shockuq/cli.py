"""Command-line driver.

Subcommands: mc, dbfe, gpc, post, compare, sweep, figures.  Runs are
configured by a flat key=value file (--config) with per-flag overrides;
all outputs are CSV files with plain-text sidecars.  The environment
variable UQ_THREADS caps the worker count.
"""

from __future__ import annotations

import os

# Keep the BLAS pool out of the compiled kernels' way; UQ_THREADS governs
# the worker count used by the kernels themselves (set before numpy loads).
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import argparse
import sys

from .config import RunConfig, apply_overrides, load_config, serialize_config, validate_config
from .errors import ConfigError, NumericFailureError, SchemaError, SolverFailureError
from .figures import FIGURE_KINDS, FigureSpec, render
from .runs import (
    run_compare_pipeline,
    run_dbfe_pipeline,
    run_gpc_pipeline,
    run_mc_pipeline,
    run_post_pipeline,
    run_sweep_pipeline,
)


def _apply_threads():
    threads = os.environ.get("UQ_THREADS")
    if not threads:
        return
    try:
        count = max(1, int(threads))
    except ValueError:
        raise ConfigError(f"UQ_THREADS must be an integer, got {threads!r}")
    import numba

    numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["solver.seed"] = str(args.seed)
    if getattr(args, "samples", None) is not None:
        overrides["solver.s_mc"] = str(args.samples)
    if getattr(args, "out", None) is not None:
        overrides["output.directory"] = args.out
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    apply_overrides(cfg, overrides)
    validate_config(cfg)
    return cfg


def _add_run_args(sub):
    sub.add_argument("--config", help="path to a key=value config file")
    sub.add_argument("--seed", type=int, help="override solver.seed")
    sub.add_argument("--samples", type=int, help="override solver.s_mc")
    sub.add_argument("--out", help="override output.directory")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override any config key (repeatable)")
    sub.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shockuq",
        description="Uncertainty propagation for 1-D shock-forming conservation laws",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("mc", "Monte Carlo reference ensemble"),
        ("dbfe", "bi-orthogonal spectral run (with optional post-processing)"),
        ("gpc", "intrusive polynomial-chaos baseline"),
        ("post", "bi-orthogonal run followed by Gegenbauer post-processing"),
        ("compare", "MC vs DBFE (pre/post) with stats and L1 CSVs"),
        ("sweep", "parameter sweep of the compare pipeline"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_run_args(sub)
        if name == "sweep":
            sub.add_argument("--parameter", required=True,
                             choices=["lambda_g", "M", "sigma2", "N", "kernel"])
            sub.add_argument("--values", required=True,
                             help="comma-separated parameter values")
    fig = subs.add_parser("figures", help="render a figure from CSV outputs")
    fig.add_argument("kind", choices=sorted(FIGURE_KINDS))
    fig.add_argument("--in", dest="inputs", required=True,
                     help="comma-separated input CSV paths")
    fig.add_argument("--out", required=True, help="output PNG path")
    fig.add_argument("--labels", help="comma-separated curve labels")
    fig.add_argument("--tol", type=float, help="tolerance line for lambda_tol")
    dump = subs.add_parser("config", help="print the default configuration")
    dump.add_argument("--config", help="round-trip an existing config file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads()
        if args.command == "config":
            cfg = load_config(args.config) if args.config else RunConfig()
            sys.stdout.write(serialize_config(cfg))
            return 0
        if args.command == "figures":
            options = {}
            if args.labels:
                options["labels"] = args.labels.split(",")
            if args.tol is not None:
                options["tol"] = args.tol
            spec = FigureSpec(args.kind, args.inputs.split(","), args.out, options)
            render(spec)
            print(f"wrote {args.out}")
            return 0
        cfg = _load_run_config(args)
        quiet = args.quiet
        if args.command == "mc":
            run_mc_pipeline(cfg, quiet=quiet)
        elif args.command == "dbfe":
            run_dbfe_pipeline(cfg, quiet=quiet)
        elif args.command == "gpc":
            run_gpc_pipeline(cfg, quiet=quiet)
        elif args.command == "post":
            run_post_pipeline(cfg, quiet=quiet)
        elif args.command == "compare":
            run_compare_pipeline(cfg, quiet=quiet)
        elif args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            run_sweep_pipeline(cfg, args.parameter, values, quiet=quiet)
        return 0
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverFailureError, NumericFailureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
