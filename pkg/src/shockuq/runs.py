"""Run orchestration: the pipelines behind the CLI subcommands.

Each pipeline writes a bundle of CSV files plus sidecars into the output
directory and reports wall-clock and CPU timings per phase.  On failure,
partially written outputs are removed.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import dbfe, gpc, stats, storage
from .chaos import sample_germ
from .config import RunConfig, serialize_config
from .gegenbauer import GegenbauerConfig, postprocess_ensemble
from .kle import solve_fredholm
from .mc import Ensemble, run_mc

CONFIDENCE_LEVEL = 0.9


@dataclass
class PhaseTimer:
    """Wall and CPU time per named phase, measured by monotonic clocks."""

    phases: dict = field(default_factory=dict)

    def measure(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.w0 = time.perf_counter()
                self.c0 = time.process_time()
                return self

            def __exit__(self, *exc):
                timer.phases[name] = (
                    time.perf_counter() - self.w0,
                    time.process_time() - self.c0,
                )
                return False

        return _Ctx()

    def report(self, quiet: bool = False) -> str:
        lines = [
            f"  {name}: wall {wall:.2f} s, cpu {cpu:.2f} s"
            for name, (wall, cpu) in self.phases.items()
        ]
        text = "\n".join(lines)
        if not quiet and text:
            print(text)
        return text

    def total_wall(self) -> float:
        return sum(wall for wall, _ in self.phases.values())


class OutputBundle:
    """Tracks files written by a pipeline so failures can clean up."""

    def __init__(self, directory: str, prefix: str):
        os.makedirs(directory, exist_ok=True)
        self.directory = directory
        self.prefix = prefix
        self.files: list[str] = []

    def path(self, name: str) -> str:
        p = os.path.join(self.directory, f"{self.prefix}_{name}")
        self.files.append(p)
        return p

    def cleanup(self):
        for p in self.files:
            for candidate in (p, p + ".meta.txt"):
                if os.path.exists(candidate):
                    os.unlink(candidate)


def _ensemble_stats(ens: Ensemble) -> stats.EnsembleStats:
    st = stats.moments(ens)
    st.conf_lo, st.conf_hi = stats.confidence_bound(ens, CONFIDENCE_LEVEL)
    st.conf_level = CONFIDENCE_LEVEL
    return st


def _with_cleanup(bundle: OutputBundle, fn):
    try:
        return fn()
    except Exception:
        bundle.cleanup()
        raise


def run_mc_pipeline(cfg: RunConfig, quiet: bool = False):
    """Monte Carlo reference: ensemble + stats CSVs."""
    bundle = OutputBundle(cfg.output.directory, cfg.output.prefix)

    def body():
        timer = PhaseTimer()
        grid = cfg.grid()
        with timer.measure("solve"):
            kl = solve_fredholm(cfg.kernel_spec(), grid, cfg.solver.n_modes)
            ens = run_mc(
                kl, cfg.ic_spec(), cfg.solver.s_mc, cfg.time.t_end, cfg.time.dt,
                cfg.solver.seed,
            )
        with timer.measure("stats"):
            st = _ensemble_stats(ens)
        with open(bundle.path("config.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        storage.write_ensemble_csv(bundle.path("mc_ensemble.csv"), ens)
        storage.write_stats_csv(bundle.path("mc_stats.csv"), grid.points, st)
        storage.write_kl_csvs(os.path.join(bundle.directory, bundle.prefix), kl)
        bundle.files.extend([
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenfunctions.csv"),
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenvalues.csv"),
        ])
        storage.write_timing_csv(
            bundle.path("timing.csv"),
            [("mc", *timer.phases.get("solve", (0, 0)))],
        )
        if not quiet:
            print(f"mc: S={ens.count} -> {bundle.directory}")
        timer.report(quiet)
        return ens, st, timer

    return _with_cleanup(bundle, body)


def run_dbfe_pipeline(cfg: RunConfig, quiet: bool = False, with_post: bool | None = None):
    """DBFE run: state snapshot, reconstructed ensemble, optional post-processing."""
    bundle = OutputBundle(cfg.output.directory, cfg.output.prefix)
    if with_post is None:
        with_post = cfg.post.enabled

    def body():
        timer = PhaseTimer()
        grid = cfg.grid()
        with timer.measure("solve"):
            kl = solve_fredholm(cfg.kernel_spec(), grid, cfg.solver.n_modes)
            basis = cfg.basis()
            run = dbfe.run_dbfe(
                kl, cfg.ic_spec(), basis, cfg.time.t_end, cfg.time.dt,
                cfg.solver.s_int, cfg.solver.seed_int,
                dissipation=cfg.solver.dissipation,
                boundary=cfg.solver.boundary,
                repair_orthonormality=cfg.solver.repair_orthonormality,
            )
            germ = sample_germ(cfg.solver.n_modes, cfg.solver.s_mc, cfg.solver.seed)
            recon = dbfe.reconstruct_ensemble(run.state, germ)
        post_result = None
        if with_post:
            with timer.measure("post-process"):
                gcfg = GegenbauerConfig(cfg.post.lambda_g, cfg.post.m_terms, cfg.post.n_quad)
                post_result = postprocess_ensemble(
                    run.state, germ, gcfg, cfg.post.margin,
                    projection=cfg.post.projection, n_colloc_1d=cfg.post.n_colloc,
                )
        with timer.measure("stats"):
            recon_stats = _ensemble_stats(recon)
            post_stats = _ensemble_stats(post_result.ensemble) if post_result else None

        with open(bundle.path("config.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        prefix_path = os.path.join(bundle.directory, f"{bundle.prefix}_dbfe")
        storage.write_state_csvs(prefix_path, run.state, {
            "method": "dbfe", "seed_int": cfg.solver.seed_int, "s_int": cfg.solver.s_int,
            "dt": cfg.time.dt, "dissipation": cfg.solver.dissipation,
        })
        bundle.files.extend([
            f"{prefix_path}_mean.csv", f"{prefix_path}_modes.csv",
            f"{prefix_path}_coeffs.csv", f"{prefix_path}_state.meta.txt",
        ])
        storage.write_kl_csvs(os.path.join(bundle.directory, bundle.prefix), kl)
        bundle.files.extend([
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenfunctions.csv"),
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenvalues.csv"),
        ])
        storage.write_ensemble_csv(bundle.path("dbfe_ensemble.csv"), recon)
        storage.write_stats_csv(bundle.path("dbfe_stats.csv"), grid.points, recon_stats)
        storage.write_mode_variance_csv(
            bundle.path("mode_variance.csv"), run.series_t, run.series_mode_variance
        )
        timing_rows = [("dbfe", *timer.phases.get("solve", (0, 0)))]
        if post_result is not None:
            storage.write_ensemble_csv(bundle.path("post_ensemble.csv"), post_result.ensemble)
            storage.write_stats_csv(bundle.path("post_stats.csv"), grid.points, post_stats)
            timing_rows.append(("dbfe_post", *timer.phases.get("post-process", (0, 0))))
        storage.write_timing_csv(bundle.path("timing.csv"), timing_rows)
        if not quiet:
            print(
                f"dbfe: N={cfg.solver.n_modes} steps={run.steps} "
                f"DO-residual={run.do_residual_max:.2e} ortho-drift={run.ortho_drift_max:.2e} "
                f"-> {bundle.directory}"
            )
        timer.report(quiet)
        return run, recon, post_result, timer

    return _with_cleanup(bundle, body)


def run_gpc_pipeline(cfg: RunConfig, quiet: bool = False):
    """Intrusive gPC run: coefficient fields, sampled ensemble, stats."""
    bundle = OutputBundle(cfg.output.directory, cfg.output.prefix)

    def body():
        timer = PhaseTimer()
        grid = cfg.grid()
        with timer.measure("solve"):
            kl = solve_fredholm(cfg.kernel_spec(), grid, cfg.solver.n_modes)
            basis = cfg.basis()
            state = gpc.run_gpc(
                kl, cfg.ic_spec(), basis, cfg.time.t_end, cfg.time.dt,
                seed=cfg.solver.seed_int,
            )
            germ = sample_germ(cfg.solver.n_modes, cfg.solver.s_mc, cfg.solver.seed)
            recon = gpc.reconstruct_ensemble(state, germ)
        with timer.measure("stats"):
            st = _ensemble_stats(recon)
        with open(bundle.path("config.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        x = grid.points
        storage.write_rows(
            bundle.path("gpc_coeff_fields.csv"),
            ["x"] + [f"uhat_{p + 1}" for p in range(state.u_hat.shape[0])],
            zip(x, *state.u_hat),
        )
        storage.write_ensemble_csv(bundle.path("gpc_ensemble.csv"), recon)
        storage.write_stats_csv(bundle.path("gpc_stats.csv"), x, st)
        storage.write_timing_csv(
            bundle.path("timing.csv"), [("gpc", *timer.phases.get("solve", (0, 0)))]
        )
        if not quiet:
            print(f"gpc: P={state.u_hat.shape[0]} -> {bundle.directory}")
        timer.report(quiet)
        return state, recon, st, timer

    return _with_cleanup(bundle, body)


def run_post_pipeline(cfg: RunConfig, quiet: bool = False):
    """DBFE + Gegenbauer post-processing only (post ensemble and stats)."""
    return run_dbfe_pipeline(cfg, quiet=quiet, with_post=True)


def run_compare_pipeline(cfg: RunConfig, quiet: bool = False):
    """MC reference vs DBFE (pre and post): stats per method plus L1 CSV."""
    bundle = OutputBundle(cfg.output.directory, cfg.output.prefix)

    def body():
        timer = PhaseTimer()
        grid = cfg.grid()
        with timer.measure("mc"):
            kl = solve_fredholm(cfg.kernel_spec(), grid, cfg.solver.n_modes)
            germ = sample_germ(cfg.solver.n_modes, cfg.solver.s_mc, cfg.solver.seed)
            mc_ens = run_mc(
                kl, cfg.ic_spec(), cfg.solver.s_mc, cfg.time.t_end, cfg.time.dt,
                cfg.solver.seed, germ=germ,
            )
        with timer.measure("dbfe"):
            basis = cfg.basis()
            run = dbfe.run_dbfe(
                kl, cfg.ic_spec(), basis, cfg.time.t_end, cfg.time.dt,
                cfg.solver.s_int, cfg.solver.seed_int,
                dissipation=cfg.solver.dissipation,
                boundary=cfg.solver.boundary,
            )
            recon = dbfe.reconstruct_ensemble(run.state, germ)
        post_result = None
        if cfg.post.enabled:
            with timer.measure("post-process"):
                gcfg = GegenbauerConfig(cfg.post.lambda_g, cfg.post.m_terms, cfg.post.n_quad)
                post_result = postprocess_ensemble(
                    run.state, germ, gcfg, cfg.post.margin,
                    projection=cfg.post.projection, n_colloc_1d=cfg.post.n_colloc,
                )
        with timer.measure("stats"):
            mc_stats = _ensemble_stats(mc_ens)
            l1_pre = stats.l1_error(mc_ens, recon)
            recon_stats = _ensemble_stats(recon)
            l1_post = None
            post_stats = None
            if post_result is not None:
                post_stats = _ensemble_stats(post_result.ensemble)
                l1_post = stats.l1_error(mc_ens, post_result.ensemble)

        with open(bundle.path("config.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        x = grid.points
        storage.write_ensemble_csv(bundle.path("mc_ensemble.csv"), mc_ens)
        storage.write_ensemble_csv(bundle.path("dbfe_ensemble.csv"), recon)
        storage.write_stats_csv(bundle.path("mc_stats.csv"), x, mc_stats)
        storage.write_stats_csv(bundle.path("dbfe_stats.csv"), x, recon_stats, l1=l1_pre)
        storage.write_mode_variance_csv(
            bundle.path("mode_variance.csv"), run.series_t, run.series_mode_variance
        )
        storage.write_kl_csvs(os.path.join(bundle.directory, bundle.prefix), kl)
        bundle.files.extend([
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenfunctions.csv"),
            os.path.join(bundle.directory, f"{bundle.prefix}_kl_eigenvalues.csv"),
        ])
        header = ["x", "l1_dbfe"]
        cols = [x, l1_pre]
        if post_result is not None:
            storage.write_ensemble_csv(bundle.path("post_ensemble.csv"), post_result.ensemble)
            storage.write_stats_csv(bundle.path("post_stats.csv"), x, post_stats, l1=l1_post)
            header.append("l1_post")
            cols.append(l1_post)
        storage.write_rows(bundle.path("l1.csv"), header, zip(*cols))
        rows = [
            ("mc", *timer.phases.get("mc", (0, 0))),
            ("dbfe", *timer.phases.get("dbfe", (0, 0))),
        ]
        if post_result is not None:
            rows.append(("dbfe_post", *timer.phases.get("post-process", (0, 0))))
        storage.write_timing_csv(bundle.path("timing.csv"), rows)
        if not quiet:
            print(f"compare: peak l1 pre={np.nanmax(l1_pre):.3e}"
                  + (f" post={np.nanmax(l1_post):.3e}" if l1_post is not None else "")
                  + f" -> {bundle.directory}")
        timer.report(quiet)
        return {
            "mc": mc_ens, "dbfe": recon, "post": post_result,
            "l1_pre": l1_pre, "l1_post": l1_post, "run": run, "timer": timer,
        }

    return _with_cleanup(bundle, body)


SWEEP_PARAMETERS = {
    "lambda_g": ("post.lambda_g", float),
    "M": ("post.m_terms", int),
    "sigma2": ("ic.kernel.sigma2", float),
    "N": ("solver.n_modes", int),
    "kernel": ("ic.kernel.kind", str),
}


def run_sweep_pipeline(cfg: RunConfig, parameter: str, values, quiet: bool = False):
    """Compare pipeline per parameter value plus a sweep summary CSV."""
    from .errors import ConfigError

    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"sweep parameter must be one of {sorted(SWEEP_PARAMETERS)}, got {parameter!r}"
        )
    key, cast = SWEEP_PARAMETERS[parameter]
    root = cfg.output.directory
    os.makedirs(root, exist_ok=True)
    summary = []
    results = []
    for value in values:
        sub = _clone_config(cfg)
        _set_key(sub, key, cast(value))
        sub.output.directory = os.path.join(root, f"{parameter}_{value}")
        t0 = time.perf_counter()
        result = run_compare_pipeline(sub, quiet=quiet)
        runtime = time.perf_counter() - t0
        pre_peak = float(np.nanmax(result["l1_pre"]))
        post_peak = float(np.nanmax(result["l1_post"])) if result["l1_post"] is not None else float("nan")
        summary.append((value, pre_peak, post_peak, runtime))
        results.append(result)
        if not quiet:
            print(f"sweep {parameter}={value}: pre={pre_peak:.3e} post={post_peak:.3e}")
    storage.write_sweep_csv(os.path.join(root, f"{cfg.output.prefix}_sweep_{parameter}.csv"), summary)
    return summary, results


def _clone_config(cfg: RunConfig) -> RunConfig:
    from .config import parse_config

    return parse_config(serialize_config(cfg))


def _set_key(cfg: RunConfig, dotted: str, value):
    from .config import apply_overrides

    apply_overrides(cfg, {dotted: str(value)})
