"""Figure rendering: every kind renders, re-renders byte-identically,
and schema violations name the missing column."""

import numpy as np
import pytest

import shockuq as sq
from shockuq import storage
from shockuq.chaos import GermEnsemble
from shockuq.errors import SchemaError
from shockuq.figures import FIGURE_KINDS, FigureSpec, render
from shockuq.mc import Ensemble
from shockuq.stats import confidence_bound, moments


@pytest.fixture(scope="module")
def csv_dir(tmp_path_factory):
    """Small synthetic bundle covering every figure input schema."""
    root = tmp_path_factory.mktemp("figcsv")
    rng = np.random.default_rng(5)
    grid = sq.Grid1D(-1.0, 1.0, 41)
    x = grid.points

    def ensemble(shift=0.0):
        fields = -np.arctan(4 * (x[None, :] - shift)) + 0.05 * rng.standard_normal((12, grid.nx))
        germ = GermEnsemble(rng.standard_normal((12, 2)), 9, np.arange(12))
        return Ensemble(fields, germ, grid, 1.0, {"seed": 9, "samples": 12, "t_end": 1.0})

    ens_a, ens_b, ens_c = ensemble(), ensemble(0.02), ensemble(-0.02)
    storage.write_ensemble_csv(root / "ens_a.csv", ens_a, sidecar=False)
    storage.write_ensemble_csv(root / "ens_b.csv", ens_b, sidecar=False)
    storage.write_ensemble_csv(root / "ens_c.csv", ens_c, sidecar=False)
    for name, ens in (("stats_a", ens_a), ("stats_b", ens_b)):
        st = moments(ens)
        st.conf_lo, st.conf_hi = confidence_bound(ens, 0.9)
        storage.write_stats_csv(root / f"{name}.csv", x, st, l1=np.abs(x) * 0.01)
    storage.write_rows(root / "l1pair.csv", ["x", "l1_dbfe", "l1_post"],
                        zip(x, 0.1 * np.exp(-x * x), 0.01 * np.exp(-x * x)))
    storage.write_rows(root / "mean_a.csv", ["x", "mean"], zip(x, -np.arctan(4 * x)))
    storage.write_rows(root / "mean_b.csv", ["x", "mean"], zip(x, -np.arctan(5 * x)))
    storage.write_rows(root / "modes_a.csv", ["x", "u_1", "u_2"], zip(x, np.sin(x), np.cos(x)))
    storage.write_rows(root / "modes_b.csv", ["x", "u_1", "u_2"], zip(x, np.sin(2 * x), np.cos(2 * x)))
    storage.write_rows(root / "eigvals.csv", ["i", "lambda"],
                        zip(range(1, 5), [0.3, 0.1, 0.04, 0.02]))
    storage.write_rows(root / "eigfuncs.csv", ["x", "u_1", "u_2", "u_3", "u_4"],
                        zip(x, np.sin(x), np.cos(x), np.sin(2 * x), np.cos(2 * x)))
    times = np.linspace(0.0, 1.0, 11)
    storage.write_mode_variance_csv(root / "modevar.csv", times,
                                    np.outer(times + 0.1, [1.0, 0.5, 0.2]))
    storage.write_timing_csv(root / "timing.csv", [("mc", 10.0, 18.0), ("dbfe", 3.0, 5.5)])
    storage.write_sweep_csv(root / "sweep.csv",
                            [(1.0, 0.3, 0.1, 5.0), (3.0, 0.3, 0.05, 5.0), (7.0, 0.3, 0.2, 5.0)])
    return root


FIGURE_INPUTS = {
    "samples": ["ens_a.csv", "ens_b.csv"],
    "eigen": ["eigfuncs.csv", "eigvals.csv"],
    "scheme": ["mean_a.csv", "mean_b.csv", "modes_a.csv", "modes_b.csv"],
    "l1": ["l1pair.csv"],
    "mode_variance": ["modevar.csv"],
    "confidence": ["stats_a.csv", "stats_b.csv"],
    "post_samples": ["ens_a.csv", "ens_b.csv", "ens_c.csv"],
    "moments": ["stats_a.csv", "stats_b.csv"],
    "timing": ["timing.csv"],
    "lambda_tol": ["sweep.csv"],
    "sigma2_error": ["sweep.csv"],
}


def test_every_kind_has_inputs():
    assert set(FIGURE_INPUTS) == set(FIGURE_KINDS)


@pytest.mark.parametrize("kind", sorted(FIGURE_KINDS))
def test_render_and_byte_identical_rerender(kind, csv_dir, tmp_path):
    inputs = [str(csv_dir / name) for name in FIGURE_INPUTS[kind]]
    out1 = tmp_path / f"{kind}_1.png"
    out2 = tmp_path / f"{kind}_2.png"
    render(FigureSpec(kind, inputs, str(out1)))
    render(FigureSpec(kind, inputs, str(out2)))
    data1 = out1.read_bytes()
    assert len(data1) > 1000
    assert data1 == out2.read_bytes()


def test_missing_column_named(csv_dir, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,value\n0.0,1.0\n1.0,2.0\n")
    with pytest.raises(SchemaError, match="var_1|t"):
        render(FigureSpec("mode_variance", [str(bad)], str(tmp_path / "o.png")))


def test_unknown_kind_rejected(csv_dir, tmp_path):
    with pytest.raises(SchemaError, match="unknown figure kind"):
        render(FigureSpec("sparkline", [str(csv_dir / "timing.csv")], str(tmp_path / "o.png")))


def test_rendering_does_not_mutate_inputs(csv_dir, tmp_path):
    path = csv_dir / "timing.csv"
    before = path.read_bytes()
    render(FigureSpec("timing", [str(path)], str(tmp_path / "t.png")))
    assert path.read_bytes() == before
