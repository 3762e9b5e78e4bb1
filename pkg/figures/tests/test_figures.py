import os
from pathlib import Path

import numpy as np
import pytest

from cheaptalk_figures import render, schemas
from cheaptalk_figures.heatmap import main as heatmap_main
from cheaptalk_figures.histogram import main as histogram_main
from cheaptalk_figures.ratio_bars import main as ratio_main
from cheaptalk_figures.sweep_lines import main as sweep_main

RUNS_HEADER = "seed,converged,steps,welfare,sender_payoff,receiver_payoff,connected,msfr,saps,cycle_count,error"


@pytest.fixture
def batch_dir(tmp_path):
    """A batch directory shaped like the no-bias acceptance output."""
    rng = np.random.default_rng(0)
    out = tmp_path / "batch"
    out.mkdir()
    welfare = 0.979 + rng.random(50) * (0.9995 - 0.979)
    lines = [RUNS_HEADER]
    for i, w in enumerate(welfare):
        pay = float(w * 0.09 - 0.09)
        lines.append(f"{1000+i},1,9000000,{float(w)!r},{pay!r},{pay!r},1,1,1,0,")
    (out / "runs.csv").write_text("\n".join(lines) + "\n")
    k = 21
    mu = np.zeros((k, k))
    pos = 0
    for n in (4, 3, 2, 1, 1, 1, 2, 3, 4):
        mu[pos : pos + n, pos] = 1.0
        pos += n
    np.savetxt(out / "median_policy.csv", mu, delimiter=",", fmt="%.17g")
    return out


class TestSchemas:
    def test_matrix_round_trip(self, tmp_path):
        mat = np.random.default_rng(1).random((4, 4))
        p = tmp_path / "m.csv"
        np.savetxt(p, mat, delimiter=",", fmt="%.17g")
        assert np.array_equal(schemas.read_matrix(p), mat)

    def test_matrix_rejects_nonsquare(self, tmp_path):
        p = tmp_path / "m.csv"
        np.savetxt(p, np.ones((2, 3)), delimiter=",")
        with pytest.raises(schemas.SchemaError, match="square"):
            schemas.read_matrix(p)

    def test_runs_missing_column_named(self, tmp_path):
        p = tmp_path / "runs.csv"
        p.write_text("seed,converged,steps\n1,1,2\n")
        with pytest.raises(schemas.SchemaError, match="welfare"):
            schemas.read_runs(p)

    def test_bad_value_named(self, tmp_path):
        p = tmp_path / "runs.csv"
        p.write_text(RUNS_HEADER + "\n1,1,10,not_a_number,0,0,1,1,1,0,\n")
        with pytest.raises(schemas.SchemaError, match="welfare"):
            schemas.read_runs(p)

    def test_inputs_not_mutated(self, batch_dir):
        before = (batch_dir / "runs.csv").read_bytes()
        schemas.read_runs(batch_dir / "runs.csv")
        assert (batch_dir / "runs.csv").read_bytes() == before


class TestHeatmap:
    def test_identity_policy_diagonal_band(self, tmp_path):
        k = 8
        p = tmp_path / "pol.csv"
        np.savetxt(p, np.eye(k), delimiter=",", fmt="%.17g")
        assert heatmap_main(["--input", str(p), "--out", str(tmp_path / "h.png")]) == 0
        fig, data = render.heatmap(schemas.read_matrix(p))
        assert np.array_equal(data, np.eye(k))

    def test_round_trip_matrix(self, tmp_path):
        mat = np.random.default_rng(2).random((5, 5))
        mat /= mat.sum(axis=1, keepdims=True)
        p = tmp_path / "pol.csv"
        np.savetxt(p, mat, delimiter=",", fmt="%.17g")
        _, data = render.heatmap(schemas.read_matrix(p))
        assert np.array_equal(data, mat)

    def test_schema_error_exit_2(self, tmp_path, capsys):
        p = tmp_path / "pol.csv"
        p.write_text("a,b\n1,2\n")
        assert heatmap_main(["--input", str(p), "--out", str(tmp_path / "x.png")]) == 2


class TestHistogram:
    def test_mass_stays_in_range(self, batch_dir, tmp_path):
        rows = schemas.read_runs(batch_dir / "runs.csv")
        welfare = np.array([r["welfare"] for r in rows])
        _, (edges, counts) = render.histogram(welfare, bins=30)
        assert np.all(welfare >= 0.979) and np.all(welfare < 1.0)
        assert edges[0] >= 0.979 and edges[-1] < 1.0
        populated = counts > 0
        assert np.all(edges[:-1][populated] >= 0.979)
        assert counts.sum() == 50

    def test_cli(self, batch_dir, tmp_path):
        out = tmp_path / "hist.png"
        rc = histogram_main(["--input", str(batch_dir / "runs.csv"), "--out", str(out), "--title", "welfare"])
        assert rc == 0 and out.exists()


class TestRatioAndSweep:
    def test_ratio_bars(self, tmp_path):
        p = tmp_path / "dn.csv"
        p.write_text(
            "b,role,u_run,u_best_pbe,ratio\n"
            "0.1,sender,-0.02,-0.035,0.43\n0.1,receiver,-0.01,-0.025,0.6\n"
            "0.2,sender,-0.08,-0.098,0.18\n0.2,receiver,-0.04,-0.058,0.31\n"
        )
        out = tmp_path / "dn.png"
        assert ratio_main(["--input", str(p), "--out", str(out)]) == 0
        _, series = render.ratio_bars(schemas.read_ratios(p))
        assert series["sender"][0] == pytest.approx((-0.02 + 0.035) / 0.035)

    def test_sweep_lines(self, tmp_path):
        p = tmp_path / "sweep.csv"
        p.write_text(
            "gamma,b,payoff,rescaled\n"
            "0.001,0.1,-0.02,1.0\n0.0001,0.1,-0.03,0.0\n"
            "0.001,0.2,-0.08,1.0\n0.0001,0.2,-0.09,0.0\n"
        )
        out = tmp_path / "sweep.png"
        assert sweep_main(["--input", str(p), "--out", str(out)]) == 0
        _, series = render.sweep_lines(schemas.read_sweep(p))
        assert series[0.1][0] == sorted(series[0.1][0])


class TestCriterion13:
    """Figure regeneration from a criterion-4-shaped batch directory."""

    def test_histogram_and_median_heatmap(self, batch_dir, tmp_path):
        hist_out = tmp_path / "welfare_hist.png"
        heat_out = tmp_path / "median_policy.png"
        assert histogram_main(["--input", str(batch_dir / "runs.csv"), "--out", str(hist_out)]) == 0
        assert heatmap_main(["--input", str(batch_dir / "median_policy.csv"), "--out", str(heat_out)]) == 0
        rows = schemas.read_runs(batch_dir / "runs.csv")
        welfare = np.array([r["welfare"] for r in rows])
        assert np.all((welfare >= 0.979) & (welfare < 1.0))

    def test_renders_deterministic(self, batch_dir, tmp_path):
        outs = []
        for tag in ("a", "b"):
            hist_out = tmp_path / f"hist_{tag}.png"
            heat_out = tmp_path / f"heat_{tag}.png"
            histogram_main(["--input", str(batch_dir / "runs.csv"), "--out", str(hist_out)])
            heatmap_main(["--input", str(batch_dir / "median_policy.csv"), "--out", str(heat_out)])
            outs.append((hist_out.read_bytes(), heat_out.read_bytes()))
        assert outs[0][0] == outs[1][0]
        assert outs[0][1] == outs[1][1]

    def test_real_acceptance_batch_if_present(self, tmp_path):
        real = Path(__file__).resolve().parents[2] / "tests" / "_cache" / "nobias_babbling"
        if not (real / "runs.csv").exists():
            pytest.skip("primary acceptance batch not materialized")
        rows = schemas.read_runs(real / "runs.csv")
        conv_welfare = np.array([r["welfare"] for r in rows if r["converged"]])
        assert np.all((conv_welfare >= 0.979) & (conv_welfare < 1.0))
        out = tmp_path / "real_hist.png"
        assert histogram_main(["--input", str(real / "runs.csv"), "--out", str(out)]) == 0
        assert heatmap_main(["--input", str(real / "median_policy.csv"), "--out", str(tmp_path / "real_heat.png")]) == 0
