"""End-to-end tests of the command-line driver: exit codes, files, determinism."""

import csv
import json
import math

import numpy as np
import pytest

from dbo_lab.cli import main

FAST_EVOLVE = ["--n", "64", "--dt", "0.01", "--T", "0.2", "--alpha", "1.5"]


def read_meta(path):
    """# key=value preamble as a dict (version tag line skipped)."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key] = value
    return meta


def read_rows(path):
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(tmp_path):
    assert main(["evolve", "--out", str(tmp_path), "--bogus", "1"]) == 1


def test_evolve_writes_decaying_trajectory(tmp_path):
    assert main(["evolve", "--out", str(tmp_path), *FAST_EVOLVE]) == 0
    path = tmp_path / "evolve.csv"
    with open(path, encoding="utf-8") as fh:
        assert fh.readline() == "# dbo-lab 0.1.0\n"
    rows = read_rows(path)
    assert len(rows) == 21
    l2 = [float(r["l2_norm"]) for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(l2, l2[1:]))
    assert float(rows[0]["t"]) == 0.0
    assert float(rows[-1]["t"]) == pytest.approx(0.2)
    assert all(float(r["dissipation_rate"]) <= 0.0 for r in rows)
    assert (tmp_path / "evolve.png").exists()


def test_evolve_metadata_records_resolved_settings(tmp_path):
    assert main(["evolve", "--out", str(tmp_path), *FAST_EVOLVE, "--seed", "9"]) == 0
    meta = read_meta(tmp_path / "evolve.csv")
    assert meta["alpha"] == "1.5"
    assert meta["seed"] == "9"
    assert meta["subcommand"] == "evolve"
    assert meta["u0"] == "gaussian"


def test_evolve_rejects_alpha_out_of_range(tmp_path, capsys):
    assert main(["evolve", "--out", str(tmp_path), "--alpha", "3"]) == 1
    assert "[0, 2]" in capsys.readouterr().err


def test_evolve_zero_preset_stays_zero(tmp_path):
    args = ["evolve", "--out", str(tmp_path), "--u0", "zero", "--n", "32", "--dt", "0.05", "--T", "0.2"]
    assert main(args) == 0
    rows = read_rows(tmp_path / "evolve.csv")
    assert all(float(r["l2_norm"]) == 0.0 for r in rows)
    assert all(float(r["hs_norm"]) == 0.0 for r in rows)


def test_evolve_cosine_preset_runs(tmp_path):
    args = [
        "evolve", "--out", str(tmp_path), "--u0", "cosine", "--k", "2",
        "--amp", "0.5", "--n", "64", "--dt", "0.01", "--T", "0.1",
    ]
    assert main(args) == 0
    rows = read_rows(tmp_path / "evolve.csv")
    assert float(rows[0]["l2_norm"]) > 0.0


def test_evolve_blow_up_exits_two(tmp_path, capsys):
    # undamped, large and narrow: the quadratic term wins and the ETD step
    # produces non-finite coefficients within a few steps
    args = [
        "evolve", "--out", str(tmp_path), "--alpha", "0.0", "--amp", "80",
        "--sigma", "0.05", "--n", "256", "--dt", "0.05", "--T", "2.0",
    ]
    assert main(args) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_picard_writes_residual_certificate(tmp_path):
    args = ["picard", "--out", str(tmp_path), "--n", "64", "--dt", "0.01", "--T", "0.2", "--amp", "0.2"]
    assert main(args) == 0
    meta = read_meta(tmp_path / "picard.csv")
    assert int(meta["iterations"]) >= 1
    # one more Duhamel application moves the fixed point by less than the
    # contraction allows from the stopping tolerance
    assert float(meta["residual"]) < 2.0 * 1e-10
    assert len(read_rows(tmp_path / "picard.csv")) == 21


def test_picard_divergence_exits_two(tmp_path, capsys):
    args = ["picard", "--out", str(tmp_path), "--amp", "30", "--n", "64", "--dt", "0.01", "--T", "0.25"]
    assert main(args) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_heat_slope_matches_prediction(tmp_path):
    assert main(["heat", "--out", str(tmp_path), "--alpha", "2", "--rho", "1", "--p", "2"]) == 0
    meta = read_meta(tmp_path / "heat.csv")
    assert float(meta["predicted_slope"]) == pytest.approx(-0.75)
    assert float(meta["measured_slope"]) == pytest.approx(-0.75, abs=0.02)
    assert len(read_rows(tmp_path / "heat.csv")) == 6
    assert (tmp_path / "heat.gp").exists()
    assert (tmp_path / "heat.png").exists()
    assert "heat.csv" in (tmp_path / "heat.gp").read_text()


def test_heat_invalid_alpha_exits_one(tmp_path):
    assert main(["heat", "--out", str(tmp_path), "--alpha", "0"]) == 1


def test_xnorm_plancherel_ratio_is_one(tmp_path):
    args = ["xnorm", "--out", str(tmp_path), "--check", "plancherel", "--trials", "3"]
    assert main(args) == 0
    rows = read_rows(tmp_path / "xnorm.csv")
    assert len(rows) == 3
    for row in rows:
        assert row["probe"] == "plancherel"
        assert float(row["ratio"]) == pytest.approx(1.0, abs=1e-6)


def test_xnorm_equivalence_within_band(tmp_path):
    args = ["xnorm", "--out", str(tmp_path), "--check", "equivalence", "--trials", "4", "--seed", "3"]
    assert main(args) == 0
    for row in read_rows(tmp_path / "xnorm.csv"):
        assert 1.0 / 3.0 <= float(row["ratio"]) <= 3.0


def test_xnorm_contract_factors_positive_and_increasing(tmp_path):
    assert main(["xnorm", "--out", str(tmp_path), "--check", "contract"]) == 0
    rows = read_rows(tmp_path / "xnorm.csv")
    thetas = [float(r["delta"]) for r in rows]
    nus = [float(r["ratio"]) for r in rows]
    assert thetas == [0.125, 0.25, 0.5]
    assert all(nu > 0.0 for nu in nus)
    assert nus == sorted(nus)


def test_xnorm_linear_ratio_bounded(tmp_path):
    args = [
        "xnorm", "--out", str(tmp_path), "--check", "linear",
        "--trials", "3", "--s", "0.5", "--alpha", "1.0",
    ]
    assert main(args) == 0
    for row in read_rows(tmp_path / "xnorm.csv"):
        ratio = float(row["ratio"])
        assert 0.0 < ratio < 50.0
        assert math.isnan(float(row["b"]))


def test_xnorm_bilinear_rows_carry_delta(tmp_path):
    args = [
        "xnorm", "--out", str(tmp_path), "--check", "bilinear",
        "--trials", "3", "--s", "0.25", "--delta", "0.2",
    ]
    assert main(args) == 0
    for row in read_rows(tmp_path / "xnorm.csv"):
        assert float(row["delta"]) == 0.2
        assert float(row["ratio"]) > 0.0


def test_xnorm_rejects_unknown_check(tmp_path):
    assert main(["xnorm", "--out", str(tmp_path), "--check", "bogus"]) == 1


def test_inflate_scan_outputs(tmp_path):
    args = [
        "inflate", "--out", str(tmp_path), "--variant", "second", "--alpha", "0.5",
        "--s", "-0.4", "--Nmin", "64", "--Nmax", "512", "--band_samples", "32",
    ]
    assert main(args) == 0
    rows = read_rows(tmp_path / "inflate.csv")
    assert [float(r["N"]) for r in rows] == [64.0, 128.0, 256.0, 512.0]
    assert all(r["variant"] == "second_low_alpha" for r in rows)
    fit = json.loads((tmp_path / "inflate_fit.json").read_text())
    assert sorted(fit) == ["intercept", "predicted_slope", "r_squared", "slope", "verdict"]
    assert fit["slope"] > 0.0
    assert fit["verdict"] == "inflation"
    assert "inflate.csv" in (tmp_path / "inflate.gp").read_text()
    assert (tmp_path / "inflate.png").exists()


def test_inflate_rejects_unknown_variant(tmp_path):
    assert main(["inflate", "--out", str(tmp_path), "--variant", "bogus"]) == 1


@pytest.mark.parametrize("bounds", [["--Nmin", "64", "--Nmax", "64"], ["--Nmin", "64"]])
def test_inflate_rejects_bad_schedule(tmp_path, bounds):
    args = ["inflate", "--out", str(tmp_path), "--variant", "second", "--alpha", "0.5", *bounds]
    assert main(args) == 1


def test_dyadic_vanishing_rows_are_zero(tmp_path):
    args = ["dyadic", "--out", str(tmp_path), "--regime", "vanish", "--samples", "3", "--trials", "2"]
    assert main(args) == 0
    rows = read_rows(tmp_path / "dyadic.csv")
    assert len(rows) == 3
    for row in rows:
        assert row["regime"] == "vanishing"
        assert float(row["lower_bound"]) == 0.0
        assert float(row["ratio"]) == 0.0


def test_dyadic_pm_sweep_within_ceiling(tmp_path):
    args = [
        "dyadic", "--out", str(tmp_path), "--regime", "pm", "--samples", "4",
        "--trials", "2", "--resolution", "32", "--seed", "7",
    ]
    assert main(args) == 0
    rows = read_rows(tmp_path / "dyadic.csv")
    assert all(float(r["lower_bound"]) > 0.0 for r in rows)
    assert all(float(r["ratio"]) <= 10.0 for r in rows)


def test_dyadic_ceiling_breach_exits_two(tmp_path, capsys):
    args = [
        "dyadic", "--out", str(tmp_path), "--regime", "pm", "--samples", "2",
        "--trials", "2", "--resolution", "32", "--ceiling", "0.1",
    ]
    assert main(args) == 2
    assert "exceeds ceiling" in capsys.readouterr().err


def test_dyadic_rejects_unknown_regime(tmp_path):
    assert main(["dyadic", "--out", str(tmp_path), "--regime", "bogus"]) == 1


def test_config_file_layered_under_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# smoothing settings\nalpha = 2.0\nrho=1.0\npoints=6\n")
    assert main(["heat", "--out", str(tmp_path), "--config", str(cfg), "--p", "2"]) == 0
    meta = read_meta(tmp_path / "heat.csv")
    assert meta["alpha"] == "2.0"
    assert meta["p"] == "2.0"


def test_config_file_flag_wins_over_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha=1.0\n")
    assert main(["heat", "--out", str(tmp_path), "--config", str(cfg), "--alpha", "2"]) == 0
    assert read_meta(tmp_path / "heat.csv")["alpha"] == "2.0"


@pytest.mark.parametrize("text", ["alpa=2.0\n", "alpha 2.0\n", "9lives=1\n"])
def test_config_file_rejects_bad_content(tmp_path, text, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["heat", "--out", str(tmp_path), "--config", str(cfg)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_missing_config_file_exits_one(tmp_path):
    assert main(["heat", "--out", str(tmp_path), "--config", str(tmp_path / "nope.cfg")]) == 1


def test_dyadic_csv_byte_identical_across_jobs(tmp_path):
    args = ["dyadic", "--regime", "pm", "--samples", "4", "--trials", "2", "--resolution", "32", "--seed", "7"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2), "--jobs", "2"]) == 0
    assert (out1 / "dyadic.csv").read_bytes() == (out2 / "dyadic.csv").read_bytes()


def test_xnorm_csv_byte_identical_across_reruns(tmp_path):
    args = ["xnorm", "--check", "equivalence", "--trials", "4", "--seed", "3"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2), "--jobs", "2"]) == 0
    assert (out1 / "xnorm.csv").read_bytes() == (out2 / "xnorm.csv").read_bytes()


def test_seed_changes_sampled_rows(tmp_path):
    args = ["dyadic", "--regime", "pp", "--samples", "2", "--trials", "2", "--resolution", "32"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(out1), "--seed", "1"]) == 0
    assert main([*args, "--out", str(out2), "--seed", "2"]) == 0
    rows1, rows2 = read_rows(out1 / "dyadic.csv"), read_rows(out2 / "dyadic.csv")
    assert [r["ratio"] for r in rows1] != [r["ratio"] for r in rows2]


def test_jobs_env_var_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("DBO_LAB_JOBS", "2")
    args = ["xnorm", "--out", str(tmp_path), "--check", "plancherel", "--trials", "2"]
    assert main(args) == 0
    monkeypatch.setenv("DBO_LAB_JOBS", "junk")
    assert main(args) == 1
    monkeypatch.setenv("DBO_LAB_JOBS", "0")
    assert main(args) == 1


def test_vanishing_estimates_skip_randomness(tmp_path):
    # identical files for different estimator seeds: the empty-support path
    # never draws a sample, so only the sampled specs depend on the seed
    args = ["dyadic", "--regime", "vanish", "--samples", "2", "--trials", "3"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(out1), "--seed", "11"]) == 0
    assert main([*args, "--out", str(out2), "--seed", "11"]) == 0
    assert (out1 / "dyadic.csv").read_bytes() == (out2 / "dyadic.csv").read_bytes()
