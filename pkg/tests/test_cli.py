import json
import os

import numpy as np
import pytest

from ma2d import cli
from ma2d.errors import ConfigInvalid

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def write_config(tmp_path, **fields):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(fields))
    return str(path)


def test_validate_alpha_out_of_range(tmp_path):
    path = write_config(tmp_path, experiment="growth", alpha=0.25)
    violations = cli.validate_config(path)
    assert any("alpha" in v and "0.25" in v for v in violations)


def test_validate_missing_seed_for_doubling(tmp_path):
    path = write_config(tmp_path, experiment="doubling", rhs="dual_translator")
    violations = cli.validate_config(path)
    assert any(v.startswith("/seed") for v in violations)


def test_validate_unknown_field(tmp_path):
    path = write_config(tmp_path, experiment="growth", bogus=1)
    assert any("bogus" in v for v in cli.validate_config(path))


def test_shipped_configs_valid():
    for name in os.listdir(CONFIGS):
        assert cli.validate_config(os.path.join(CONFIGS, name)) == []


def test_run_growth_report_deterministic(tmp_path):
    out = tmp_path / "a"
    cfg = cli.ExperimentConfig(
        experiment="growth", alpha=0.125, source="oracle-dual",
        rmin=16.0, rmax=64.0, n_circles=5, outdir=str(out),
    )
    assert cli.run(cfg)["pass"]
    first = (out / "report.json").read_bytes()
    assert cli.run(cfg)["pass"]
    second = (out / "report.json").read_bytes()
    assert first == second
    assert (out / "growth.csv").exists() and (out / "growth.dat").exists()


def test_run_doubling_constant_pass(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="doubling", rhs="constant", radius=5.0, n_samples=150,
        seed=3, outdir=str(tmp_path / "d"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]
    assert rep["outputs"]["estimate"] == 4.0


def test_csv_round_trip(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="growth", alpha=0.125, source="oracle-dual",
        rmin=16.0, rmax=64.0, n_circles=5, outdir=str(tmp_path / "g"),
    )
    cli.run(cfg)
    header, rows = cli.read_table(str(tmp_path / "g" / "growth.csv"))
    assert header == ["r", "min_value", "max_value"]
    assert len(rows) == 5
    assert rows[0][0] == 16.0


def test_main_exit_codes(tmp_path):
    # pass -> 0
    rc = cli.main([
        "growth", "--alpha", "0.125", "--source", "oracle-dual",
        "--rmin", "16", "--rmax", "64", "--outdir", str(tmp_path / "ok"),
    ])
    assert rc == 0
    # config error -> 2
    bad = write_config(tmp_path, experiment="growth", alpha=0.9)
    rc = cli.main(["growth", "--config", bad, "--outdir", str(tmp_path / "bad")])
    assert rc == 2
    # validate subcommand
    assert cli.main(["validate", bad]) == 2
    good = write_config(tmp_path, experiment="growth", alpha=0.125, rmax=64.0)
    assert cli.main(["validate", good]) == 0


def test_verdict_failure_exit_code(tmp_path):
    path = write_config(
        tmp_path, experiment="growth", alpha=0.125, source="oracle-dual",
        rmin=16.0, rmax=64.0, slope_tolerance=1e-9, outdir=str(tmp_path / "v"),
    )
    rc = cli.main(["growth", "--config", path])
    assert rc == 1


def test_every_verdict_cites_tolerance(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="growth", alpha=0.125, source="oracle-dual",
        rmin=16.0, rmax=64.0, outdir=str(tmp_path / "t"),
    )
    rep = cli.run(cfg)
    for v in rep["verdicts"]:
        assert {"name", "measured", "expected", "tolerance", "pass"} <= set(v)


def test_run_sections_quadratic(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="sections", source="quadratic", levels=[1.0, 2.0, 4.0, 8.0],
        outdir=str(tmp_path / "s"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]
    header, rows = cli.read_table(str(tmp_path / "s" / "sections.csv"))
    assert header == ["t", "area", "mass", "r", "ecc", "k0", "A11", "A12", "A21", "A22"]
    k0 = [r[5] for r in rows]
    assert max(k0) / min(k0) < 1.001


def test_run_cascade_separable(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="cascade", source="separable", alpha=0.125,
        levels=[float(2**k) for k in range(8)], outdir=str(tmp_path / "c"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]


def test_run_verify_dual_small(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="verify-dual", alpha=0.125, radius=2.0, h=0.25, tol=1e-5,
        outdir=str(tmp_path / "vd"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]
    assert (tmp_path / "vd" / "solution.gfn").exists()
    header, rows = cli.read_table(str(tmp_path / "vd" / "dual_identity.csv"))
    assert header == ["r_lo", "r_hi", "weighted_mass", "area", "deviation"]
    assert all(r[4] < 0.05 for r in rows)


def test_run_verify_translator_small(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="verify-translator", alpha=0.125, radius=0.8, h=0.05,
        outdir=str(tmp_path / "vt"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]


def test_run_sections_solved_source(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="sections", source="solve", alpha=0.125, radius=2.0, h=0.25,
        tol=1e-3, levels=[0.25, 0.5, 1.0, 2.0], outdir=str(tmp_path / "ss"),
    )
    rep = cli.run(cfg)
    assert rep["pass"]


def test_run_oracle_profile(tmp_path):
    cfg = cli.ExperimentConfig(
        experiment="oracle", source="oracle-dual", alpha=0.125,
        rmin=16.0, rmax=64.0, outdir=str(tmp_path / "o"),
    )
    rep = cli.run(cfg)
    header, rows = cli.read_table(str(tmp_path / "o" / "profile.csv"))
    assert header == ["r", "slope", "value"]
    assert len(rows) == 64
