import math
from pathlib import Path

import numpy as np
import pytest

from dirac_cell.cli import main
from dirac_cell.config import load_config
from dirac_cell.errors import ConfigError

FAST = ["--h", "0.8", "--dt", "0.1", "--t-end", "0.3"]


def run_cli(args):
    return main([str(a) for a in args])


class TestConfig:
    def test_defaults_match_parameter_table(self):
        cfg = load_config()
        assert cfg.d == 1.0
        assert cfg.phi == 1.0
        assert cfg.a == 1.0
        assert cfg.center == (5.0, 5.0)
        assert cfg.radius == 0.25
        assert cfg.l == 10.0
        assert cfg.h == 0.2495
        assert cfg.dt == 0.04
        assert cfg.eps == 0.02
        assert cfg.t_end == 40.0
        assert cfg.nq == 64
        assert cfg.coupling == "implicit"

    def test_flag_override(self):
        cfg = load_config(overrides={"d": 10.0})
        assert cfg.d == 10.0
        assert cfg.phi == 1.0

    def test_negative_uptake_rejected(self):
        with pytest.raises(ConfigError, match="a:"):
            load_config(overrides={"a": -1.0})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            load_config(overrides={"banana": 1.0})

    def test_toml_file_and_precedence(self, tmp_path):
        cfg_file = tmp_path / "run.toml"
        cfg_file.write_text('d = 5.0\nradius = 0.5\ncenter = [4.0, 6.0]\n')
        cfg = load_config(str(cfg_file))
        assert cfg.d == 5.0 and cfg.radius == 0.5 and cfg.center == (4.0, 6.0)
        cfg = load_config(str(cfg_file), overrides={"d": 7.0})
        assert cfg.d == 7.0 and cfg.radius == 0.5

    def test_toml_unknown_key(self, tmp_path):
        cfg_file = tmp_path / "run.toml"
        cfg_file.write_text("speling = 1\n")
        with pytest.raises(ConfigError, match="speling"):
            load_config(str(cfg_file))

    def test_variance_interpretation(self):
        cfg = load_config(overrides={"eps": 0.02, "eps_is_variance": True})
        assert cfg.sigma == pytest.approx(math.sqrt(0.02))
        assert load_config().sigma == 0.02

    def test_cell_outside_domain_rejected(self):
        with pytest.raises(ConfigError, match="center"):
            load_config(overrides={"center": "0.1,5.0"})


class TestExitCodes:
    def test_config_error_exit_code(self, tmp_path):
        assert run_cli(["run-exclusion", "--a", "-1", "--out", tmp_path]) == 2

    def test_fig2_requires_uptake(self, tmp_path):
        assert run_cli(["fig2", "--a", "0", "--out", tmp_path]) == 2

    def test_success_exit_code(self, tmp_path):
        assert run_cli(["mesh", "--out", tmp_path, "--h", "0.8"]) == 0


class TestCommands:
    def test_mesh_writes_vtk(self, tmp_path):
        assert run_cli(["mesh", "--out", tmp_path, "--h", "0.8"]) == 0
        for name in ("mesh_punctured.vtk", "mesh_punctured_edges.vtk",
                     "mesh_full.vtk", "mesh_full_edges.vtk"):
            assert (tmp_path / name).exists()
        edges = (tmp_path / "mesh_punctured_edges.vtk").read_text()
        assert "SCALARS boundary_tag int 1" in edges

    def test_run_exclusion_csv_and_snapshots(self, tmp_path):
        rc = run_cli(["run-exclusion", *FAST, "--out", tmp_path, "--snapshots", "0.2"])
        assert rc == 0
        csv = (tmp_path / "exclusion.csv").read_text()
        lines = csv.splitlines()
        assert lines[0].startswith("# mode=run-exclusion")
        assert lines[1] == "t,l2_tilde,h1_semi_tilde,mass,flux"
        assert len(lines) == 2 + 4  # comment, header, t=0 and three steps
        assert (tmp_path / "exclusion_t0.2.vtk").exists()

    def test_run_point_csv(self, tmp_path):
        rc = run_cli(["run-point", *FAST, "--out", tmp_path])
        assert rc == 0
        lines = (tmp_path / "point.csv").read_text().splitlines()
        assert lines[1] == "t,l2_full,l2_tilde,mass,psi"
        first = lines[2].split(",")
        assert float(first[0]) == 0.0
        assert float(first[4]) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_compare_csv_schema(self, tmp_path):
        rc = run_cli(["compare", *FAST, "--out", tmp_path])
        assert rc == 0
        lines = (tmp_path / "comparison.csv").read_text().splitlines()
        assert lines[1] == "t,e_l2,abs_l2,abs_h1semi,l2_uS,l2_uP,psi,steady"
        assert lines[2].split(",")[1] == "nan"  # undefined at zero reference

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli(["compare", *FAST, "--out", out]) == 0
        assert (a / "comparison.csv").read_bytes() == (b / "comparison.csv").read_bytes()

    def test_fig2_outputs(self, tmp_path):
        rc = run_cli(["fig2", *FAST, "--out", tmp_path])
        assert rc == 0
        for name in ("fig2_exclusion.csv", "fig2_point.csv"):
            lines = (tmp_path / name).read_text().splitlines()
            assert lines[1] == "t,l2_tilde,mass,flux_or_psi"

    def test_fig3_outputs_and_summary(self, tmp_path):
        rc = run_cli(["fig3", *FAST, "--out", tmp_path, "--jobs", "2"])
        assert rc == 0
        for d in ("0.1", "1", "10"):
            for a in ("0", "1"):
                assert (tmp_path / f"fig3_compare_D{d}_a{a}.csv").exists()
        lines = (tmp_path / "fig3_summary.csv").read_text().splitlines()
        assert lines[1] == "d,a,e_threshold,t_reach"
        assert len(lines) == 8

    def test_analytic_checks_pass(self, tmp_path, capsys):
        rc = run_cli(["analytic-checks", "--out", tmp_path])
        assert rc == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out
        lines = (tmp_path / "analytic_checks.csv").read_text().splitlines()
        assert lines[1] == "check,measured,threshold,passed"
        assert all(row.endswith(",1") for row in lines[2:])

    def test_csv_uses_lf_only(self, tmp_path):
        assert run_cli(["run-exclusion", *FAST, "--out", tmp_path]) == 0
        raw = (tmp_path / "exclusion.csv").read_bytes()
        assert b"\r" not in raw
