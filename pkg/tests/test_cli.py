"""Configuration parsing and the ``qlab`` command line."""

import json
import subprocess
import sys

import pytest

from quasilinear_lab.cli import main
from quasilinear_lab.config import grid_from_config, load_config, parse_bc, parse_config
from quasilinear_lab.errors import ConfigError
from quasilinear_lab.grid import NO_SLIP, PERIODIC, PURE_SLIP


class TestConfig:
    def test_types_and_comments(self):
        cfg = parse_config("dim = 3   # comment\nn_cells = 8, 8, 4\nalpha = default\neta = 0.5\n; note\n")
        assert cfg == {"dim": 3, "n_cells": [8, 8, 4], "alpha": None, "eta": 0.5}

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config("viscosity = 3\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            parse_config("dim = two\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_boundary_forms(self):
        assert parse_bc("periodic", 2) == ((PERIODIC, PERIODIC),) * 2
        assert parse_bc("channel", 3)[1] == (NO_SLIP, PURE_SLIP)
        assert parse_bc("periodic:periodic, no_slip:pure_slip", 2)[1] == (NO_SLIP, PURE_SLIP)
        with pytest.raises(ConfigError):
            parse_bc("periodic:wall, periodic:periodic", 2)
        with pytest.raises(ConfigError):
            parse_bc("periodic:periodic", 2)

    def test_grid(self):
        g = grid_from_config(parse_config("dim = 3\nn_cells = 8\nbc = channel\nlengths = 1, 2, 3\n"))
        assert g.n_cells == (8, 8, 8) and g.lengths == (1.0, 2.0, 3.0) and g.p == 6.0

    def test_shipped_configs_parse(self):
        import pathlib
        root = pathlib.Path(__file__).resolve().parents[1] / "configs"
        files = sorted(root.glob("*.cfg"))
        assert len(files) == 6
        for f in files:
            load_config(f)


class TestCommandLine:
    def test_blowup_writes_reports(self, tmp_path, capsys):
        cfg = tmp_path / "b.cfg"
        cfg.write_text("n_values = 1, 2\ntail = 64, 16384\ndt = 1e-4\n")
        assert main(["blowup", "--config", str(cfg), "--out", str(tmp_path / "rep")]) == 0
        doc = json.loads((tmp_path / "rep.json").read_text())
        assert doc["passed"] and doc["config"]["command"] == "blowup"
        assert doc["verdicts"]["limsup_inequality"] is True
        assert len(doc["content_sha1"]) == 40
        assert (tmp_path / "rep.csv").read_text().splitlines()[0] == "n,u0,T_n,T_closed,abs_error"

    def test_csv_to_stdout(self, tmp_path, capsys):
        cfg = tmp_path / "d.cfg"
        cfg.write_text("deltas = 1e-1, 1e-2\ndt = 1e-2\n")
        assert main(["depend", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "n,delta,eta,eps,data_gap,op_gap,f_gap,e1_gap"

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus = 1\n")
        assert main(["depend", "--config", str(cfg)]) == 2

    def test_failed_verdict_exit_code(self, tmp_path):
        # the limsup check cannot hold when the tail stops far from the limit at coarse dt
        cfg = tmp_path / "b.cfg"
        cfg.write_text("n_values = 1\ntail = 1\ndt = 1e-3\n")
        assert main(["blowup", "--config", str(cfg)]) == 1

    def test_seed_reproducible(self, tmp_path):
        cfg = tmp_path / "l.cfg"
        cfg.write_text("study = viscosity\nn_cells = 8\neta_sequence = 0.5, 0.25\ndt = 0.02\nt_final = 0.04\n"
                       "floor = no\ninitial = random\n")
        for name in ("a", "b"):
            assert main(["limit", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / name)]) in (0, 1)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert json.loads((tmp_path / "a.json").read_text())["config"]["seed"] == 3

    def test_unknown_initial(self, tmp_path):
        cfg = tmp_path / "l.cfg"
        cfg.write_text("initial = vortex_street\n")
        assert main(["limit", "--config", str(cfg)]) == 2

    def test_console_script_help(self):
        res = subprocess.run([sys.executable, "-m", "quasilinear_lab.cli", "--help"], capture_output=True, text=True)
        assert res.returncode == 0
        for cmd in ("mms", "limit", "depend", "blowup", "maxreg"):
            assert cmd in res.stdout
