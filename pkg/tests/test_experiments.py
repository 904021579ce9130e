import csv
import math
import re

import numpy as np
import pytest

from aerolay.config import ConfigError, SharingMode
from aerolay.experiments import ExperimentSpec, load_config
from aerolay.experiments import cli, runner


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_empty_is_default(self, tmp_path):
        spec = load_config(write(tmp_path, ""))
        s = spec.scenario
        assert (s.lambda_b, s.lambda_u, s.h_b, s.h_u, s.n_prbs, s.p_max_dbm, s.rho_u_dbm) == (5e-6, 1e-6, 25.0, 100.0, 50, 24.0, -58.0)
        assert s.antenna.downtilt_deg == 102.0 and s.sharing_mode is SharingMode.UNDERLAY

    def test_eta_out_of_range(self, tmp_path):
        with pytest.raises(ConfigError, match="eta_u"):
            load_config(write(tmp_path, "eta_u = 1.5\n"))

    def test_overlay_bandwidths(self, tmp_path):
        spec = load_config(write(tmp_path, "sharing_mode = overlay\neta_u = 0.1\n"))
        assert spec.bandwidth_g == pytest.approx(9e6)
        assert spec.bandwidth_u == pytest.approx(1e6)

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="lambda_x"):
            load_config(write(tmp_path, "lambda_x = 3\n"))

    def test_comments_and_lists(self, tmp_path):
        text = "# sweep\nsweep_variable = eta_u  # fraction\nsweep_values = 0.1, 0.5\nengines = analytical\nlos_a3 = 15\nn_elements = 4\n"
        spec = load_config(write(tmp_path, text))
        assert spec.sweep_values == (0.1, 0.5) and spec.engines == ("analytical",)
        assert spec.scenario.los_model.a3 == 15.0 and spec.scenario.antenna.n_elements == 4

    def test_bad_values(self, tmp_path):
        for text in ("eta_u = lots\n", "n_prbs = 2.5\n", "sweep_variable = h_b\n", "engines = magic\n", "sweep_values = 1, nan\n", "noequals\n", "eta_u = 0.1\neta_u = 0.2\n"):
            with pytest.raises(ConfigError):
                load_config(write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestCli:
    def test_validate(self, tmp_path, capsys):
        assert cli.main(["validate-config", "--config", str(write(tmp_path, "eta_u = 0.2\n"))]) == 0
        assert "B_u=2000000" in capsys.readouterr().out
        assert cli.main(["validate-config", "--config", str(write(tmp_path, "eta_u = 2\n"))]) == 2

    def test_fig2_analytical(self, tmp_path):
        out = tmp_path / "run"
        assert cli.main(["fig2", "--out", str(out), "--engine", "analytical"]) == 0
        rows = read_csv(f"{out}_fig2_u2u.csv")
        assert rows[0] == ["T_db", "link", "mode", "engine", "value", "ci"]
        assert len(rows) == 42
        vals = [float(r[4]) for r in rows[1:]]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert all(len(re.sub(r"[^0-9]", "", r[4].split("e")[0]).lstrip("0")) <= 9 for r in rows[1:])

    def test_fig2_gap_exit_code(self, tmp_path):
        # U2U analysis sits ~0.05 above simulation near 5 dB, so the full check exits non-zero
        rc = cli.main(["fig2", "--out", str(tmp_path / "g"), "--drops", "20000", "--seed", "3"])
        assert rc == 1

    def test_sweep_reproducible(self, tmp_path):
        cfg = write(tmp_path, "sweep_variable = lambda_u\nsweep_values = 1e-6, 5e-6\nlinks = gue_ul\nthreshold_db = 0\n")
        for tag in ("a", "b"):
            assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / tag), "--drops", "1500", "--seed", "4"]) == 0
        a = (tmp_path / "a_sweep_lambda_u.csv").read_bytes()
        b = (tmp_path / "b_sweep_lambda_u.csv").read_bytes()
        assert a == b
        rows = read_csv(tmp_path / "a_sweep_lambda_u.csv")
        assert rows[0][0] == "lambda_u" and {r[3] for r in rows[1:]} == {"analytical", "montecarlo"}
        for r in rows[1:]:
            if r[3] == "montecarlo":
                assert float(r[5]) > 0
            else:
                assert r[5] == ""

    def test_sweep_rate(self, tmp_path):
        cfg = write(tmp_path, "sweep_variable = rate_T\nsweep_values = 0, 1e5, 1e6\nlinks = u2u\nengines = analytical\n")
        assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
        rows = read_csv(tmp_path / "r_sweep_rate_T.csv")
        assert rows[1][4] == "1"

    def test_thread_env(self, monkeypatch):
        from aerolay import montecarlo

        monkeypatch.setenv("AEROLAY_THREADS", "1")
        assert montecarlo.thread_count() == 1


def test_fmt_significant_digits():
    assert runner.fmt(1 / 3) == "0.333333333"
    assert runner.fmt(123456789012.0) == "1.23456789e+11"
    assert runner.fmt(None) == ""


def test_max_gap():
    rows = [(0, "u2u", "underlay", "analytical", 0.5, None), (0, "u2u", "underlay", "montecarlo", 0.46, 0.01)]
    assert runner.max_gap(rows) == pytest.approx(0.04)


def test_spec_invariants():
    with pytest.raises(ConfigError):
        ExperimentSpec(sweep_values=())
    with pytest.raises(ConfigError):
        ExperimentSpec(engines=())
