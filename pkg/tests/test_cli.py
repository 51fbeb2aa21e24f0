import json

import numpy as np
import pytest

from esfv.cli import (
    EXIT_ADMISSIBILITY,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_PROPERTY,
    ConfigError,
    main,
    parse_config_text,
    parse_overrides,
    resolve,
)
from esfv.grid import read_snapshot


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text + f"\noutput = {tmp_path / 'out'}\n")
    return str(p)


SOD = """
system = complete
case = sod
grid.n = 64
t_end = 0.05
snapshots = [0.025, 0.05]
"""


class TestParsing:
    def test_values(self):
        cfg = parse_config_text("# comment\ngrid.n = 32\ncfl = 0.3\nlevels = [8, 16]\ncase = sod\n")
        assert cfg == {"grid.n": 32, "cfl": 0.3, "levels": [8, 16], "case": "sod"}

    def test_bare_word_list(self):
        assert parse_config_text("obs = [rho, p]\nlev = [8,16]")["obs"] == ["rho", "p"]
        with pytest.raises(ConfigError):
            parse_config_text("obs = [rho, p")

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("grid.n 32\n")

    def test_overrides(self):
        assert parse_overrides(["--cfl=0.2", "--case.radius=0.1"]) == {"cfl": 0.2, "case.radius": 0.1}
        with pytest.raises(ConfigError):
            parse_overrides(["cfl=0.2"])

    @pytest.mark.parametrize("raw", [{"grid.size": 3}, {"case": "vortex", "case.width": 1.0},
                                     {"system": "plasma"}])
    def test_unknown_rejected(self, raw):
        with pytest.raises(ConfigError):
            resolve(raw)

    def test_defaults_filled(self):
        cfg = resolve({"case": "sod"})
        assert cfg["cfl"] == 0.4 and cfg["flux.jump_scaling"] == "paper"


class TestRun:
    def test_outputs(self, tmp_path, capsys):
        assert main(["run", write_cfg(tmp_path, SOD)]) == EXIT_OK
        out = tmp_path / "out"
        assert (out / "series.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["mass_drift"] < 1e-13
        assert summary["config"]["case"] == "sod"
        assert summary["config"]["chi.resolved"]["kind"] == "cutoff"
        fld, t = read_snapshot(out / "snap_0.050000.dat")
        assert t == 0.05 and fld.names == ("rho", "m1", "E")
        assert (out / "snap_0.025000.dat").exists()
        assert "mass drift" in capsys.readouterr().out

    def test_override_applied(self, tmp_path):
        assert main(["run", write_cfg(tmp_path, SOD), "--grid.n=32"]) == EXIT_OK
        fld, _ = read_snapshot(tmp_path / "out" / "snap_0.050000.dat")
        assert fld.grid.n == 32

    def test_deterministic(self, tmp_path):
        cfg = write_cfg(tmp_path, SOD)
        main(["run", cfg])
        a = (tmp_path / "out" / "snap_0.050000.dat").read_bytes()
        b_series = (tmp_path / "out" / "series.csv").read_bytes()
        main(["run", cfg])
        assert (tmp_path / "out" / "snap_0.050000.dat").read_bytes() == a
        assert (tmp_path / "out" / "series.csv").read_bytes() == b_series

    def test_constant_zero_drift(self, tmp_path):
        cfg = write_cfg(tmp_path, "case = constant\ncase.E = 2.5\ncase.m = [0.5]\ngrid.n = 16\nt_end = 0.1")
        assert main(["run", cfg]) == EXIT_OK
        s = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert s["mass_drift"] == 0 and s["energy_drift"] == 0

    @pytest.mark.parametrize("extra", ["--cfl=0", "--grid.size=4", "--flux.kind=roe",
                                       "--case.width=2", "--integrator=rk4"])
    def test_config_errors(self, tmp_path, extra, capsys):
        assert main(["run", write_cfg(tmp_path, SOD), extra]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_inadmissible_initial_data(self, tmp_path):
        cfg = write_cfg(tmp_path, "case = constant\ncase.E = 0.1\ncase.m = [2.0]\ngrid.n = 8")
        assert main(["run", cfg]) in (EXIT_CONFIG, EXIT_ADMISSIBILITY)

    def test_admissibility_lost(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "case = riemann\ncase.left = [1.0, -6.0, 0.01]\n"
                        "case.right = [1.0, 6.0, 0.01]\ngrid.n = 64\ncfl = 1.0\n"
                        "integrator = forward-euler\nt_end = 0.2")
        assert main(["run", cfg]) == EXIT_ADMISSIBILITY
        assert "admissibility lost" in capsys.readouterr().err


class TestStudies:
    def test_convergence_smooth(self, tmp_path):
        cfg = write_cfg(tmp_path, "system = barotropic\ngamma = 2.0\ncase = smooth-wave\n"
                        "t_end = 0.05\nlevels = [16, 32, 64]")
        assert main(["convergence", cfg]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "study_report.json").read_text())
        assert rep["reference"] == "finest"
        assert [r["n"] for r in rep["levels"]] == [16, 32]
        assert rep["levels"][1]["order_L1"][0] > 0.5
        assert "consistency_continuity" in rep["levels"][0]
        assert (tmp_path / "out" / "level_64" / "series.csv").exists()

    def test_convergence_exact(self, tmp_path):
        cfg = write_cfg(tmp_path, "case = vortex\ngrid.dim = 2\nt_end = 0.02\nlevels = [8, 16]")
        assert main(["convergence", cfg]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "study_report.json").read_text())
        assert rep["reference"] == "exact" and len(rep["levels"]) == 2

    def test_dmv_too_few_levels(self, tmp_path):
        cfg = write_cfg(tmp_path, SOD + "levels = [32, 64]\n")
        assert main(["dmv", cfg]) == EXIT_CONFIG

    def test_dmv_sod(self, tmp_path):
        cfg = write_cfg(tmp_path, "case = sod\nt_end = 0.1\nlevels = [32, 64, 128]\n"
                        "window.observables = [rho, p]")
        assert main(["dmv", cfg]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "study_report.json").read_text())
        (study,) = rep["windows"]
        assert study["window"]["name"] == "sod-shock"
        assert set(study["cauchy"]) == {"rho", "p"}
        assert len(rep["dissipation_defect"]) == 3


class TestCheck:
    def test_clean(self, capsys):
        assert main(["check"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") == 5 and "FAIL" not in out

    def test_mutation_detected(self, capsys):
        assert main(["check", "--mutate", "entropy-vars"]) == EXIT_PROPERTY
        out = capsys.readouterr().out
        assert "FAIL entropy-variable gradient" in out and "counterexample" in out

    def test_unknown_mutation(self):
        with pytest.raises(SystemExit):
            main(["check", "--mutate", "nothing"])
