import dataclasses

import pytest

from kppfronts import cli
from kppfronts.config import ConfigError, load_config, parse_config, preset_names

TINY = """
name = "tiny"
seed = 3

[nonlinearity]
shape = "logistic"
profile = { kind = "constant", value = 1.0 }

[recipe]
name = "Supercritical"
kappa = 0.5
T = 10

[solver]
width = 200
dt = 0.02
dx = 0.1

[[diagnostics]]
kind = "speed"
window = [0, 10]
expect = 2.5
rel_tol = 0.05

[[diagnostics]]
kind = "monotone"
max = 1e-12
"""


def _no_sensitivity(cfg):
    return dataclasses.replace(cfg, sensitivity={"start_time": False, "refinement": False})


class TestConfig:
    def test_negative_dx_names_field(self):
        with pytest.raises(ConfigError, match="solver.dx"):
            parse_config(TINY.replace("dx = 0.1", "dx = -0.1"))

    def test_unknown_recipe(self):
        with pytest.raises(ConfigError, match="recipe.name"):
            parse_config(TINY.replace('name = "Supercritical"', 'name = "Sideways"'))

    def test_kappa_out_of_range(self):
        with pytest.raises(ConfigError, match="recipe.kappa"):
            parse_config(TINY.replace("kappa = 0.5", "kappa = 1.5"))

    def test_unknown_diagnostic(self):
        with pytest.raises(ConfigError, match=r"diagnostics\[0\].kind"):
            parse_config(TINY.replace('kind = "speed"', 'kind = "vibes"'))

    def test_bad_toml(self):
        with pytest.raises(ConfigError):
            parse_config("name = ")

    def test_presets_load(self):
        names = preset_names()
        for n in ["ac%02d" % i for i in range(1, 14)] + ["region-figure", "supercritical-autonomous",
                                                           "falsification"]:
            assert n in names
        for n in names:
            load_config(n)


class TestJudge:
    def test_modes(self):
        assert cli.judge({"expect": 2.0, "rel_tol": 0.01}, 2.01)[0]
        assert not cli.judge({"expect": 2.0, "rel_tol": 0.01}, 2.03)[0]
        assert cli.judge({"max": 1.0}, 0.5)[0] and not cli.judge({"max": 1.0}, 1.0)[0]
        assert cli.judge({"min": 0.1}, 0.2)[0]
        assert cli.judge({"range": [1, 2]}, 1.5)[0]
        assert not cli.judge({"max": 1.0}, float("nan"))[0]


class TestSimulate:
    def test_archive(self, tmp_path):
        cfg = parse_config(TINY)
        arch = cli.run_scenario(cfg, tmp_path / "a")
        assert arch.passed, arch.summary()
        for name in ("config.toml", "positions.csv", "diagnostics.csv", "verdicts.csv",
                     "timings.csv", "xt.svg", "summary.txt"):
            assert (tmp_path / "a" / name).exists()
        assert any((tmp_path / "a" / "snapshots").iterdir())
        rows = (tmp_path / "a" / "diagnostics.csv").read_text()
        assert "sensitivity:start_time" in rows and "sensitivity:refinement" in rows

    def test_deterministic(self, tmp_path):
        cfg = _no_sensitivity(parse_config(TINY))
        cli.run_scenario(cfg, tmp_path / "a")
        cli.run_scenario(cfg, tmp_path / "b")
        assert (tmp_path / "a" / "diagnostics.csv").read_text() == \
            (tmp_path / "b" / "diagnostics.csv").read_text()

    def test_supercritical_preset(self, tmp_path):
        cfg = _no_sensitivity(load_config("supercritical-autonomous"))
        arch = cli.run_scenario(cfg, tmp_path / "s")
        assert arch.passed, arch.summary()
        speed = [v for v in arch.verdicts if v.name == "speed[20,60]"][0]
        assert speed.value == pytest.approx(2.5, rel=0.01)

    def test_region_preset(self, tmp_path):
        assert cli.main(["simulate", "region-figure", "-o", str(tmp_path / "r")]) == 0
        svg = (tmp_path / "r" / "region.svg").read_text()
        assert svg.startswith("<svg") and "polygon" in svg
        assert (tmp_path / "r" / "region_speeds.svg").exists()

    def test_failing_verdict_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.toml"
        cfg_path.write_text(TINY.replace("expect = 2.5", "expect = 3.5")
                            .replace("[solver]", "[sensitivity]\nstart_time = false\n"
                                     "refinement = false\n\n[solver]"))
        assert cli.main(["simulate", str(cfg_path), "-o", str(tmp_path / "o")]) == 1
        assert "False" in (tmp_path / "o" / "verdicts.csv").read_text()

    def test_config_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "c.toml"
        p.write_text(TINY.replace("dx = 0.1", "dx = -0.1"))
        assert cli.main(["simulate", str(p)]) == 2
        assert "solver.dx" in capsys.readouterr().err


class TestSuite:
    def test_empty(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text("scenarios = []\n")
        rows, ok, _ = cli.run_suite(cli.load_suite(p))
        assert rows == [] and ok
        assert cli.main(["suite", str(p), "-o", str(tmp_path)]) == 0

    def test_falsification_row_fails(self, tmp_path, capsys):
        p = tmp_path / "s.toml"
        p.write_text('scenarios = ["ac09", "region-figure", "falsification"]\n')
        code = cli.main(["suite", str(p), "--jobs", "2", "-o", str(tmp_path / "runs")])
        out = capsys.readouterr().out
        assert code == 1
        lines = [ln for ln in out.splitlines() if "PASS" in ln or "FAIL" in ln]
        assert len(lines) == 3
        failed = [ln for ln in lines if " FAIL " in ln]
        assert len(failed) == 1 and failed[0].startswith("falsification-sandwich")

    def test_acceptance_suite_lists_thirteen(self):
        assert len(cli.load_suite("suite-acceptance")) == 13

    def test_jobs_validation(self):
        with pytest.raises(ValueError):
            cli.run_suite([], jobs=0)


class TestOtherCommands:
    def test_wave(self, tmp_path, capsys):
        out = tmp_path / "w.csv"
        assert cli.main(["wave", "--c", "2.5", "-o", str(out)]) == 0
        assert out.read_text().startswith("xi,phi,dphi")
        assert "lambda_c = 0.5" in capsys.readouterr().out

    def test_region(self, tmp_path):
        assert cli.main(["region", "--mu-minus", "4", "--mu-plus", "1", "-o", str(tmp_path)]) == 0
        assert (tmp_path / "region.svg").exists()

    def test_validate(self, capsys):
        assert cli.main(["validate", "ac02"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_presets(self, capsys):
        assert cli.main(["presets"]) == 0
        assert "ac13" in capsys.readouterr().out
