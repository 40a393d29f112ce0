import io
import json

import numpy as np
import pytest

from mmfnet import cli, validate
from mmfnet.photonics import fourier4
from mmfnet.results import ExperimentResult


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def table(text):
    return ExperimentResult.from_csv(text)


class TestScenarios:
    def test_coherent_absorption_shape(self, capsys):
        code, out = run(capsys, "coherent-absorption", "--alpha-steps", "33", "--phi-steps", "65", "--t", "0.5")
        assert code == 0
        result = table(out.out)
        assert len(result) == 33 * 65
        assert result.columns == ("phi", "alpha", "t", "total", "p20", "p02", "p11", "normalized_total")
        assert result.metadata["params"]["alpha_steps"] == 33

    def test_multi_target(self, capsys):
        code, out = run(capsys, "multi-target", "--targets", "18", "--n", "398")
        assert code == 0
        result = table(out.out)
        assert len(result) == 18
        shares = np.array(result.column("intensity_share"))
        assert np.all(shares > 0) and shares.sum() == pytest.approx(1)
        assert 0 < result.metadata["gamma_total"] <= 1

    def test_fidelity_scaling_byte_identical(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert cli.main(["fidelity-scaling", "--model", "RM", "--n", "64,128,256,512", "--trials", "200",
                             "--out", str(p)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert len(table(paths[0].read_text())) == 4

    def test_seed_changes_output(self, capsys):
        _, a = run(capsys, "fidelity-scaling", "--n", "32", "--trials", "5", "--seed", "1")
        _, b = run(capsys, "fidelity-scaling", "--n", "32", "--trials", "5", "--seed", "2")
        assert a.out != b.out

    @pytest.mark.parametrize("argv", [
        ["eigen-spectrum", "--bins", "8", "--n", "40"],
        ["eigen-spectrum", "--model", "RM", "--n", "40", "--bins", "8"],
        ["visibility-pattern", "--network", "sylvester", "--n", "64"],
        ["visibility-pattern", "--medium", "ideal"],
        ["hom-scan", "--steps", "11"],
        ["suppression", "--trials", "2", "--n", "64"],
        ["suppression", "--network", "sylvester", "--trials", "1", "--n", "64"],
        ["tm-acquire", "--trials", "1", "--n", "64"],
    ])
    def test_every_scenario_runs_deterministically(self, capsys, argv):
        code, first = run(capsys, *argv)
        assert code == 0
        _, second = run(capsys, *argv)
        assert first.out == second.out
        meta = table(first.out).metadata
        assert meta["scenario"] == argv[0] and "version" in meta

    def test_json_format(self, capsys):
        code, out = run(capsys, "hom-scan", "--steps", "5", "--format", "json")
        assert code == 0
        data = json.loads(out.out)
        assert data["columns"] == ["delay_ps", "indistinguishability", "coincidence"] and len(data["rows"]) == 5

    def test_hom_fwhm_metadata(self, capsys):
        _, out = run(capsys, "hom-scan", "--steps", "601", "--span", "6")
        assert table(out.out).metadata["measured_fwhm_ps"] == pytest.approx(1.5, rel=0.02)

    def test_ideal_suppression_zero(self, capsys):
        _, out = run(capsys, "suppression", "--trials", "1", "--n", "64")
        assert max(table(out.out).column("d_ideal")) < 1e-9


class TestConfig:
    def test_config_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"steps": 7, "fwhm": 2.0}))
        _, out = run(capsys, "hom-scan", "--config", str(cfg), "--steps", "3")
        params = table(out.out).metadata["params"]
        assert params["steps"] == 3 and params["fwhm"] == 2.0

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(SystemExit) as exc:
            cli.main(["hom-scan", "--config", str(cfg)])
        assert exc.value.code == cli.EXIT_USAGE

    def test_wrong_scenario_in_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scenario": "suppression"}))
        with pytest.raises(SystemExit) as exc:
            cli.main(["hom-scan", "--config", str(cfg)])
        assert exc.value.code == cli.EXIT_USAGE

    @pytest.mark.parametrize("argv", [
        ["nosuch"],
        ["hom-scan", "--bogus", "1"],
        ["fidelity-scaling", "--n", "a,b"],
        ["fidelity-scaling", "--n", "15", "--m", "2"],
        ["fidelity-scaling", "--model", "FILE"],
        ["coherent-absorption", "--t", "0.9"],
        ["tm-acquire", "--photon-budget", "0"],
    ])
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == cli.EXIT_USAGE

    def test_exit_codes_distinct(self):
        assert len({cli.EXIT_OK, cli.EXIT_USAGE, cli.EXIT_VALIDATION}) == 3


def corrupted():
    F = fourier4()
    F[2, 2] = -F[2, 2] * 1j
    return F


class TestValidate:
    def test_negative_control(self):
        check = validate.check_suppression(fourier=corrupted, seeds=3)
        assert not check.passed
        assert validate.check_suppression(seeds=3).passed

    def test_exit_codes(self, monkeypatch, capsys):
        quick = (validate.check_anticoalescence, validate.check_coherent_absorption, validate.check_hom_fwhm)
        monkeypatch.setattr(validate, "CHECKS", quick)
        assert cli.main(["validate"]) == cli.EXIT_OK
        first = capsys.readouterr().out
        assert cli.main(["validate"]) == cli.EXIT_OK
        assert capsys.readouterr().out == first
        assert "3/3 criteria passed" in first

        failing = quick + (lambda: validate.check_suppression(fourier=corrupted, seeds=1),)
        monkeypatch.setattr(validate, "CHECKS", failing)
        assert cli.main(["validate"]) == cli.EXIT_VALIDATION
        assert "[FAIL]" in capsys.readouterr().out

    def test_report_format(self):
        checks = [validate.Check(5, "x", True, "ok"), validate.Check(6, "y", False, "bad")]
        text = validate.format_report(checks)
        assert "[PASS] criterion  5" in text and "failing: 6" in text
        buf = io.StringIO()
        assert validate.validate_suite({i: (lambda: validate.Check(i, "n", True, "")) for i in range(1, 12)},
                                       stream=buf)
