"""Tests for configuration handling and the command-line runner."""
import json

import pytest

from tclab import cli
from tclab.errors import ConfigInvalid

TINY_CONVERGE = {
    "experiment": "converge",
    "model": {"kind": "constant", "c": 1.0},
    "spec": {"a_plus": 1.0, "a_minus": 1.0, "family": "eta"},
    "ladder": [2, 4],
    "grid": [0.5, 1.0],
    "replicates": 60,
    "dt": 1e-2,
}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestConfigValidation:
    def test_valid_roundtrip(self):
        cfg = cli.ExperimentConfig(**TINY_CONVERGE)
        assert cfg.validate() is cfg

    @pytest.mark.parametrize("field,value", [
        ("experiment", "nope"),
        ("replicates", 1),
        ("dt", 0.0),
        ("ladder", [4, 2]),
        ("grid", [1.0, 0.5]),
        ("format", "xml"),
        ("jobs", 0),
    ])
    def test_invalid_field_named(self, field, value):
        cfg = cli.ExperimentConfig(**{**TINY_CONVERGE, field: value})
        with pytest.raises(ConfigInvalid, match=field):
            cfg.validate()


class TestBuildModel:
    def test_known_kinds(self):
        assert cli.build_model({"kind": "constant", "c": 2.0}).a_plus == 2.0
        assert cli.build_model({"kind": "periodic"}).kind == "periodic"
        m = cli.build_model({"kind": "power-tail", "delta": 1.0,
                             "a_plus": 1.0, "a_minus": 1.0,
                             "regime": "regularly-varying", "gamma": 3.0})
        assert m.regime == "regularly-varying"

    def test_unknown_kind(self):
        with pytest.raises(ConfigInvalid, match="kind"):
            cli.build_model({"kind": "mystery"})

    def test_missing_field(self):
        with pytest.raises(ConfigInvalid, match="c"):
            cli.build_model({"kind": "constant"})

    def test_limit_spec_missing_field(self):
        with pytest.raises(ConfigInvalid, match="a_minus"):
            cli.build_limit_spec({"a_plus": 1.0})


class TestPresets:
    def test_catalog_is_valid(self):
        for name in cli.PRESETS:
            cfg = cli.preset_config(name)
            assert cfg.experiment in cli.EXPERIMENTS

    def test_alias(self):
        assert (cli.preset_config("thm23-default").model
                == cli.preset_config("thm23").model)

    def test_unknown_preset(self):
        with pytest.raises(ConfigInvalid):
            cli.preset_config("thm99")

    def test_presets_command_lists_catalog(self, capsys):
        assert cli.main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in cli.PRESETS:
            assert name in out

    def test_describe_prints_config(self, capsys):
        assert cli.main(["describe", "thm23"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["experiment"] == "converge"


class TestRun:
    def test_converge_writes_report(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_CONVERGE)
        code = cli.main(["run", "--config", cfg, "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["overall"] == "pass"
        assert "runtime" not in json.dumps(report)
        assert "runtime_sec=" in capsys.readouterr().out

    def test_failing_verdict_exit_code(self, tmp_path):
        # constant intensity against a limit with the wrong speed
        payload = dict(TINY_CONVERGE,
                       spec={"a_plus": 25.0, "a_minus": 25.0, "family": "eta"},
                       replicates=300)
        cfg = write_config(tmp_path, payload)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_determinism_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, TINY_CONVERGE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", "--config", cfg, "--out", str(out_a)]) == 0
        assert cli.main(["run", "--config", cfg, "--out", str(out_b)]) == 0
        assert ((out_a / "report.json").read_bytes()
                == (out_b / "report.json").read_bytes())

    def test_csv_samples_emitted(self, tmp_path):
        cfg = write_config(tmp_path, dict(TINY_CONVERGE, format="csv"))
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "samples.csv").read_text().splitlines()
        assert lines[0] == "experiment,sampler_tag,n,replicate,t,value"
        assert len(lines) > 1

    def test_seed_precedence(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, TINY_CONVERGE)
        monkeypatch.setenv("TCLAB_SEED", "7")
        cli.main(["run", "--config", cfg, "--out", str(tmp_path / "env")])
        echo = json.loads((tmp_path / "env" / "report.json").read_text())
        assert echo["config_echo"]["master_seed"] == 7
        cli.main(["run", "--config", cfg, "--seed", "9",
                  "--out", str(tmp_path / "flag")])
        echo = json.loads((tmp_path / "flag" / "report.json").read_text())
        assert echo["config_echo"]["master_seed"] == 9

    def test_config_file_seed_beats_env(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, dict(TINY_CONVERGE, master_seed=3))
        monkeypatch.setenv("TCLAB_SEED", "7")
        cli.main(["run", "--config", cfg, "--out", str(tmp_path)])
        echo = json.loads((tmp_path / "report.json").read_text())
        assert echo["config_echo"]["master_seed"] == 3

    def test_missing_source_is_error(self):
        assert cli.main(["run"]) == 1

    def test_unknown_config_field(self, tmp_path):
        cfg = write_config(tmp_path, dict(TINY_CONVERGE, mystery=1))
        assert cli.main(["run", "--config", cfg]) == 1


class TestOtherExperiments:
    def test_cauchy_is_diagnostic(self, tmp_path):
        payload = {"experiment": "cauchy",
                   "model": {"kind": "constant", "c": 2.0},
                   "grid": [1.0], "replicates": 30, "dt": 1e-2}
        cfg = write_config(tmp_path, payload)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["estimate"] == pytest.approx(
            2.0, abs=6.0 * report["std_error"])

    def test_localtime_identity(self, tmp_path):
        payload = {"experiment": "localtime-identity",
                   "model": {"kind": "periodic"},
                   "grid": [1.0], "replicates": 10, "dt": 1e-4,
                   "bin_width": 1e-2}
        cfg = write_config(tmp_path, payload)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["occupation_identity_ok"] is True

    def test_crosscheck_small(self, tmp_path):
        payload = {"experiment": "limit-crosscheck",
                   "spec": {"a_plus": 1.0, "a_minus": 1.0, "family": "eta"},
                   "grid": [0.5, 1.0], "replicates": 500, "dt": 1e-2}
        cfg = write_config(tmp_path, payload)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0

    def test_write_path_csv(self, tmp_path):
        from tclab.pathsim import RngStream, sample_brownian
        paths = [sample_brownian(RngStream(0, r), 0.1, 0.05)
                 for r in range(2)]
        out = tmp_path / "paths.csv"
        cli.write_path_csv(str(out), paths)
        lines = out.read_text().splitlines()
        assert lines[0] == "replicate,k,t,value"
        assert len(lines) == 1 + 2 * 3
