import json
from pathlib import Path

import jsonschema
import pytest

from vbnet import cli
from vbnet import config as config_mod

FAST = ["--replications", "1", "--steps", "10"]


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("architecture:\n  hidden: [6, 6]\npredict:\n  num_draws: 20\n"
                    "curve:\n  n_train: 40\n  n_test: 20\n")
    return path


def test_run_and_summarize(tmp_path, tiny_config, capsys):
    out = tmp_path / "out"
    code = cli.main(["run", "--config", str(tiny_config), "--out-dir", str(out), "--models", "svar,nnet",
                     "--seed", "3", *FAST])
    assert code == cli.EXIT_OK
    doc = json.loads((out / "results.json").read_text())
    assert [r["model"] for r in doc["records"]] == ["svar", "nnet"]
    assert doc["config"]["seed"] == 3 and doc["config"]["trainer"]["steps"] == 10
    for name in ("metrics.csv", "points.csv", "timings.csv", "summary.csv", "summary.json"):
        assert (out / name).is_file()
    assert cli.main(["summarize", str(out / "results.json"), "--out-dir", str(tmp_path / "s")]) == 0
    assert "svar,mspe,1" in capsys.readouterr().out


def test_out_dir_from_environment(tmp_path, tiny_config, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "env_out"))
    assert cli.main(["run", "--config", str(tiny_config), "--models", "nnet", *FAST]) == 0
    assert (tmp_path / "env_out" / "results.json").is_file()


def test_usage_and_config_errors(tmp_path, tiny_config):
    with pytest.raises(SystemExit) as e:
        cli.main(["run", "--experiment", "mnist"])
    assert e.value.code == cli.EXIT_USAGE
    assert cli.main(["run", "--config", str(tiny_config), "--replications", "0"]) == cli.EXIT_USAGE
    assert cli.main(["run", "--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_USAGE


def test_data_error_exit_code(tmp_path, tiny_config):
    code = cli.main(["run", "--config", str(tiny_config), "--experiment", "riboflavin",
                     "--data", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path / "o"), *FAST])
    assert code == cli.EXIT_DATA
    assert cli.main(["summarize", str(tmp_path / "none.json")]) == cli.EXIT_DATA


def test_all_replications_failing_exit_code(tmp_path, tiny_config, monkeypatch):
    from vbnet import experiment
    from vbnet.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("diverged", step=0)

    monkeypatch.setattr(experiment, "fit_vb", boom)
    monkeypatch.setattr(experiment, "fit_frequentist", boom)
    code = cli.main(["run", "--config", str(tiny_config), "--out-dir", str(tmp_path / "o"), *FAST])
    assert code == cli.EXIT_NUMERICAL


def test_gen_data(tmp_path):
    out = tmp_path / "curve.csv"
    assert cli.main(["gen-data", "--out", str(out), "--n", "12", "--seed", "1"]) == 0
    from vbnet.data import load_delimited
    d = load_delimited(out)
    assert d.n == 12 and d.x.min() >= -0.1 and d.x.max() <= 0.6


REPO = Path(__file__).resolve().parents[1]


@pytest.mark.parametrize("name", ["curve.yaml", "riboflavin_pca.yaml", "riboflavin_dropout.yaml"])
def test_shipped_configs_resolve(name):
    cfg = config_mod.resolve(config_mod.load_config_file(REPO / "configs" / name))
    assert cfg["replications"] == 10
    expected_prior = "spike_slab" if "dropout" in name else "gaussian"
    assert cfg["prior"]["kind"] == expected_prior


def test_example_results_match_schema():
    schema = json.loads((REPO / "src" / "vbnet" / "result_schema.json").read_text())
    doc = json.loads((REPO / "docs" / "example_results.json").read_text())
    jsonschema.validate(doc, schema)
    assert {r["model"] for r in doc["records"]} == {"svar", "fixed", "nnet"}
