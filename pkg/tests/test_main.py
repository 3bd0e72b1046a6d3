from unittest.mock import patch

import pandas as pd
import pytest

from src.cli.main import main
from src.core.config import config
from src.scenario.export import read_metrics

SCENARIO = """\
name: tiny
horizon: 2d
sensors:
  - id: S1
    metric: temp
    interval: 6h
    dataset: {values: [1, 2, 3]}
    target: G1
gateways:
  - id: G1
    target: DC1
datacenters:
  - id: DC1
    hosts: [{id: H1}]
"""


def test_config_loaded():
    assert config.PROJECT_ROOT is not None
    assert (config.DATA_DIR / "env-iot" / "S1.csv").exists()
    assert 1 <= config.SWEEP_WORKERS <= 32


@pytest.fixture
def cli(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "OUTPUT_DIR", tmp_path / "out")
    log = str(tmp_path / "fieldnet.log")

    def invoke(*args):
        return main(["--log-file", log, *[str(a) for a in args]])

    return invoke


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(SCENARIO)
    return path


class TestValidate:
    def test_valid_document(self, cli, scenario, tmp_path, capsys):
        graph = tmp_path / "tiny.graphml"
        assert cli("validate", "--scenario", scenario, "--graph", graph) == 0
        assert "OK (3 nodes, 1 sensors)" in capsys.readouterr().out
        assert graph.exists()

    def test_invalid_document_lists_diagnostics(self, cli, scenario, capsys):
        scenario.write_text(SCENARIO.replace("target: G1", "target: gw9"))
        assert cli("validate", "--scenario", scenario) == 2
        err = capsys.readouterr().err
        assert "$.sensors[0].target:8:" in err
        assert "1 diagnostic(s)" in err

    def test_preset_names_are_accepted(self, cli):
        assert cli("validate", "--scenario", "env-iot") == 0


class TestRun:
    def test_run_writes_trace_and_metrics(self, cli, scenario, tmp_path):
        trace, metrics = tmp_path / "t.csv", tmp_path / "m.json"
        assert cli("run", "--scenario", scenario, "--seed", 9, "--trace", trace, "--metrics", metrics) == 0
        doc = read_metrics(metrics)
        assert (doc.scenario, doc.seed) == ("tiny", 9)
        assert doc.readings_emitted == 8
        rows = pd.read_csv(trace, skiprows=1)
        assert (rows["kind"] == "aggregate").sum() == 8

    def test_horizon_override_and_default_outputs(self, cli, scenario, tmp_path):
        assert cli("run", "--scenario", scenario, "--horizon", "1d") == 0
        doc = read_metrics(tmp_path / "out" / "tiny-0.metrics.json")
        assert doc.readings_emitted == 4
        assert (tmp_path / "out" / "tiny-0.trace.csv").exists()

    def test_unwritable_trace_is_a_runtime_failure(self, cli, scenario, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        assert cli("run", "--scenario", scenario, "--trace", blocker / "t.csv") == 1
        assert "IoFailure" in capsys.readouterr().err

    def test_missing_scenario_file(self, cli, tmp_path):
        assert cli("run", "--scenario", tmp_path / "absent.yaml") == 2

    def test_summary_and_metrics_report_host_energy(self, cli, scenario, tmp_path, capsys):
        metrics = tmp_path / "m.json"
        assert cli("run", "--scenario", scenario, "--metrics", metrics, "--trace", tmp_path / "t.csv") == 0
        doc = read_metrics(metrics)
        assert set(doc.energy_J) == {"DC1"}
        assert doc.energy_J["DC1"] > 0
        assert "J host energy" in capsys.readouterr().out

    def test_value_error_during_a_run_is_a_runtime_failure(self, cli, scenario, capsys):
        with patch("src.cli.main.build_simulation", side_effect=ValueError("cloudlet length must be > 0")):
            assert cli("run", "--scenario", scenario) == 1
        assert "ValueError" in capsys.readouterr().err


class TestPreset:
    def test_write_then_validate(self, cli, tmp_path):
        out = tmp_path / "env.yaml"
        assert cli("preset", "env-iot", "--locations", 2, "--interval", "12h", "--write", out) == 0
        assert "env-iot-x2" in out.read_text()
        assert cli("validate", "--scenario", out) == 0

    def test_run_preset(self, cli, tmp_path):
        metrics = tmp_path / "m.json"
        assert cli("preset", "env-iot", "--days", 2, "--metrics", metrics, "--trace", tmp_path / "t.csv") == 0
        assert read_metrics(metrics).readings_emitted == 6 * 4 * 2

    def test_unknown_preset(self, cli, capsys):
        assert cli("preset", "atlantis") == 2
        assert "unknown preset" in capsys.readouterr().err

    def test_out_of_range_option(self, cli, capsys):
        assert cli("preset", "env-iot", "--locations", 0) == 2
        assert "preset env-iot" in capsys.readouterr().err


def test_usage_errors(cli):
    assert cli("run", "--scenario", "x", "--horizon", "3x") == 2
    assert cli("teleport") == 2
    assert cli("sweep", "--scenario", "env-iot", "--repeats", 0) == 2


def test_help_exits_cleanly(cli):
    assert cli("--help") == 0


def test_sweep_command(cli, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = cli(
        "sweep", "--scenario", "env-iot", "--locations", "1,2", "--intervals", "24h",
        "--horizon", "2d", "--out", out,
    )
    assert code == 0
    table = pd.read_csv(out, keep_default_na=False)
    assert list(table["locations"]) == [1, 2]
    assert (table["error"] == "").all()
    assert "R^2=" in capsys.readouterr().out
