"""Unit tests for the command-line front end."""

from pathlib import Path

import pytest

from mkg_lib_autoscale.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from mkg_lib_autoscale.exceptions import AutoscaleError

SYNTHETIC_TOML = """\
duration_s = 600
base_rate = 3
rng_seed = 4

[[bursts]]
event_time_s = 300
peak_rate = 20
"""

RUN_TOML = """\
run_id = "cli"
policy = "appdata"
seed = 1

[workload.synthetic]
duration_s = 600
base_rate = 3

[[workload.synthetic.bursts]]
event_time_s = 300
peak_rate = 20
"""


@pytest.fixture
def run_toml(tmp_path: Path) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(RUN_TOML, encoding="utf-8")
    return path


class TestGenerate:
    """Tests for the generate subcommand."""

    def test_writes_trace_and_manifest(self, tmp_path: Path) -> None:
        """Test a synthetic trace and its class manifest are written."""
        spec = tmp_path / "synthetic.toml"
        spec.write_text(SYNTHETIC_TOML, encoding="utf-8")
        out = tmp_path / "gen"

        assert main(["generate", str(spec), "--out", str(out)]) == EXIT_OK

        assert (out / "trace.csv").is_file()
        assert (out / "trace.classes.csv").is_file()

    def test_seed_changes_trace(self, tmp_path: Path) -> None:
        """Test --seed overrides the spec's seed."""
        spec = tmp_path / "synthetic.toml"
        spec.write_text(SYNTHETIC_TOML, encoding="utf-8")

        main(["--seed", "1", "generate", str(spec), "--out", str(tmp_path / "a")])
        main(["generate", str(spec), "--seed", "2", "--out", str(tmp_path / "b")])

        first = (tmp_path / "a" / "trace.csv").read_text(encoding="utf-8")
        second = (tmp_path / "b" / "trace.csv").read_text(encoding="utf-8")
        assert first != second


class TestRun:
    """Tests for the run subcommand."""

    def test_writes_outputs(self, run_toml: Path, tmp_path: Path) -> None:
        """Test a run writes its summary, event log, trace and histogram."""
        out = tmp_path / "run"

        assert main(["run", str(run_toml), "--out", str(out), "--quiet"]) == EXIT_OK

        for name in ("summary.csv", "events.csv", "trace.csv", "latency_histogram.csv"):
            assert (out / name).is_file()
        summary = (out / "summary.csv").read_text(encoding="utf-8").splitlines()
        assert summary[0] == "run_id,policy,params,violation_pct,cpu_hours,L,lambda,W"
        assert summary[1].startswith("cli,appdata,")

    def test_deterministic_output(self, run_toml: Path, tmp_path: Path) -> None:
        """Test two runs with the same seed write identical files."""
        main(["run", str(run_toml), "--out", str(tmp_path / "a"), "--seed", "7"])
        main(["run", str(run_toml), "--out", str(tmp_path / "b"), "--seed", "7"])

        for name in ("summary.csv", "events.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_invalid_config(self, tmp_path: Path) -> None:
        """Test a configuration error exits with the usage code."""
        bad = tmp_path / "bad.toml"
        bad.write_text('policy = "load"\n[sim]\nstep_s = 0\n', encoding="utf-8")

        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == EXIT_USAGE

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test a missing file exits with the usage code."""
        assert main(["run", str(tmp_path / "none.toml")]) == EXIT_USAGE

    def test_unknown_policy(self, tmp_path: Path) -> None:
        """Test an unregistered policy name exits with the usage code."""
        bad = tmp_path / "bad.toml"
        bad.write_text(RUN_TOML.replace('"appdata"', '"oracle"'), encoding="utf-8")

        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == EXIT_USAGE

    def test_runtime_failure(self, mocker, run_toml: Path, tmp_path: Path) -> None:
        """Test a failure during the run exits with the runtime code."""
        mocker.patch(
            "mkg_lib_autoscale.cli.run_scenario", side_effect=AutoscaleError("boom")
        )

        assert main(["run", str(run_toml), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME


class TestAnalyze:
    """Tests for the analyze subcommand."""

    def test_analyzes_run_directory(self, run_toml: Path, tmp_path: Path) -> None:
        """Test a run directory's trace is analyzed."""
        out = tmp_path / "run"
        main(["run", str(run_toml), "--out", str(out)])

        code = main(["analyze", str(out), "--out", str(tmp_path / "analysis")])

        assert code == EXIT_OK
        assert (tmp_path / "analysis" / "correlation_lags.csv").is_file()
        assert (tmp_path / "analysis" / "correlation_series.csv").is_file()

    def test_missing_trace(self, tmp_path: Path) -> None:
        """Test a directory without a trace exits with the usage code."""
        assert main(["analyze", str(tmp_path)]) == EXIT_USAGE


class TestParser:
    """Tests for argument parsing."""

    def test_unknown_subcommand(self) -> None:
        """Test an unknown subcommand is a usage error."""
        assert main(["simulate"]) == EXIT_USAGE

    def test_help(self, capsys) -> None:
        """Test --help exits cleanly."""
        assert main(["--help"]) == EXIT_OK
        assert "experiment" in capsys.readouterr().out
