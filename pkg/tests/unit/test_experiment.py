"""Unit tests for scenario and experiment runners."""

import math
from pathlib import Path

import pytest

from mkg_lib_autoscale.experiment import (
    RESULT_COLUMNS,
    build_workload,
    format_ci,
    run_experiment,
    run_scenario,
)
from mkg_lib_autoscale.models.config import (
    ExperimentSpec,
    PolicySettings,
    ReplicationSettings,
    RunConfig,
    SimConfig,
    WorkloadSource,
)
from mkg_lib_autoscale.models.workload import SyntheticSpec
from mkg_lib_autoscale.workload import generate_synthetic, write_class_manifest, write_trace

SYNTHETIC = SyntheticSpec(duration_s=600.0, base_rate=4.0)


def _config(policy: str = "load") -> RunConfig:
    return RunConfig(
        run_id="t",
        policy=policy,
        seed=5,
        workload=WorkloadSource(synthetic=SYNTHETIC),
    )


class TestBuildWorkload:
    """Tests for build_workload."""

    def test_synthetic_uses_seed(self) -> None:
        """Test synthetic workloads are regenerated per seed."""
        source = WorkloadSource(synthetic=SYNTHETIC)

        first, _ = build_workload(source, 1)
        again, _ = build_workload(source, 1)
        other, _ = build_workload(source, 2)

        assert first == again
        assert first != other

    def test_trace_resampling(self, tmp_path: Path) -> None:
        """Test a trace keeps its items and optionally redraws demands."""
        items, classes = generate_synthetic(SYNTHETIC)
        write_trace(tmp_path / "trace.csv", items)
        write_class_manifest(tmp_path / "trace.classes.csv", classes)
        fixed = WorkloadSource(
            trace=tmp_path / "trace.csv", classes=tmp_path / "trace.classes.csv"
        )
        resampled = fixed.model_copy(update={"resample_cycles": True})

        a, _ = build_workload(fixed, 1)
        b, _ = build_workload(fixed, 2)
        c, _ = build_workload(resampled, 1)
        d, _ = build_workload(resampled, 2)

        assert [i.cycles_required for i in a] == [i.cycles_required for i in b]
        assert [i.id for i in c] == [i.id for i in a]
        assert [i.cycles_required for i in c] != [i.cycles_required for i in d]


class TestRunScenario:
    """Tests for run_scenario."""

    @pytest.mark.parametrize("policy", ["static", "threshold", "load", "appdata"])
    def test_every_policy_runs(self, policy: str) -> None:
        """Test each built-in policy completes a small scenario."""
        outcome = run_scenario(_config(policy))

        metrics = outcome.metrics
        assert outcome.simulation.policy_name in {"static", "threshold", "load", "appdata"}
        assert 0.0 <= metrics.sla_violation_fraction <= 1.0
        assert metrics.cpu_hours > 0.0
        assert metrics.completed == len(outcome.simulation.items)

    def test_deterministic(self) -> None:
        """Test the same config and seed give the same metrics."""
        first = run_scenario(_config()).metrics
        second = run_scenario(_config()).metrics

        assert first.cpu_hours == second.cpu_hours
        assert first.latencies.tolist() == second.latencies.tolist()

    def test_seed_override(self) -> None:
        """Test an explicit seed replaces the config seed."""
        default = run_scenario(_config()).simulation.items
        overridden = run_scenario(_config(), seed=99).simulation.items

        assert [i.post_time for i in default] != [i.post_time for i in overridden]


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_writes_results(self, tmp_path: Path) -> None:
        """Test one results row per combo in matrix order."""
        spec = ExperimentSpec(
            name="unit",
            sim=SimConfig(),
            workload=WorkloadSource(synthetic=SYNTHETIC),
            policies=[PolicySettings(policy="static"), PolicySettings(policy="load")],
            replication=ReplicationSettings(min_reps=2, max_reps=3, metric="cpu_hours"),
        )

        results = run_experiment(spec, tmp_path)

        assert [r.policy for r in results] == ["static", "load"]
        assert all(2 <= r.replications <= 3 for r in results)
        lines = (tmp_path / "results.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(RESULT_COLUMNS)
        assert len(lines) == 3
        assert lines[1].startswith("static,,")


class TestFormatCi:
    """Tests for format_ci."""

    def test_formats(self) -> None:
        """Test finite and infinite half-widths."""
        assert format_ci(1.5, 0.25) == "1.5 ± 0.25"
        assert format_ci(1.5, math.inf) == "1.5"
