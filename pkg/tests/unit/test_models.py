"""Unit tests for workload and configuration models."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from mkg_lib_autoscale.dist import Weibull, ZeroDemand
from mkg_lib_autoscale.models import (
    AppdataPolicyCfg,
    BurstEvent,
    ExperimentSpec,
    LoadPolicyCfg,
    RunConfig,
    SentimentTriple,
    SimConfig,
    SyntheticSpec,
    ThresholdPolicyCfg,
    WorkItem,
    WorkloadClass,
)
from mkg_lib_autoscale.models.config import PolicySettings, WorkloadSource


def _class(class_id: str, proportion: float) -> WorkloadClass:
    return WorkloadClass(
        class_id=class_id,
        demand_dist=Weibull(shape=1.0, scale=1e8),
        proportion=proportion,
    )


class TestSentimentTriple:
    """Tests for SentimentTriple."""

    def test_valid_triple(self) -> None:
        """Test a valid triple and its score."""
        triple = SentimentTriple(p_pos=0.5, p_neg=0.2, p_neu=0.3)

        assert triple.score == pytest.approx(0.7)

    def test_must_sum_to_one(self) -> None:
        """Test components summing above 1 are rejected."""
        with pytest.raises(ValueError, match="sentiment does not sum to 1"):
            SentimentTriple(p_pos=0.5, p_neg=0.6, p_neu=0.1)

    def test_component_range(self) -> None:
        """Test components must lie in [0, 1]."""
        with pytest.raises(ValueError):
            SentimentTriple(p_pos=-0.1, p_neg=0.6, p_neu=0.5)

    def test_is_immutable(self) -> None:
        """Test triples cannot be modified."""
        triple = SentimentTriple(p_pos=0.0, p_neg=0.0, p_neu=1.0)

        with pytest.raises(AttributeError):
            triple.p_pos = 1.0  # type: ignore[misc]


class TestWorkItem:
    """Tests for WorkItem."""

    def test_latency(self) -> None:
        """Test latency is completion minus post time."""
        item = WorkItem(
            id="a",
            post_time=10.0,
            class_id="c",
            cycles_required=5.0,
            cycles_remaining=5.0,
            sentiment=SentimentTriple(0.0, 0.0, 1.0),
        )

        assert item.latency is None
        item.completion_time = 12.5
        assert item.latency == pytest.approx(2.5)

    def test_remaining_cannot_exceed_required(self) -> None:
        """Test cycles_remaining is bounded by cycles_required."""
        with pytest.raises(ValueError):
            WorkItem(
                id="a",
                post_time=0.0,
                class_id="c",
                cycles_required=5.0,
                cycles_remaining=6.0,
                sentiment=SentimentTriple(0.0, 0.0, 1.0),
            )

    def test_negative_post_time(self) -> None:
        """Test negative post times are rejected."""
        with pytest.raises(ValueError):
            WorkItem(
                id="a",
                post_time=-1.0,
                class_id="c",
                cycles_required=0.0,
                cycles_remaining=0.0,
                sentiment=SentimentTriple(0.0, 0.0, 1.0),
            )


class TestSyntheticSpec:
    """Tests for SyntheticSpec validation."""

    def test_default_classes_sum_to_one(self) -> None:
        """Test the default class mix is a valid distribution."""
        spec = SyntheticSpec(duration_s=100.0, base_rate=1.0)

        assert sum(c.proportion for c in spec.classes) == pytest.approx(1.0)
        assert any(isinstance(c.demand_dist, ZeroDemand) for c in spec.classes)

    def test_burst_outside_duration(self) -> None:
        """Test bursts must lie within the generated window."""
        with pytest.raises(ValidationError, match="outside"):
            SyntheticSpec(
                duration_s=100.0,
                base_rate=1.0,
                bursts=[BurstEvent(event_time_s=200.0, peak_rate=10.0)],
            )

    def test_proportions_must_sum_to_one(self) -> None:
        """Test class proportions are checked."""
        with pytest.raises(ValidationError, match="proportions"):
            SyntheticSpec(
                duration_s=10.0,
                base_rate=1.0,
                classes=[_class("a", 0.5), _class("b", 0.4)],
            )

    def test_duplicate_class_ids(self) -> None:
        """Test class ids must be unique."""
        with pytest.raises(ValidationError, match="duplicate"):
            SyntheticSpec(
                duration_s=10.0,
                base_rate=1.0,
                classes=[_class("a", 0.5), _class("a", 0.5)],
            )


class TestSimConfig:
    """Tests for SimConfig."""

    def test_defaults(self) -> None:
        """Test defaults match the basic scenario configuration."""
        cfg = SimConfig()

        assert cfg.cpu_freq_hz == 2.0e9
        assert cfg.starting_cpus == 1
        assert cfg.step_s == 1.0
        assert cfg.sla_s == 300.0
        assert cfg.adapt_period_s == 60.0
        assert cfg.provisioning_delay_s == 60.0
        assert cfg.input_rate_cap is None
        assert cfg.adapt_steps == 60

    def test_adapt_period_must_be_multiple_of_step(self) -> None:
        """Test a period that is not a whole number of steps is rejected."""
        with pytest.raises(ValidationError, match="multiple"):
            SimConfig(step_s=0.7, adapt_period_s=60.0)

    def test_network_delay_must_be_zero(self) -> None:
        """Test a non-zero network delay is rejected."""
        with pytest.raises(ValidationError):
            SimConfig(network_delay_s=1.0)

    def test_unknown_field(self) -> None:
        """Test unknown keys are rejected."""
        with pytest.raises(ValidationError):
            SimConfig.model_validate({"cpus": 4})


class TestPolicyConfigs:
    """Tests for policy parameter models."""

    def test_threshold_aliases(self) -> None:
        """Test thresholds accept the short `upper`/`lower` keys."""
        cfg = ThresholdPolicyCfg.model_validate({"upper": 0.7, "lower": 0.3})

        assert cfg.upper_threshold == 0.7
        assert cfg.lower_threshold == 0.3

    def test_threshold_order(self) -> None:
        """Test lower must be below upper."""
        with pytest.raises(ValidationError, match="below"):
            ThresholdPolicyCfg(upper_threshold=0.5, lower_threshold=0.6)

    def test_load_needs_classes(self) -> None:
        """Test a load policy needs at least one class."""
        with pytest.raises(ValidationError):
            LoadPolicyCfg(quantile=0.9, classes=[])

    def test_appdata_cooldown_defaults_to_window(self) -> None:
        """Test the cooldown falls back to the window length."""
        assert AppdataPolicyCfg(window_s=90.0).effective_cooldown_s == 90.0
        assert AppdataPolicyCfg(cooldown_s=10.0).effective_cooldown_s == 10.0

    def test_appdata_hold(self) -> None:
        """Test the hold defaults to 300 s and must not be negative."""
        assert AppdataPolicyCfg().hold_s == 300.0
        with pytest.raises(ValidationError):
            AppdataPolicyCfg(hold_s=-1.0)

    def test_params_description(self) -> None:
        """Test the compact parameter description of each policy."""
        assert PolicySettings(policy="threshold").params() == "upper=0.8"
        assert PolicySettings(policy="load").params() == "quantile=0.99999"
        assert (
            PolicySettings(policy="appdata").params()
            == "quantile=0.99999;window_s=120;extra_cpus=1"
        )
        assert PolicySettings(policy="static").params() == ""


class TestWorkloadSource:
    """Tests for WorkloadSource."""

    def test_needs_exactly_one_source(self) -> None:
        """Test trace and synthetic are mutually exclusive."""
        with pytest.raises(ValidationError, match="exactly one"):
            WorkloadSource()
        with pytest.raises(ValidationError, match="exactly one"):
            WorkloadSource(
                trace=Path("t.csv"),
                synthetic=SyntheticSpec(duration_s=1.0, base_rate=1.0),
            )

    def test_resolved_anchors_relative_paths(self, tmp_path: Path) -> None:
        """Test relative paths are anchored and absolute paths kept."""
        absolute = tmp_path / "abs.classes.csv"
        source = WorkloadSource(trace=Path("t.csv"), classes=absolute)

        resolved = source.resolved(tmp_path)

        assert resolved.trace == tmp_path / "t.csv"
        assert resolved.classes == absolute


class TestExperimentSpec:
    """Tests for ExperimentSpec."""

    def test_run_config_per_combo(self) -> None:
        """Test each combo becomes a RunConfig sharing the experiment settings."""
        spec = ExperimentSpec(
            name="sweep",
            seed=5,
            sim=SimConfig(sla_s=120.0),
            workload=WorkloadSource(
                synthetic=SyntheticSpec(duration_s=10.0, base_rate=1.0)
            ),
            policies=[
                PolicySettings(policy="threshold", threshold=ThresholdPolicyCfg(upper_threshold=0.9)),
                PolicySettings(policy="load"),
            ],
        )

        config = spec.run_config(spec.policies[0], 0)

        assert isinstance(config, RunConfig)
        assert config.run_id == "sweep-000"
        assert config.seed == 5
        assert config.sim.sla_s == 120.0
        assert config.policy == "threshold"
        assert config.threshold.upper_threshold == 0.9

    def test_needs_a_policy(self) -> None:
        """Test an empty policy matrix is rejected."""
        with pytest.raises(ValidationError):
            ExperimentSpec(
                workload=WorkloadSource(
                    synthetic=SyntheticSpec(duration_s=10.0, base_rate=1.0)
                ),
                policies=[],
            )
