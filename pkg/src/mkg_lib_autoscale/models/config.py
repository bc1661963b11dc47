"""Validated configuration models for simulations, policies and experiments.

Defaults reproduce the basic configuration shared by all scenarios: 2.0 GHz
CPUs, one starting CPU, 1 s steps, a 300 s SLA, 60 s adaptation period and
60 s provisioning delay.
"""

from pathlib import Path
from typing import Literal, Self

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, model_validator

from mkg_lib_autoscale.models.workload import (
    ConversionContext,
    SyntheticSpec,
    WorkloadClass,
    check_proportions,
)

_MULTIPLE_TOLERANCE = 1e-9


class SimConfig(BaseModel):
    """Engine parameters of one simulation run."""

    cpu_freq_hz: float = Field(default=2.0e9, gt=0, allow_inf_nan=False)
    starting_cpus: int = Field(default=1, ge=1)
    step_s: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    sla_s: float = Field(default=300.0, gt=0, allow_inf_nan=False)
    adapt_period_s: float = Field(default=60.0, gt=0, allow_inf_nan=False)
    provisioning_delay_s: float = Field(default=60.0, gt=0, allow_inf_nan=False)
    input_rate_cap: float | None = Field(
        default=None,
        gt=0,
        allow_inf_nan=False,
        description="Items admitted per second; None admits the whole queue",
    )
    network_delay_s: float = Field(default=0.0, ge=0, le=0)
    horizon_s: float | None = Field(
        default=None,
        gt=0,
        allow_inf_nan=False,
        description="Run length from the first post time; None drains every item",
    )

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_adapt_period(self) -> Self:
        ratio = self.adapt_period_s / self.step_s
        if ratio < 1 or abs(ratio - round(ratio)) > _MULTIPLE_TOLERANCE:
            raise ValueError("adapt_period_s must be a positive multiple of step_s")
        return self

    @property
    def adapt_steps(self) -> int:
        return round(self.adapt_period_s / self.step_s)


class ThresholdPolicyCfg(BaseModel):
    """CPU-usage thresholds: scale out above `upper`, in below `lower`."""

    upper_threshold: float = Field(
        default=0.8,
        gt=0,
        le=1,
        validation_alias=AliasChoices("upper", "upper_threshold"),
    )
    lower_threshold: float = Field(
        default=0.5,
        gt=0,
        le=1,
        validation_alias=AliasChoices("lower", "lower_threshold"),
    )

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _check_order(self) -> Self:
        if not self.lower_threshold < self.upper_threshold:
            raise ValueError("lower threshold must be below upper threshold")
        return self


class LoadSettings(BaseModel):
    """Run-config section of the load policy."""

    quantile: float = Field(default=0.99999, gt=0, lt=1)

    model_config = ConfigDict(frozen=True, extra="forbid")


class LoadPolicyCfg(BaseModel):
    """Load policy parameters bound to the workload's demand model."""

    quantile: float = Field(gt=0, lt=1)
    classes: list[WorkloadClass] = Field(min_length=1)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_classes(self) -> Self:
        check_proportions(self.classes)
        return self


class AppdataPolicyCfg(BaseModel):
    """Sentiment-jump detector parameters."""

    window_s: float = Field(default=120.0, gt=0, allow_inf_nan=False)
    sentiment_jump_threshold: float = Field(default=0.5, gt=0, le=1)
    extra_cpus: int = Field(default=1, ge=1)
    cooldown_s: float | None = Field(
        default=None,
        ge=0,
        description="Minimum time between triggers; defaults to window_s",
    )
    hold_s: float = Field(
        default=300.0,
        ge=0,
        allow_inf_nan=False,
        description="Load scale-ins are withheld this long after a trigger",
    )
    enabled: bool = True

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def effective_cooldown_s(self) -> float:
        return self.window_s if self.cooldown_s is None else self.cooldown_s


class PolicySettings(BaseModel):
    """Policy selection plus the parameter sections of every policy."""

    policy: str = "load"
    threshold: ThresholdPolicyCfg = Field(default_factory=ThresholdPolicyCfg)
    load: LoadSettings = Field(default_factory=LoadSettings)
    appdata: AppdataPolicyCfg = Field(default_factory=AppdataPolicyCfg)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def params(self) -> str:
        """Compact `key=value` description of the active policy's parameters."""
        if self.policy == "threshold":
            return f"upper={self.threshold.upper_threshold:g}"
        if self.policy == "load":
            return f"quantile={self.load.quantile:g}"
        if self.policy == "appdata":
            return (
                f"quantile={self.load.quantile:g};"
                f"window_s={self.appdata.window_s:g};"
                f"extra_cpus={self.appdata.extra_cpus}"
            )
        return ""


class WorkloadSource(BaseModel):
    """Either a trace file (with optional class manifest) or a synthetic spec."""

    trace: Path | None = None
    classes: Path | None = None
    conversion: ConversionContext | None = None
    resample_cycles: bool = False
    synthetic: SyntheticSpec | None = None

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_exactly_one(self) -> Self:
        if (self.trace is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'trace' or 'synthetic' must be given")
        return self

    def resolved(self, base_dir: Path) -> "WorkloadSource":
        """Copy with relative file paths anchored at `base_dir`."""
        update: dict[str, Path] = {}
        if self.trace is not None and not self.trace.is_absolute():
            update["trace"] = base_dir / self.trace
        if self.classes is not None and not self.classes.is_absolute():
            update["classes"] = base_dir / self.classes
        return self.model_copy(update=update)


class RunConfig(PolicySettings):
    """Everything needed for one simulation run."""

    run_id: str = "run"
    seed: int = 0
    sim: SimConfig = Field(default_factory=SimConfig)
    workload: WorkloadSource
    warmup_s: float = Field(default=0.0, ge=0, allow_inf_nan=False)


class ReplicationSettings(BaseModel):
    """Confidence-interval stopping rule for replicated scenarios."""

    confidence: float = Field(default=0.95, gt=0, lt=1)
    rel_width: float = Field(default=0.10, gt=0)
    min_reps: int = Field(default=3, ge=2)
    max_reps: int = Field(default=100, ge=2)
    metric: Literal["violation_pct", "cpu_hours"] = "violation_pct"
    max_workers: int = Field(default=1, ge=1)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_bounds(self) -> Self:
        if self.max_reps < self.min_reps:
            raise ValueError("max_reps must be at least min_reps")
        return self


class ExperimentSpec(BaseModel):
    """A policy matrix swept over one workload with replication control."""

    name: str = "experiment"
    seed: int = 0
    sim: SimConfig = Field(default_factory=SimConfig)
    workload: WorkloadSource
    policies: list[PolicySettings] = Field(min_length=1)
    replication: ReplicationSettings = Field(default_factory=ReplicationSettings)
    warmup_s: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    output_dir: Path | None = None

    model_config = ConfigDict(frozen=True, extra="forbid")

    def run_config(self, combo: PolicySettings, index: int) -> RunConfig:
        """Single-run configuration for one policy combo of the matrix."""
        return RunConfig(
            run_id=f"{self.name}-{index:03d}",
            seed=self.seed,
            sim=self.sim,
            workload=self.workload,
            warmup_s=self.warmup_s,
            **combo.model_dump(),
        )
