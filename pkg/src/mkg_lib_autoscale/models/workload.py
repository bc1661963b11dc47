"""Workload value types: items, classes and generator/conversion settings."""

import math
from dataclasses import dataclass
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from mkg_lib_autoscale.dist import ServiceDemand, Weibull, ZeroDemand

SENTIMENT_TOLERANCE = 1e-9
PROPORTION_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True)
class SentimentTriple:
    """Classifier probabilities that an item is positive, negative or neutral.

    Raises:
        ValueError: If a component lies outside [0, 1] or the components do
            not sum to 1 within 1e-9.
    """

    p_pos: float
    p_neg: float
    p_neu: float

    def __post_init__(self) -> None:
        for name in ("p_pos", "p_neg", "p_neu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.p_pos + self.p_neg + self.p_neu - 1.0) > SENTIMENT_TOLERANCE:
            raise ValueError("sentiment does not sum to 1")

    @property
    def score(self) -> float:
        """Probability of being non-neutral, `p_pos + p_neg`."""
        return self.p_pos + self.p_neg


@dataclass(slots=True)
class WorkItem:
    """One streamed unit of work.

    Attributes:
        id: Unique identifier.
        post_time: Seconds, epoch-relative.
        class_id: Reference to a WorkloadClass.
        cycles_required: Total service demand in CPU cycles.
        cycles_remaining: Cycles still to be processed.
        sentiment: Application signal carried by the item.
        completion_time: End of the step in which the item finished.
    """

    id: str
    post_time: float
    class_id: str
    cycles_required: float
    cycles_remaining: float
    sentiment: SentimentTriple
    completion_time: float | None = None

    def __post_init__(self) -> None:
        if self.post_time < 0 or self.cycles_required < 0:
            raise ValueError(f"item {self.id}: negative post time or cycles")
        if not 0 <= self.cycles_remaining <= self.cycles_required:
            raise ValueError(f"item {self.id}: cycles_remaining out of range")

    @property
    def latency(self) -> float | None:
        if self.completion_time is None:
            return None
        return self.completion_time - self.post_time


class WorkloadClass(BaseModel):
    """A path through the processing pipeline with its demand distribution."""

    class_id: str = Field(min_length=1)
    name: str = ""
    demand_dist: ServiceDemand = Field(description="Service demand in cycles")
    proportion: float = Field(ge=0.0, le=1.0, allow_inf_nan=False)

    model_config = ConfigDict(frozen=True, extra="forbid")


def check_proportions(classes: list[WorkloadClass]) -> None:
    """Raise ValueError unless class proportions sum to 1 within 1e-9."""
    if not classes:
        return
    total = math.fsum(c.proportion for c in classes)
    if abs(total - 1.0) > PROPORTION_TOLERANCE:
        raise ValueError(f"class proportions sum to {total}, expected 1")
    ids = [c.class_id for c in classes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate class_id")


class ConversionContext(BaseModel):
    """Reference measurement used to turn processing delays into cycles.

    Defaults are the measured reference cluster: 2.6 GHz cores at 97.95%
    average utilization with 15,875.32 items in the system on average.
    """

    f_ref_hz: float = Field(default=2.6e9, gt=0, allow_inf_nan=False)
    utilization: float = Field(default=0.9795, gt=0, le=1, allow_inf_nan=False)
    l_avg: float = Field(default=15875.32, ge=1, allow_inf_nan=False)

    model_config = ConfigDict(frozen=True, extra="forbid")


class BurstEvent(BaseModel):
    """One volume burst of a synthetic workload.

    The total arrival rate rises linearly from the base rate to `peak_rate`
    over `rise_s` starting at `event_time_s`, then the excess decays
    exponentially with time constant `decay_s`.
    """

    event_time_s: float = Field(ge=0, allow_inf_nan=False)
    peak_rate: float = Field(ge=0, allow_inf_nan=False)
    rise_s: float = Field(default=60.0, gt=0, allow_inf_nan=False)
    decay_s: float = Field(default=300.0, gt=0, allow_inf_nan=False)

    model_config = ConfigDict(frozen=True, extra="forbid")


def default_classes() -> list[WorkloadClass]:
    """Zero / filtered / analyzed mix, derived from synthetic fits."""
    return [
        WorkloadClass(
            class_id="zero", name="dropped early", demand_dist=ZeroDemand(), proportion=0.3
        ),
        WorkloadClass(
            class_id="filtered",
            name="filtered",
            demand_dist=Weibull(shape=2.0, scale=2.0e8),
            proportion=0.4,
        ),
        WorkloadClass(
            class_id="analyzed",
            name="sentiment analyzed",
            demand_dist=Weibull(shape=1.5, scale=5.0e8),
            proportion=0.3,
        ),
    ]


class SyntheticSpec(BaseModel):
    """Parameters of the bursty synthetic workload generator."""

    duration_s: float = Field(ge=0, allow_inf_nan=False)
    base_rate: float = Field(ge=0, allow_inf_nan=False, description="Items per second")
    bursts: list[BurstEvent] = Field(default_factory=list)
    signal_lead_s: float = Field(default=90.0, ge=0, allow_inf_nan=False)
    baseline_sentiment_mean: float = Field(default=0.15, ge=0, le=1)
    sentiment_sd: float = Field(default=0.05, ge=0, allow_inf_nan=False)
    burst_sentiment_mean: float = Field(default=0.9, ge=0, le=1)
    base_amplitude: float = Field(default=0.0, ge=0, lt=1)
    base_period_s: float = Field(default=3600.0, gt=0, allow_inf_nan=False)
    classes: list[WorkloadClass] = Field(default_factory=default_classes, min_length=1)
    rng_seed: int = 0

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_consistency(self) -> Self:
        for burst in self.bursts:
            if burst.event_time_s > self.duration_s:
                raise ValueError(
                    f"burst at {burst.event_time_s} s lies outside [0, {self.duration_s}]"
                )
        check_proportions(self.classes)
        return self
