"""Auto-scaling policies.

Every policy observes a `PolicyObservation` at each adaptation boundary and
answers with a `ScaleDecision`. The decision rules are pure functions; the
policy classes wrap them and keep the little state a rule needs (the last
appdata trigger).
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar

from mkg_lib_autoscale.analytics import SentimentBuffer
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.config import (
    AppdataPolicyCfg,
    LoadPolicyCfg,
    ThresholdPolicyCfg,
)

logger = get_logger(__name__, component="policies")


@dataclass(frozen=True)
class PolicyObservation:
    """What a policy sees at an adaptation boundary.

    Attributes:
        clock_s: Simulation time of the decision.
        current_cpus: Active (provisioned and available) CPUs.
        cpu_usage_window: Consumed over available cycles in the last period.
        in_system_count: Items in the input queue plus the processing set.
        class_proportions: Configured training share of each class.
        completed_sentiment_stream: Scores of completed items by post time.
        sla_s: Latency bound per item.
        freq_hz: Frequency of one CPU.
        pending_cpus: CPUs requested but not yet available.
    """

    clock_s: float
    current_cpus: int
    cpu_usage_window: float
    in_system_count: int
    sla_s: float
    freq_hz: float
    class_proportions: dict[str, float] = field(default_factory=dict)
    completed_sentiment_stream: SentimentBuffer | None = None
    pending_cpus: int = 0

    def __post_init__(self) -> None:
        if self.in_system_count < 0:
            raise ValueError("in_system_count must be non-negative")
        if not 0.0 <= self.cpu_usage_window <= 1.0:
            raise ValueError("cpu_usage_window must lie in [0, 1]")


@dataclass(frozen=True)
class ScaleDecision:
    """Signed CPU change requested by a policy."""

    delta_cpus: int
    reason: str = ""


NO_CHANGE = ScaleDecision(0, "hold")


def threshold_decide(cfg: ThresholdPolicyCfg, obs: PolicyObservation) -> ScaleDecision:
    """+1 above the upper usage threshold, -1 below the lower one, else 0."""
    usage = obs.cpu_usage_window
    if usage > cfg.upper_threshold:
        return ScaleDecision(1, f"usage {usage:.3f} > {cfg.upper_threshold:g}")
    if usage < cfg.lower_threshold:
        return ScaleDecision(-1, f"usage {usage:.3f} < {cfg.lower_threshold:g}")
    return NO_CHANGE


def quantile_demand(cfg: LoadPolicyCfg) -> float:
    """Per-item demand in cycles: class quantiles weighted by proportion."""
    return math.fsum(
        c.proportion * float(c.demand_dist.quantile(cfg.quantile)) for c in cfg.classes
    )


def load_expected_delay(cfg: LoadPolicyCfg, obs: PolicyObservation) -> float:
    """Seconds the active CPUs need to drain every item in the system."""
    if obs.in_system_count == 0:
        return 0.0
    return obs.in_system_count * quantile_demand(cfg) / (obs.current_cpus * obs.freq_hz)


def _load_decision(expected_delay: float, obs: PolicyObservation) -> ScaleDecision:
    if expected_delay > obs.sla_s:
        target = math.ceil(obs.current_cpus * (expected_delay / obs.sla_s))
        return ScaleDecision(
            target - obs.current_cpus,
            f"expected delay {expected_delay:.1f} s > sla, target {target}",
        )
    if expected_delay < obs.sla_s / 2:
        return ScaleDecision(-1, f"expected delay {expected_delay:.1f} s < sla/2")
    return NO_CHANGE


def load_decide(cfg: LoadPolicyCfg, obs: PolicyObservation) -> ScaleDecision:
    """Scale to `ceil(cpus * E / sla)` when E > sla; release one below sla/2."""
    return _load_decision(load_expected_delay(cfg, obs), obs)


def sentiment_jump(cfg: AppdataPolicyCfg, obs: PolicyObservation) -> float | None:
    """Mean score of the last window minus the one before; None if either is empty."""
    stream = obs.completed_sentiment_stream
    if stream is None:
        return None
    recent = stream.window_mean(obs.clock_s - cfg.window_s, obs.clock_s)
    before = stream.window_mean(obs.clock_s - 2 * cfg.window_s, obs.clock_s - cfg.window_s)
    if recent is None or before is None:
        return None
    return recent - before


def appdata_decide(
    cfg: AppdataPolicyCfg,
    obs: PolicyObservation,
    last_trigger_s: float | None = None,
) -> ScaleDecision:
    """+extra_cpus when the windowed sentiment mean jumps by the threshold.

    Windows are keyed by post time, not completion time. A trigger less than
    the cooldown after `last_trigger_s` is suppressed.
    """
    if not cfg.enabled:
        return NO_CHANGE
    jump = sentiment_jump(cfg, obs)
    if jump is None or jump < cfg.sentiment_jump_threshold:
        return NO_CHANGE
    if last_trigger_s is not None and obs.clock_s - last_trigger_s < cfg.effective_cooldown_s:
        return ScaleDecision(0, f"sentiment jump {jump:.3f} in cooldown")
    return ScaleDecision(cfg.extra_cpus, f"sentiment jump {jump:.3f}")


def holding_extra_cpus(
    cfg: AppdataPolicyCfg, clock_s: float, last_trigger_s: float | None
) -> bool:
    """Whether `clock_s` falls in the hold period after the last trigger."""
    return last_trigger_s is not None and clock_s - last_trigger_s < cfg.hold_s


def combine_decisions(
    load: ScaleDecision, appdata: ScaleDecision, holding: bool = False
) -> ScaleDecision:
    """Scale-outs add; an appdata trigger overrides a load scale-in.

    While `holding`, a load scale-in is withheld.
    """
    if appdata.delta_cpus > 0:
        return ScaleDecision(
            max(load.delta_cpus, 0) + appdata.delta_cpus,
            f"{appdata.reason}; load {load.delta_cpus:+d}",
        )
    if holding and load.delta_cpus < 0:
        return ScaleDecision(0, f"holding appdata CPUs; load {load.delta_cpus:+d}")
    return load


def composite_decide(
    load_cfg: LoadPolicyCfg,
    appdata_cfg: AppdataPolicyCfg,
    obs: PolicyObservation,
    last_trigger_s: float | None = None,
) -> ScaleDecision:
    """Load decision combined with the appdata peak detector."""
    appdata = appdata_decide(appdata_cfg, obs, last_trigger_s)
    if appdata.delta_cpus > 0:
        last_trigger_s = obs.clock_s
    return combine_decisions(
        load_decide(load_cfg, obs),
        appdata,
        holding_extra_cpus(appdata_cfg, obs.clock_s, last_trigger_s),
    )


class ScalingPolicy(ABC):
    """Base class of all scaling policies.

    Subclasses set `policy_name` and implement `decide`.

    Example:
        ```python
        class HoldPolicy(ScalingPolicy):
            policy_name = "hold"

            def decide(self, obs: PolicyObservation) -> ScaleDecision:
                return ScaleDecision(0)
        ```
    """

    policy_name: ClassVar[str] = "base"

    @abstractmethod
    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        """Return the CPU change for this adaptation boundary."""
        ...


class StaticPolicy(ScalingPolicy):
    """Never scales; the cluster keeps its starting CPUs."""

    policy_name = "static"

    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        del obs
        return NO_CHANGE


class ThresholdPolicy(ScalingPolicy):
    policy_name = "threshold"

    def __init__(self, cfg: ThresholdPolicyCfg) -> None:
        self.cfg = cfg

    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        return threshold_decide(self.cfg, obs)


class LoadPolicy(ScalingPolicy):
    """Quantile-based backlog estimator."""

    policy_name = "load"

    def __init__(self, cfg: LoadPolicyCfg) -> None:
        self.cfg = cfg
        self.demand_cycles = quantile_demand(cfg)
        logger.debug(
            "load_policy_initialized",
            quantile=cfg.quantile,
            demand_cycles=self.demand_cycles,
        )

    def expected_delay(self, obs: PolicyObservation) -> float:
        return obs.in_system_count * self.demand_cycles / (obs.current_cpus * obs.freq_hz)

    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        return _load_decision(self.expected_delay(obs), obs)


class AppdataPolicy(ScalingPolicy):
    """Sentiment-jump detector on its own, without a load component."""

    policy_name = "appdata-only"

    def __init__(self, cfg: AppdataPolicyCfg) -> None:
        self.cfg = cfg
        self.last_trigger_s: float | None = None

    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        decision = appdata_decide(self.cfg, obs, self.last_trigger_s)
        if decision.delta_cpus > 0:
            self.last_trigger_s = obs.clock_s
        return decision


class CompositePolicy(ScalingPolicy):
    """Load policy with the appdata detector running alongside."""

    policy_name = "appdata"

    def __init__(self, load_cfg: LoadPolicyCfg, appdata_cfg: AppdataPolicyCfg) -> None:
        self.load = LoadPolicy(load_cfg)
        self.appdata = AppdataPolicy(appdata_cfg)

    def decide(self, obs: PolicyObservation) -> ScaleDecision:
        load = self.load.decide(obs)
        appdata = self.appdata.decide(obs)
        if appdata.delta_cpus > 0:
            logger.info(
                "appdata_triggered",
                clock_s=obs.clock_s,
                extra_cpus=appdata.delta_cpus,
                load_delta=load.delta_cpus,
                reason=appdata.reason,
            )
        holding = holding_extra_cpus(
            self.appdata.cfg, obs.clock_s, self.appdata.last_trigger_s
        )
        return combine_decisions(load, appdata, holding)
