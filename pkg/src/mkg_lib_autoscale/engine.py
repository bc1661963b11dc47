"""Discrete-time simulation engine.

Each step of `step_s` seconds runs, in order:

1. fold pending CPUs whose provisioning delay has passed;
2. admit items posted during the step, up to the input-rate cap;
3. share the step's CPU cycles among the processing set;
4. harvest completed items;
5. at adaptation boundaries, fold CPUs due by the end of the step, then ask
   the policy for a decision and actuate it;
6. advance the clock.

The clock starts at the post time of the first item.
"""

import csv
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import TracebackType

import numpy as np
from numpy.typing import NDArray

from mkg_lib_autoscale.analytics import SentimentBuffer
from mkg_lib_autoscale.exceptions import InsufficientDataError
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.config import SimConfig
from mkg_lib_autoscale.models.workload import WorkItem, WorkloadClass
from mkg_lib_autoscale.policies import PolicyObservation, ScaleDecision, ScalingPolicy
from mkg_lib_autoscale.workload import format_seconds

logger = get_logger(__name__, component="engine")

CPU_FLOOR = 1


@dataclass(frozen=True)
class SimEvent:
    """One line of the event log."""

    clock_s: float
    event: str
    item_id: str = ""
    detail: str = ""


EventSink = Callable[[SimEvent], None]


class EventLogWriter:
    """Event sink writing `clock_s,event,item_id,detail` lines to a file.

    Example:
        ```python
        with EventLogWriter("events.csv") as sink:
            Simulation(items, config, policy, event_sink=sink).run()
        ```
    """

    HEADER = ("clock_s", "event", "item_id", "detail")

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(self.HEADER)

    def __call__(self, event: SimEvent) -> None:
        self._writer.writerow(
            [format_seconds(event.clock_s), event.event, event.item_id, event.detail]
        )

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        self.close()


def allocate_cycles(
    remaining: NDArray[np.float64], budget: float
) -> tuple[NDArray[np.float64], float]:
    """Share `budget` cycles among items sorted ascending by remaining cycles.

    Every item is offered an equal share. An item needing less than its
    share finishes, and the excess is split equally among the items not
    yet visited.

    Returns:
        New remaining cycles (same order) and the cycles left idle.
    """
    out = np.array(remaining, dtype=np.float64)
    n = out.size
    if n == 0:
        return out, budget
    share = budget / n
    to_process = n
    i = 0
    while i < n and out[i] < share:
        excess = share - out[i]
        out[i] = 0.0
        to_process -= 1
        if to_process == 0:
            return out, float(excess)
        share += excess / to_process
        i += 1
    out[i:] -= share
    return out, 0.0


@dataclass(frozen=True)
class CycleDistribution:
    """Outcome of one step of cycle sharing."""

    completed: list[WorkItem]
    consumed: float
    idle: float


def distribute_cycles(
    items: Sequence[WorkItem],
    cycles_per_step: float,
    completion_time: float,
) -> CycleDistribution:
    """Apply one step of cycle sharing to `items` in place.

    Ties in remaining cycles are broken by post time, then id. Items that
    reach zero are stamped with `completion_time` and returned in post
    order.
    """
    order = sorted(items, key=lambda it: (it.cycles_remaining, it.post_time, it.id))
    remaining = np.fromiter(
        (it.cycles_remaining for it in order), dtype=np.float64, count=len(order)
    )
    updated, idle = allocate_cycles(remaining, cycles_per_step)
    completed: list[WorkItem] = []
    for item, value in zip(order, updated, strict=True):
        if value <= 0.0:
            item.cycles_remaining = 0.0
            item.completion_time = completion_time
            completed.append(item)
        else:
            item.cycles_remaining = float(value)
    completed.sort(key=lambda it: (it.post_time, it.id))
    return CycleDistribution(completed, cycles_per_step - idle, idle)


@dataclass(frozen=True)
class PendingAllocation:
    available_at_s: float
    cpu_count: int


class ClusterState:
    """Active CPUs, pending allocations and per-step cycle accounting."""

    def __init__(
        self,
        active_cpus: int = 1,
        freq_hz: float = 2.0e9,
        event_sink: EventSink | None = None,
    ) -> None:
        if active_cpus < CPU_FLOOR:
            raise ValueError(f"active_cpus must be at least {CPU_FLOOR}")
        self.active_cpus = active_cpus
        self.freq_hz = freq_hz
        self.pending: list[PendingAllocation] = []
        self.cycles_available: list[float] = []
        self.cycles_consumed: list[float] = []
        self._event_sink = event_sink
        self._clamp_reported = False

    @property
    def pending_cpus(self) -> int:
        return sum(p.cpu_count for p in self.pending)

    def cycles_per_step(self, step_s: float) -> float:
        return self.active_cpus * self.freq_hz * step_s

    def _emit(self, clock_s: float, event: str, detail: str) -> None:
        if self._event_sink is not None:
            self._event_sink(SimEvent(clock_s, event, "", detail))

    def fold_pending(self, clock_s: float) -> int:
        """Activate pending CPUs with `available_at_s <= clock_s`."""
        matured = [p for p in self.pending if p.available_at_s <= clock_s]
        if not matured:
            return 0
        self.pending = [p for p in self.pending if p.available_at_s > clock_s]
        count = sum(p.cpu_count for p in matured)
        self.active_cpus += count
        self._emit(clock_s, "cpus_ready", f"cpus={count};active={self.active_cpus}")
        return count

    def actuate(
        self, decision: ScaleDecision, clock_s: float, provisioning_delay_s: float
    ) -> None:
        """Apply a decision: scale-out waits for provisioning, scale-in is immediate.

        Scale-in never goes below one CPU; a clamped request is logged.
        """
        delta = decision.delta_cpus
        if delta > 0:
            available_at = clock_s + provisioning_delay_s
            self.pending.append(PendingAllocation(available_at, delta))
            self._emit(
                clock_s,
                "scale_out_requested",
                f"cpus={delta};available_at={format_seconds(available_at)}",
            )
            logger.debug(
                "scale_out_requested",
                clock_s=clock_s,
                cpus=delta,
                available_at_s=available_at,
                reason=decision.reason,
            )
        elif delta < 0:
            target = self.active_cpus + delta
            if target < CPU_FLOOR:
                log = logger.debug if self._clamp_reported else logger.warning
                log(
                    "scale_in_clamped",
                    clock_s=clock_s,
                    requested=delta,
                    active_cpus=self.active_cpus,
                )
                self._clamp_reported = True
                self._emit(clock_s, "scale_in_clamped", f"requested={delta}")
                target = CPU_FLOOR
            released = self.active_cpus - target
            if released:
                self.active_cpus = target
                self._emit(clock_s, "scale_in", f"cpus={released};active={target}")

    def record_step(self, available: float, consumed: float) -> None:
        self.cycles_available.append(available)
        self.cycles_consumed.append(consumed)

    def usage(self, window_steps: int) -> float:
        """Consumed over available cycles across the last `window_steps` steps.

        Raises:
            InsufficientDataError: If no step has been recorded.
        """
        if window_steps < 1 or not self.cycles_available:
            raise InsufficientDataError("usage window covers no completed step")
        available = math.fsum(self.cycles_available[-window_steps:])
        consumed = math.fsum(self.cycles_consumed[-window_steps:])
        return min(1.0, consumed / available) if available > 0 else 0.0


@dataclass
class ClusterTimeline:
    """Per-step record of a run; index i is the step starting at `clock_s[i]`."""

    step_s: float
    clock_s: list[float] = field(default_factory=list)
    active_cpus: list[int] = field(default_factory=list)
    cycles_available: list[float] = field(default_factory=list)
    cycles_consumed: list[float] = field(default_factory=list)
    arrivals: list[int] = field(default_factory=list)
    in_system: list[int] = field(default_factory=list)
    queue_length: list[int] = field(default_factory=list)
    occupancy_s: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.clock_s)


class EngineState:
    """Clock, input queue and processing set of one run.

    Items are kept in post order. The input queue is the index range
    `[admitted, arrived)`; the processing set holds item indices with their
    remaining cycles, in post order.
    """

    def __init__(self, items: Sequence[WorkItem]) -> None:
        self.items = sorted(items, key=lambda it: (it.post_time, it.id))
        for item in self.items:
            item.cycles_remaining = item.cycles_required
            item.completion_time = None
        count = len(self.items)
        self.post_times = np.fromiter(
            (it.post_time for it in self.items), dtype=np.float64, count=count
        )
        self.demands = np.fromiter(
            (it.cycles_required for it in self.items), dtype=np.float64, count=count
        )
        self.clock_s = float(self.post_times[0]) if count else 0.0
        self.arrived = 0
        self.admitted = 0
        self.admit_credit = 0.0
        self.proc_index = np.empty(0, dtype=np.int64)
        self.proc_remaining = np.empty(0, dtype=np.float64)
        self.completed_log: list[WorkItem] = []

    @property
    def input_queue_length(self) -> int:
        return self.arrived - self.admitted

    @property
    def in_system_count(self) -> int:
        return self.input_queue_length + int(self.proc_index.size)

    @property
    def input_queue(self) -> list[WorkItem]:
        return self.items[self.admitted : self.arrived]

    @property
    def processing_set(self) -> list[WorkItem]:
        self.sync_remaining()
        return [self.items[i] for i in self.proc_index]

    @property
    def drained(self) -> bool:
        return self.admitted == len(self.items) and self.proc_index.size == 0

    def sync_remaining(self) -> None:
        """Copy the remaining cycles of the processing set onto its items."""
        for i, value in zip(self.proc_index, self.proc_remaining, strict=True):
            self.items[i].cycles_remaining = float(value)

    def arrive(self, until_s: float) -> int:
        """Enqueue every item posted before `until_s`; returns the new arrivals."""
        reached = int(np.searchsorted(self.post_times, until_s, side="left"))
        new = max(0, reached - self.arrived)
        self.arrived = max(self.arrived, reached)
        return new


def admit(state: EngineState, arrivals_until_s: float, cap_per_step: float | None) -> int:
    """Move arrivals into the input queue, then admit from its head.

    At most `cap_per_step` items are admitted; fractional allowance carries
    over to the next step. None admits the whole queue.
    """
    state.arrive(arrivals_until_s)
    queued = state.input_queue_length
    if cap_per_step is None:
        count = queued
    else:
        allowance = state.admit_credit + cap_per_step
        whole = math.floor(allowance + 1e-9)
        count = min(queued, whole)
        state.admit_credit = max(0.0, allowance - whole)
    if count:
        new_index = np.arange(state.admitted, state.admitted + count, dtype=np.int64)
        state.proc_index = np.concatenate((state.proc_index, new_index))
        state.proc_remaining = np.concatenate(
            (state.proc_remaining, state.demands[new_index])
        )
        state.admitted += count
    return count


@dataclass
class SimulationResult:
    """Everything a finished run leaves behind."""

    items: list[WorkItem]
    completed: list[WorkItem]
    timeline: ClusterTimeline
    start_clock_s: float
    end_clock_s: float
    config: SimConfig
    policy_name: str


class Simulation:
    """One deterministic run of a workload under a scaling policy.

    Example:
        ```python
        sim = Simulation(items, SimConfig(), LoadPolicy(load_cfg), classes)
        result = sim.run()
        ```
    """

    def __init__(
        self,
        items: Sequence[WorkItem],
        config: SimConfig,
        policy: ScalingPolicy,
        classes: Sequence[WorkloadClass] = (),
        event_sink: EventSink | None = None,
    ) -> None:
        self.config = config
        self.policy = policy
        self.state = EngineState(items)
        self.cluster = ClusterState(config.starting_cpus, config.cpu_freq_hz, event_sink)
        self.start_clock_s = self.state.clock_s
        self.sentiment = SentimentBuffer(self.start_clock_s, config.step_s)
        self.timeline = ClusterTimeline(config.step_s)
        self.steps = 0
        self._event_sink = event_sink
        self._proportions = {c.class_id: c.proportion for c in classes}
        self._scores = np.fromiter(
            (it.sentiment.score for it in self.state.items),
            dtype=np.float64,
            count=len(self.state.items),
        )
        self._cap_per_step = (
            None
            if config.input_rate_cap is None
            else config.input_rate_cap * config.step_s
        )

    def _emit(self, event: SimEvent) -> None:
        if self._event_sink is not None:
            self._event_sink(event)

    def _distribute(self, budget: float) -> tuple[float, NDArray[np.int64]]:
        state = self.state
        if state.proc_index.size == 0:
            return 0.0, np.empty(0, dtype=np.int64)
        order = np.lexsort((state.proc_index, state.proc_remaining))
        updated_sorted, idle = allocate_cycles(state.proc_remaining[order], budget)
        updated = np.empty_like(updated_sorted)
        updated[order] = updated_sorted
        done = updated <= 0.0
        finished = state.proc_index[done]
        state.proc_index = state.proc_index[~done]
        state.proc_remaining = updated[~done]
        return max(0.0, budget - idle), finished

    def _harvest(self, finished: NDArray[np.int64], completion_time: float) -> None:
        state = self.state
        for i in finished:
            item = state.items[i]
            item.cycles_remaining = 0.0
            item.completion_time = completion_time
            state.completed_log.append(item)
            self.sentiment.add(item.post_time, float(self._scores[i]))
            if self._event_sink is not None:
                self._event_sink(
                    SimEvent(
                        completion_time,
                        "complete",
                        item.id,
                        f"latency={format_seconds(completion_time - item.post_time)}",
                    )
                )

    def _observe(self, clock_s: float) -> PolicyObservation:
        return PolicyObservation(
            clock_s=clock_s,
            current_cpus=self.cluster.active_cpus,
            cpu_usage_window=self.cluster.usage(self.config.adapt_steps),
            in_system_count=self.state.in_system_count,
            sla_s=self.config.sla_s,
            freq_hz=self.config.cpu_freq_hz,
            class_proportions=self._proportions,
            completed_sentiment_stream=self.sentiment,
            pending_cpus=self.cluster.pending_cpus,
        )

    def step(self) -> None:
        """Advance the simulation by one step."""
        cfg = self.config
        state = self.state
        clock = state.clock_s
        end = self.start_clock_s + (self.steps + 1) * cfg.step_s

        self.cluster.fold_pending(clock)

        carried = state.in_system_count
        first_new = state.arrived
        admitted_before = state.admitted
        admitted = admit(state, end, self._cap_per_step)
        arrivals = state.arrived - first_new
        occupancy = cfg.step_s * carried + float(
            np.sum(end - state.post_times[first_new : state.arrived])
        )
        if self._event_sink is not None:
            for i in range(admitted_before, admitted_before + admitted):
                self._emit(SimEvent(clock, "admit", state.items[i].id))

        budget = self.cluster.cycles_per_step(cfg.step_s)
        consumed, finished = self._distribute(budget)
        self._harvest(finished, end)
        self.cluster.record_step(budget, consumed)

        timeline = self.timeline
        timeline.clock_s.append(clock)
        timeline.active_cpus.append(self.cluster.active_cpus)
        timeline.cycles_available.append(budget)
        timeline.cycles_consumed.append(consumed)
        timeline.arrivals.append(arrivals)
        timeline.in_system.append(state.in_system_count)
        timeline.queue_length.append(state.input_queue_length)
        timeline.occupancy_s.append(occupancy)

        self.steps += 1
        if self.steps % cfg.adapt_steps == 0:
            # CPUs due at the boundary count for the decision taken there.
            self.cluster.fold_pending(end)
            decision = self.policy.decide(self._observe(end))
            if decision.delta_cpus:
                logger.debug(
                    "scale_decision",
                    clock_s=end,
                    delta_cpus=decision.delta_cpus,
                    active_cpus=self.cluster.active_cpus,
                    reason=decision.reason,
                )
            self.cluster.actuate(decision, end, cfg.provisioning_delay_s)
        state.clock_s = end

    def run_steps(self, count: int) -> None:
        for _ in range(count):
            self.step()

    def _finished(self) -> bool:
        horizon = self.config.horizon_s
        if horizon is not None:
            return self.steps * self.config.step_s >= horizon - 1e-9
        return self.state.drained

    def run(self) -> SimulationResult:
        """Step until every item is done, or until `horizon_s` if set."""
        logger.info(
            "simulation_started",
            items=len(self.state.items),
            policy=self.policy.policy_name,
            starting_cpus=self.config.starting_cpus,
            horizon_s=self.config.horizon_s,
        )
        while not self._finished():
            self.step()
        self.state.sync_remaining()
        logger.info(
            "simulation_finished",
            steps=self.steps,
            completed=len(self.state.completed_log),
            unfinished=self.state.in_system_count
            + len(self.state.items)
            - self.state.arrived,
            final_cpus=self.cluster.active_cpus,
        )
        return SimulationResult(
            items=self.state.items,
            completed=self.state.completed_log,
            timeline=self.timeline,
            start_clock_s=self.start_clock_s,
            end_clock_s=self.state.clock_s,
            config=self.config,
            policy_name=self.policy.policy_name,
        )
