"""Quality and cost accounting plus replication control.

Quality is the share of items whose latency exceeds the SLA, cost is
CPU-hours. `replicate` repeats a seeded run until the Student-t confidence
interval of the selected metric is narrow enough.
"""

import csv
import math
import os
import tempfile
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Generic, TypeVar

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from mkg_lib_autoscale.engine import ClusterTimeline
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.workload import WorkItem

logger = get_logger(__name__, component="metrics")

T = TypeVar("T")

NEAR_ZERO_MEAN = 1e-12
SUMMARY_COLUMNS = (
    "run_id",
    "policy",
    "params",
    "violation_pct",
    "cpu_hours",
    "L",
    "lambda",
    "W",
)


@dataclass
class RunMetrics:
    """Quality, cost and queueing statistics of one finished run.

    Attributes:
        latencies: Completion minus post time of completed items, post order.
        sla_s: Latency bound used for violations.
        violations: Completed items over the SLA plus unfinished items
            already older than the SLA at the end of the run.
        sla_violation_fraction: violations / (completed + unfinished violators).
        unfinished_excluded: Unfinished items still within the SLA, left out.
        cpu_hours: Sum of step_s * active_cpus / 3600 over all steps.
        mean_in_system: Time average of items in the system (L).
        arrival_rate: Items per second posted in the window (lambda).
        mean_latency: Mean latency of completed items posted in the window (W).
        window_s: Length of the measurement window after warmup.
    """

    latencies: NDArray[np.float64]
    sla_s: float
    violations: int
    completed: int
    unfinished_violations: int
    unfinished_excluded: int
    sla_violation_fraction: float
    cpu_hours: float
    mean_in_system: float
    arrival_rate: float
    mean_latency: float
    window_s: float
    active_cpus: NDArray[np.int64] = field(default_factory=lambda: np.empty(0, np.int64))
    usage: NDArray[np.float64] = field(default_factory=lambda: np.empty(0))
    queue_length: NDArray[np.int64] = field(default_factory=lambda: np.empty(0, np.int64))

    @property
    def violation_pct(self) -> float:
        return 100.0 * self.sla_violation_fraction

    @property
    def littles_law_gap(self) -> float | None:
        """Relative gap |L - lambda * W| / (lambda * W); None when lambda * W is 0."""
        expected = self.arrival_rate * self.mean_latency
        if expected <= 0:
            return None
        return abs(self.mean_in_system - expected) / expected


def finalize(
    items: Sequence[WorkItem],
    timeline: ClusterTimeline,
    sla_s: float,
    end_clock_s: float,
    warmup_s: float = 0.0,
) -> RunMetrics:
    """Compute RunMetrics from a run's items and timeline.

    Violations count every item of the run. L, lambda and W are measured over
    the steps starting at or after `warmup_s` from the first step.
    """
    post = np.fromiter((i.post_time for i in items), dtype=np.float64, count=len(items))
    done = np.fromiter(
        (i.completion_time is not None for i in items), dtype=bool, count=len(items)
    )
    completion = np.fromiter(
        (i.completion_time if i.completion_time is not None else math.nan for i in items),
        dtype=np.float64,
        count=len(items),
    )
    latencies = completion[done] - post[done]

    completed = int(done.sum())
    over_sla = int(np.count_nonzero(latencies > sla_s))
    age = end_clock_s - post[~done]
    unfinished_violations = int(np.count_nonzero(age > sla_s))
    unfinished_excluded = int((~done).sum()) - unfinished_violations
    violations = over_sla + unfinished_violations

    counted = completed + unfinished_violations
    if completed == 0:
        fraction = 1.0 if len(items) else 0.0
    else:
        fraction = violations / counted

    step_s = timeline.step_s
    active = np.asarray(timeline.active_cpus, dtype=np.int64)
    cpu_hours = step_s * float(active.sum()) / 3600.0

    clocks = np.asarray(timeline.clock_s, dtype=np.float64)
    mean_in_system = arrival_rate = mean_latency = window_s = 0.0
    if clocks.size:
        in_window = clocks >= clocks[0] + warmup_s - 1e-9
        if in_window.any():
            window_start = float(clocks[in_window][0])
            window_s = end_clock_s - window_start
            if window_s > 0:
                occupancy = np.asarray(timeline.occupancy_s, dtype=np.float64)
                mean_in_system = float(occupancy[in_window].sum()) / window_s
                posted = (post >= window_start) & (post < end_clock_s)
                arrival_rate = int(posted.sum()) / window_s
                window_latency = completion[posted & done] - post[posted & done]
                mean_latency = float(window_latency.mean()) if window_latency.size else 0.0

    available = np.asarray(timeline.cycles_available, dtype=np.float64)
    consumed = np.asarray(timeline.cycles_consumed, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        usage = np.where(available > 0, consumed / available, 0.0)

    metrics = RunMetrics(
        latencies=latencies,
        sla_s=sla_s,
        violations=violations,
        completed=completed,
        unfinished_violations=unfinished_violations,
        unfinished_excluded=unfinished_excluded,
        sla_violation_fraction=fraction,
        cpu_hours=cpu_hours,
        mean_in_system=mean_in_system,
        arrival_rate=arrival_rate,
        mean_latency=mean_latency,
        window_s=window_s,
        active_cpus=active,
        usage=usage,
        queue_length=np.asarray(timeline.queue_length, dtype=np.int64),
    )
    logger.debug(
        "run_metrics_finalized",
        completed=completed,
        violation_pct=metrics.violation_pct,
        cpu_hours=cpu_hours,
        unfinished_excluded=unfinished_excluded,
    )
    return metrics


def student_t_interval(
    values: Sequence[float] | NDArray[np.float64], confidence: float = 0.95
) -> tuple[float, float]:
    """Sample mean and Student-t confidence half-width.

    The half-width is infinite for fewer than two values.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        return math.nan, math.inf
    mean = float(x.mean())
    if x.size < 2:
        return mean, math.inf
    sd = float(x.std(ddof=1))
    t_crit = float(stats.t.ppf(0.5 + confidence / 2.0, df=x.size - 1))
    return mean, t_crit * sd / math.sqrt(x.size)


def replication_seeds(master_seed: int, count: int) -> list[int]:
    """Per-replication seeds drawn from the master seed."""
    rng = np.random.default_rng(master_seed)
    return [int(s) for s in rng.integers(0, 2**32, size=count)]


@dataclass
class ReplicationReport(Generic[T]):
    """Replicated metric with its confidence interval and stop reason.

    `stop_reason` is `converged`, `converged_absolute` (mean close to zero,
    width compared against `rel_width` itself) or `max_replications`.
    """

    values: list[float]
    mean: float
    half_width: float
    replications: int
    stop_reason: str
    confidence: float
    seeds: list[int] = field(default_factory=list)
    results: list[T] = field(default_factory=list)

    @property
    def ci_length(self) -> float:
        return 2.0 * self.half_width

    @property
    def converged(self) -> bool:
        return self.stop_reason != "max_replications"


def replicate(
    run: Callable[[int], T],
    select: Callable[[T], float],
    master_seed: int = 0,
    confidence: float = 0.95,
    rel_width: float = 0.10,
    min_reps: int = 3,
    max_reps: int = 100,
) -> ReplicationReport[T]:
    """Repeat `run(seed)` until the CI of `select(result)` is narrow enough.

    Stops at the first replication count n >= min_reps whose full CI length
    is below `rel_width * |mean|`. When |mean| < 1e-12 the length is
    compared against `rel_width` directly.

    Args:
        run: Deterministic run for a given seed.
        select: Metric extracted from a run result.
        master_seed: Seed of the replication seed sequence.
        confidence: Confidence level of the Student-t interval.
        rel_width: Allowed CI length relative to the mean.
        min_reps: Replications before the rule is first checked.
        max_reps: Hard cap; reaching it is reported as non-convergence.
    """
    if not 2 <= min_reps <= max_reps:
        raise ValueError("need 2 <= min_reps <= max_reps")
    seeds = replication_seeds(master_seed, max_reps)
    values: list[float] = []
    results: list[T] = []
    mean, half_width = math.nan, math.inf
    stop_reason = "max_replications"
    for seed in seeds:
        result = run(seed)
        results.append(result)
        values.append(float(select(result)))
        if len(values) < min_reps:
            continue
        mean, half_width = student_t_interval(values, confidence)
        length = 2.0 * half_width
        if abs(mean) < NEAR_ZERO_MEAN:
            if length < rel_width:
                stop_reason = "converged_absolute"
                break
        elif length < rel_width * abs(mean):
            stop_reason = "converged"
            break

    report = ReplicationReport(
        values=values,
        mean=mean,
        half_width=half_width,
        replications=len(values),
        stop_reason=stop_reason,
        confidence=confidence,
        seeds=seeds[: len(values)],
        results=results,
    )
    log = logger.info if report.converged else logger.warning
    log(
        "replication_stopped",
        replications=report.replications,
        mean=mean,
        ci_length=report.ci_length,
        stop_reason=stop_reason,
    )
    return report


def summary_record(
    run_id: str, policy: str, params: str, metrics: RunMetrics
) -> dict[str, Any]:
    return {
        "run_id": run_id,
        "policy": policy,
        "params": params,
        "violation_pct": metrics.violation_pct,
        "cpu_hours": metrics.cpu_hours,
        "L": metrics.mean_in_system,
        "lambda": metrics.arrival_rate,
        "W": metrics.mean_latency,
    }


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_table(
    path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> None:
    """Write a comma-separated table atomically (temp file, then rename)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[c]) for c in columns])
        Path(tmp_name).replace(target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def write_summary(path: str | Path, records: Iterable[Mapping[str, Any]]) -> None:
    """Write `run_id,policy,params,violation_pct,cpu_hours,L,lambda,W` rows."""
    write_table(path, SUMMARY_COLUMNS, records)


def write_latency_histogram(
    path: str | Path, latencies: NDArray[np.float64], bin_width_s: float = 10.0
) -> None:
    """Write `bin_start_s,bin_end_s,count` rows of the latency distribution."""
    if bin_width_s <= 0:
        raise ValueError("bin_width_s must be positive")
    top = float(latencies.max()) if latencies.size else 0.0
    edges = bin_width_s * np.arange(math.floor(top / bin_width_s) + 2)
    counts, _ = np.histogram(latencies, bins=edges)
    rows = [
        {"bin_start_s": float(lo), "bin_end_s": float(hi), "count": int(n)}
        for lo, hi, n in zip(edges[:-1], edges[1:], counts, strict=True)
    ]
    write_table(path, ("bin_start_s", "bin_end_s", "count"), rows)
