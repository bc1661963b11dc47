"""Scenario and experiment runners.

A scenario is one seeded run of a RunConfig. An experiment sweeps a policy
matrix over one workload, replicating every combo until the confidence
interval rule is met, and writes one results row per combo.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from mkg_lib_autoscale.engine import EventSink, Simulation, SimulationResult
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.metrics import (
    RunMetrics,
    finalize,
    replicate,
    student_t_interval,
    write_table,
)
from mkg_lib_autoscale.models.config import (
    ExperimentSpec,
    PolicySettings,
    RunConfig,
    WorkloadSource,
)
from mkg_lib_autoscale.models.workload import (
    ConversionContext,
    WorkItem,
    WorkloadClass,
)
from mkg_lib_autoscale.registry import PolicyRegistry
from mkg_lib_autoscale.workload import generate_synthetic, load_trace, resample_demands

logger = get_logger(__name__, component="experiment")

RESULT_COLUMNS = (
    "policy",
    "params",
    "replications",
    "violation_pct_mean",
    "violation_pct_ci",
    "cpu_hours_mean",
    "cpu_hours_ci",
    "stop_reason",
)


@lru_cache(maxsize=4)
def _cached_trace(
    trace: Path, conversion: ConversionContext | None, manifest: Path | None
) -> tuple[list[WorkItem], list[WorkloadClass]]:
    return load_trace(trace, conversion, manifest)


def build_workload(
    source: WorkloadSource, seed: int
) -> tuple[list[WorkItem], list[WorkloadClass]]:
    """Items and classes of a workload source for one seed.

    Synthetic workloads are regenerated with `seed`. Trace items are reused,
    with demands redrawn from `seed` when `resample_cycles` is set.
    """
    if source.synthetic is not None:
        return generate_synthetic(source.synthetic.model_copy(update={"rng_seed": seed}))
    if source.trace is None:
        raise ValueError("workload source has neither trace nor synthetic spec")
    items, classes = _cached_trace(source.trace, source.conversion, source.classes)
    if source.resample_cycles:
        items = resample_demands(items, classes, np.random.default_rng(seed))
    return items, classes


@dataclass
class ScenarioOutcome:
    simulation: SimulationResult
    metrics: RunMetrics


def run_scenario(
    config: RunConfig,
    seed: int | None = None,
    event_sink: EventSink | None = None,
) -> ScenarioOutcome:
    """Run one simulation of `config`, seeded by `seed` or `config.seed`."""
    seed = config.seed if seed is None else seed
    items, classes = build_workload(config.workload, seed)
    policy = PolicyRegistry.create(config, classes)
    result = Simulation(items, config.sim, policy, classes, event_sink).run()
    metrics = finalize(
        result.items,
        result.timeline,
        config.sim.sla_s,
        result.end_clock_s,
        config.warmup_s,
    )
    logger.info(
        "scenario_finished",
        run_id=config.run_id,
        policy=config.policy,
        params=config.params(),
        seed=seed,
        violation_pct=metrics.violation_pct,
        cpu_hours=metrics.cpu_hours,
    )
    return ScenarioOutcome(result, metrics)


@dataclass(frozen=True)
class ComboResult:
    """Replicated outcome of one policy combo."""

    policy: str
    params: str
    replications: int
    violation_pct_mean: float
    violation_pct_ci: float
    cpu_hours_mean: float
    cpu_hours_ci: float
    stop_reason: str

    def as_row(self) -> dict[str, object]:
        return {column: getattr(self, column) for column in RESULT_COLUMNS}


def _metric_value(metrics: RunMetrics, name: str) -> float:
    return metrics.violation_pct if name == "violation_pct" else metrics.cpu_hours


def run_combo(spec: ExperimentSpec, index: int) -> ComboResult:
    """Replicate policy combo `index` of the experiment matrix."""
    combo: PolicySettings = spec.policies[index]
    config = spec.run_config(combo, index)
    settings = spec.replication

    def run(seed: int) -> RunMetrics:
        return run_scenario(config, seed).metrics

    report = replicate(
        run,
        lambda m: _metric_value(m, settings.metric),
        master_seed=spec.seed,
        confidence=settings.confidence,
        rel_width=settings.rel_width,
        min_reps=settings.min_reps,
        max_reps=settings.max_reps,
    )
    violation = student_t_interval(
        [m.violation_pct for m in report.results], settings.confidence
    )
    cost = student_t_interval([m.cpu_hours for m in report.results], settings.confidence)
    return ComboResult(
        policy=combo.policy,
        params=combo.params(),
        replications=report.replications,
        violation_pct_mean=violation[0],
        violation_pct_ci=violation[1],
        cpu_hours_mean=cost[0],
        cpu_hours_ci=cost[1],
        stop_reason=report.stop_reason,
    )


def run_experiment(
    spec: ExperimentSpec, output_dir: str | Path | None = None
) -> list[ComboResult]:
    """Run every combo of the policy matrix and write `results.csv`.

    Combos run in a process pool when `replication.max_workers > 1`; rows
    keep the matrix order either way, and the table is written once by
    this process.
    """
    indices = range(len(spec.policies))
    workers = spec.replication.max_workers
    logger.info(
        "experiment_started",
        name=spec.name,
        combos=len(spec.policies),
        max_workers=workers,
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_combo, [spec] * len(indices), indices))
    else:
        results = [run_combo(spec, i) for i in indices]

    target_dir = Path(output_dir) if output_dir is not None else spec.output_dir
    if target_dir is not None:
        path = target_dir / "results.csv"
        write_table(path, RESULT_COLUMNS, (r.as_row() for r in results))
        logger.info("experiment_results_written", path=str(path), rows=len(results))
    unconverged = [r for r in results if r.stop_reason == "max_replications"]
    if unconverged:
        logger.warning(
            "experiment_unconverged_combos",
            combos=[f"{r.policy}:{r.params}" for r in unconverged],
        )
    return results


def format_ci(mean: float, half_width: float) -> str:
    """`mean ± half_width` for console tables."""
    if math.isinf(half_width):
        return f"{mean:.4g}"
    return f"{mean:.4g} ± {half_width:.2g}"
