"""Command-line front end.

Subcommands:
    generate    write a synthetic trace (and its class manifest)
    run         run one simulation and write summary, event log and histogram
    experiment  sweep a policy matrix with replication control
    analyze     sentiment/volume correlation report of a trace or run directory

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from mkg_lib_autoscale.analytics import report_correlation
from mkg_lib_autoscale.config import (
    load_experiment_spec,
    load_run_config,
    load_synthetic_spec,
    validation_messages,
)
from mkg_lib_autoscale.engine import EventLogWriter
from mkg_lib_autoscale.exceptions import (
    AutoscaleError,
    ConfigurationError,
    TraceFormatError,
)
from mkg_lib_autoscale.experiment import format_ci, run_experiment, run_scenario
from mkg_lib_autoscale.logging import LOG_LEVEL_ENV, configure_logging, get_logger
from mkg_lib_autoscale.metrics import (
    summary_record,
    write_latency_histogram,
    write_summary,
)
from mkg_lib_autoscale.models.workload import ConversionContext
from mkg_lib_autoscale.workload import (
    generate_synthetic,
    load_trace,
    write_class_manifest,
    write_trace,
)

logger = get_logger(__name__, component="cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

DEFAULT_OUT = Path("out")


def cmd_generate(args: argparse.Namespace) -> int:
    spec = load_synthetic_spec(args.spec)
    if args.seed is not None:
        spec = spec.model_copy(update={"rng_seed": args.seed})
    items, classes = generate_synthetic(spec)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / args.name
    manifest_path = trace_path.with_suffix(".classes.csv")
    write_trace(trace_path, items)
    write_class_manifest(manifest_path, classes)
    logger.info("trace_written", path=str(trace_path), items=len(items))
    print(trace_path)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    with EventLogWriter(out / "events.csv") as sink:
        outcome = run_scenario(config, event_sink=sink)

    metrics = outcome.metrics
    record = summary_record(config.run_id, config.policy, config.params(), metrics)
    write_summary(out / "summary.csv", [record])
    write_trace(out / "trace.csv", outcome.simulation.items)
    write_latency_histogram(out / "latency_histogram.csv", metrics.latencies)
    print(
        f"{config.run_id}: violation_pct={metrics.violation_pct:.4g} "
        f"cpu_hours={metrics.cpu_hours:.4g} -> {out / 'summary.csv'}"
    )
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = load_experiment_spec(args.spec)
    if args.seed is not None:
        spec = spec.model_copy(update={"seed": args.seed})
    out = args.out if args.out_given or spec.output_dir is None else spec.output_dir
    results = run_experiment(spec, out)
    for row in results:
        print(
            f"{row.policy:<10} {row.params:<40} "
            f"violation_pct={format_ci(row.violation_pct_mean, row.violation_pct_ci)} "
            f"cpu_hours={format_ci(row.cpu_hours_mean, row.cpu_hours_ci)} "
            f"reps={row.replications} ({row.stop_reason})"
        )
    print(Path(out) / "results.csv")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    source: Path = args.path
    trace = source / "trace.csv" if source.is_dir() else source
    if not trace.is_file():
        raise ConfigurationError(f"no trace found at {trace}", field="path")
    items, _ = load_trace(trace, reference=ConversionContext())
    report = report_correlation(
        items,
        bucket_width_s=args.bucket_width,
        max_lag=args.max_lag,
        ema_window_s=args.ema_window,
    )
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    report.write_lag_table(out / "correlation_lags.csv")
    report.write_series(out / "correlation_series.csv")
    for entry in report.lags:
        r = "undefined" if entry.r is None else f"{entry.r:+.3f}"
        print(f"lag {entry.lag:>3} ({entry.lag * args.bucket_width:g} s): r={r}")
    print(f"variation peak leads volume peak by {report.lead_buckets} bucket(s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="mkg-autoscale",
        description="Elastic stream-processing auto-scaling simulator",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", parents=[common], help="write a synthetic trace")
    generate.add_argument("spec", type=Path, help="synthetic workload spec (TOML)")
    generate.add_argument("--name", default="trace.csv", help="trace file name in --out")
    generate.set_defaults(handler=cmd_generate)

    run = sub.add_parser("run", parents=[common], help="run one simulation")
    run.add_argument("config", type=Path, help="run config (TOML)")
    run.set_defaults(handler=cmd_run)

    experiment = sub.add_parser(
        "experiment", parents=[common], help="sweep a policy matrix"
    )
    experiment.add_argument("spec", type=Path, help="experiment spec (TOML)")
    experiment.set_defaults(handler=cmd_experiment)

    analyze = sub.add_parser(
        "analyze", parents=[common], help="sentiment/volume correlation report"
    )
    analyze.add_argument("path", type=Path, help="trace file or run directory")
    analyze.add_argument("--bucket-width", type=float, default=60.0)
    analyze.add_argument("--max-lag", type=int, default=10)
    analyze.add_argument("--ema-window", type=float, default=60.0)
    analyze.set_defaults(handler=cmd_analyze)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    args.out_given = hasattr(args, "out")
    args.seed = getattr(args, "seed", None)
    args.out = getattr(args, "out", DEFAULT_OUT)
    quiet = getattr(args, "quiet", False)
    configure_logging(
        logging.WARNING if quiet else os.environ.get(LOG_LEVEL_ENV, "INFO")
    )

    try:
        return int(args.handler(args))
    except (ConfigurationError, TraceFormatError, FileNotFoundError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        messages = validation_messages(e)
        logger.error("command_failed", command=args.command, errors=messages)
        print("error: " + "; ".join(messages), file=sys.stderr)
        return EXIT_USAGE
    except (AutoscaleError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception("command_crashed", command=args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
