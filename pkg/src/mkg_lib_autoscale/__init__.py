"""MKG auto-scaling simulator.

A deterministic discrete-time simulator of an elastic CPU-bound
stream-processing system, with threshold, quantile-load and
application-data scaling policies and SLA/cost accounting.
"""

from mkg_lib_autoscale.analytics import (
    CorrelationReport,
    SentimentBuffer,
    TimeSeries,
    bucketize,
    ema,
    lagged_pearson,
    report_correlation,
    variation,
)
from mkg_lib_autoscale.dist import FitReport, Weibull, ZeroDemand, cdf, fit, quantile, sample
from mkg_lib_autoscale.engine import (
    ClusterState,
    EngineState,
    EventLogWriter,
    SimEvent,
    Simulation,
    SimulationResult,
    admit,
    allocate_cycles,
    distribute_cycles,
)
from mkg_lib_autoscale.exceptions import (
    AutoscaleError,
    ConfigurationError,
    ConversionError,
    DegenerateSampleError,
    DistributionError,
    FitError,
    InsufficientDataError,
    TraceFormatError,
    UnknownClassError,
    UnknownPolicyError,
)
from mkg_lib_autoscale.experiment import run_experiment, run_scenario
from mkg_lib_autoscale.metrics import (
    ReplicationReport,
    RunMetrics,
    finalize,
    replicate,
    student_t_interval,
)
from mkg_lib_autoscale.models import (
    AppdataPolicyCfg,
    BurstEvent,
    ConversionContext,
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
from mkg_lib_autoscale.policies import (
    CompositePolicy,
    LoadPolicy,
    PolicyObservation,
    ScaleDecision,
    ScalingPolicy,
    StaticPolicy,
    ThresholdPolicy,
    appdata_decide,
    composite_decide,
    load_decide,
    load_expected_delay,
    threshold_decide,
)
from mkg_lib_autoscale.registry import PolicyRegistry, register_policy
from mkg_lib_autoscale.workload import (
    convert_delay_to_cycles,
    generate_synthetic,
    load_trace,
    write_trace,
)

__all__ = [
    # Models
    "SentimentTriple",
    "WorkItem",
    "WorkloadClass",
    "ConversionContext",
    "BurstEvent",
    "SyntheticSpec",
    "SimConfig",
    "ThresholdPolicyCfg",
    "LoadPolicyCfg",
    "AppdataPolicyCfg",
    "RunConfig",
    "ExperimentSpec",
    # Distributions
    "Weibull",
    "ZeroDemand",
    "FitReport",
    "quantile",
    "cdf",
    "sample",
    "fit",
    # Workload
    "load_trace",
    "write_trace",
    "convert_delay_to_cycles",
    "generate_synthetic",
    # Engine
    "Simulation",
    "SimulationResult",
    "EngineState",
    "ClusterState",
    "SimEvent",
    "EventLogWriter",
    "admit",
    "allocate_cycles",
    "distribute_cycles",
    # Policies
    "ScalingPolicy",
    "PolicyObservation",
    "ScaleDecision",
    "StaticPolicy",
    "ThresholdPolicy",
    "LoadPolicy",
    "CompositePolicy",
    "threshold_decide",
    "load_expected_delay",
    "load_decide",
    "appdata_decide",
    "composite_decide",
    # Registry
    "PolicyRegistry",
    "register_policy",
    # Analytics
    "TimeSeries",
    "SentimentBuffer",
    "CorrelationReport",
    "bucketize",
    "ema",
    "variation",
    "lagged_pearson",
    "report_correlation",
    # Metrics
    "RunMetrics",
    "ReplicationReport",
    "finalize",
    "replicate",
    "student_t_interval",
    # Experiments
    "run_scenario",
    "run_experiment",
    # Exceptions
    "AutoscaleError",
    "ConfigurationError",
    "TraceFormatError",
    "UnknownClassError",
    "ConversionError",
    "DistributionError",
    "FitError",
    "DegenerateSampleError",
    "InsufficientDataError",
    "UnknownPolicyError",
]

__version__ = "0.1.0"
