"""Validated value types for workloads, simulations and experiments."""

from mkg_lib_autoscale.models.config import (
    AppdataPolicyCfg,
    ExperimentSpec,
    LoadPolicyCfg,
    LoadSettings,
    PolicySettings,
    ReplicationSettings,
    RunConfig,
    SimConfig,
    ThresholdPolicyCfg,
    WorkloadSource,
)
from mkg_lib_autoscale.models.workload import (
    BurstEvent,
    ConversionContext,
    SentimentTriple,
    SyntheticSpec,
    WorkItem,
    WorkloadClass,
    check_proportions,
    default_classes,
)

__all__ = [
    # Workload
    "SentimentTriple",
    "WorkItem",
    "WorkloadClass",
    "ConversionContext",
    "BurstEvent",
    "SyntheticSpec",
    "check_proportions",
    "default_classes",
    # Configuration
    "SimConfig",
    "ThresholdPolicyCfg",
    "LoadSettings",
    "LoadPolicyCfg",
    "AppdataPolicyCfg",
    "PolicySettings",
    "WorkloadSource",
    "RunConfig",
    "ReplicationSettings",
    "ExperimentSpec",
]
