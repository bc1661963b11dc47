"""Scaling policy registry.

Maps the policy names used in run configurations to builders that create a
configured ScalingPolicy for a workload.
"""

from collections.abc import Callable, Sequence

from mkg_lib_autoscale.exceptions import UnknownPolicyError
from mkg_lib_autoscale.models.config import LoadPolicyCfg, PolicySettings
from mkg_lib_autoscale.models.workload import WorkloadClass
from mkg_lib_autoscale.policies import (
    CompositePolicy,
    LoadPolicy,
    ScalingPolicy,
    StaticPolicy,
    ThresholdPolicy,
)

PolicyBuilder = Callable[[PolicySettings, Sequence[WorkloadClass]], ScalingPolicy]


class PolicyRegistry:
    """Registry of policy name to builder.

    Example:
        ```python
        @register_policy("hold")
        def build_hold(settings, classes):
            return StaticPolicy()

        policy = PolicyRegistry.create(settings, classes)
        ```
    """

    _registry: dict[str, PolicyBuilder] = {}

    @classmethod
    def register(cls, name: str, builder: PolicyBuilder) -> None:
        """Register a builder under `name`.

        Raises:
            ValueError: If the name is already registered.
        """
        if name in cls._registry:
            raise ValueError(f"Policy '{name}' is already registered")
        cls._registry[name] = builder

    @classmethod
    def unregister(cls, name: str) -> None:
        cls._registry.pop(name, None)

    @classmethod
    def get(cls, name: str) -> PolicyBuilder | None:
        return cls._registry.get(name)

    @classmethod
    def create(
        cls, settings: PolicySettings, classes: Sequence[WorkloadClass]
    ) -> ScalingPolicy:
        """Build the policy selected by `settings.policy`.

        Raises:
            UnknownPolicyError: If the name is not registered.
        """
        builder = cls._registry.get(settings.policy)
        if builder is None:
            raise UnknownPolicyError(
                f"Unknown policy '{settings.policy}', expected one of "
                f"{sorted(cls._registry)}",
                field="policy",
            )
        return builder(settings, classes)

    @classmethod
    def list_policies(cls) -> list[str]:
        return list(cls._registry.keys())


def register_policy(name: str) -> Callable[[PolicyBuilder], PolicyBuilder]:
    """Decorator registering a policy builder under `name`."""

    def decorator(builder: PolicyBuilder) -> PolicyBuilder:
        PolicyRegistry.register(name, builder)
        return builder

    return decorator


def _load_cfg(settings: PolicySettings, classes: Sequence[WorkloadClass]) -> LoadPolicyCfg:
    return LoadPolicyCfg(quantile=settings.load.quantile, classes=list(classes))


@register_policy("static")
def _build_static(
    settings: PolicySettings, classes: Sequence[WorkloadClass]
) -> ScalingPolicy:
    del settings, classes
    return StaticPolicy()


@register_policy("threshold")
def _build_threshold(
    settings: PolicySettings, classes: Sequence[WorkloadClass]
) -> ScalingPolicy:
    del classes
    return ThresholdPolicy(settings.threshold)


@register_policy("load")
def _build_load(
    settings: PolicySettings, classes: Sequence[WorkloadClass]
) -> ScalingPolicy:
    return LoadPolicy(_load_cfg(settings, classes))


@register_policy("appdata")
def _build_appdata(
    settings: PolicySettings, classes: Sequence[WorkloadClass]
) -> ScalingPolicy:
    return CompositePolicy(_load_cfg(settings, classes), settings.appdata)
