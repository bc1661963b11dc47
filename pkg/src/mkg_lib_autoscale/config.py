"""TOML configuration loading.

Run configs, experiment specs and synthetic workload specs are TOML files
validated into pydantic models. Validation failures become a
ConfigurationError listing every offending field.
"""

import tomllib
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from mkg_lib_autoscale.exceptions import ConfigurationError
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.config import ExperimentSpec, RunConfig
from mkg_lib_autoscale.models.workload import SyntheticSpec

logger = get_logger(__name__, component="config")

M = TypeVar("M", bound=BaseModel)


def validation_messages(error: ValidationError) -> list[str]:
    """One `<field path>: <message>` line per pydantic error."""
    messages = []
    for detail in error.errors():
        loc = ".".join(str(x) for x in detail["loc"]) or "<root>"
        messages.append(f"{loc}: {detail['msg']}")
    return messages


def validate_model(model: type[M], data: Any, source: str) -> M:
    """Validate `data` into `model`, raising ConfigurationError on failure."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        messages = validation_messages(e)
        first = e.errors()[0]["loc"] if e.errors() else ()
        logger.warning(
            "config_validation_failed",
            source=source,
            error_count=len(messages),
            errors=messages[:5],
        )
        raise ConfigurationError(
            f"invalid configuration in {source}: " + "; ".join(messages),
            field=".".join(str(x) for x in first) or None,
        ) from e


def read_toml(path: str | Path) -> dict[str, Any]:
    """Parse a TOML file.

    Raises:
        ConfigurationError: If the file is missing or not valid TOML.
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f"configuration file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e


def load_run_config(path: str | Path) -> RunConfig:
    """Load a run config; relative workload paths resolve against its directory."""
    path = Path(path)
    config = validate_model(RunConfig, read_toml(path), str(path))
    return config.model_copy(update={"workload": config.workload.resolved(path.parent)})


def load_experiment_spec(path: str | Path) -> ExperimentSpec:
    """Load an experiment spec; relative paths resolve against its directory."""
    path = Path(path)
    spec = validate_model(ExperimentSpec, read_toml(path), str(path))
    update: dict[str, Any] = {"workload": spec.workload.resolved(path.parent)}
    if spec.output_dir is not None and not spec.output_dir.is_absolute():
        update["output_dir"] = path.parent / spec.output_dir
    return spec.model_copy(update=update)


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    """Load a synthetic spec, either top-level or under a `[synthetic]` table."""
    path = Path(path)
    data = read_toml(path)
    if "synthetic" in data:
        data = data["synthetic"]
    return validate_model(SyntheticSpec, data, str(path))
