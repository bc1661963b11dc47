"""Weibull service-demand toolkit.

Sampling, CDF, quantile and maximum-likelihood fitting of the per-class
demand distributions, plus a histogram NRMSE goodness-of-fit report.
"""

import math
from dataclasses import dataclass
from typing import Annotated, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from mkg_lib_autoscale.exceptions import (
    DegenerateSampleError,
    DistributionError,
    FitError,
)
from mkg_lib_autoscale.logging import get_logger

logger = get_logger(__name__, component="dist")

MIN_FIT_SAMPLES = 100
MAX_NEWTON_ITERATIONS = 200
_NEWTON_TOLERANCE = 1e-10


def _check_probability(p: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(p, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any((arr < 0.0) | (arr >= 1.0)):
        raise DistributionError(f"probability must lie in [0, 1), got {p!r}")
    return arr


def _scalar_or_array(value: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(value) if value.ndim == 0 else value


class Weibull(BaseModel):
    """Two-parameter Weibull distribution.

    The scale carries the unit of the modeled quantity (cycles for service
    demands, seconds for measured delays).

    Example:
        ```python
        d = Weibull(shape=2.0, scale=3.0)
        d.quantile(0.5)  # 3 * sqrt(ln 2)
        ```
    """

    kind: Literal["weibull"] = "weibull"
    shape: float = Field(gt=0, allow_inf_nan=False, description="Shape k")
    scale: float = Field(gt=0, allow_inf_nan=False, description="Scale lambda")

    model_config = ConfigDict(frozen=True, extra="forbid")

    def quantile(self, p: ArrayLike) -> float | NDArray[np.float64]:
        """Inverse CDF, `scale * (-ln(1 - p)) ** (1 / shape)`.

        Raises:
            DistributionError: If any p lies outside [0, 1).
        """
        arr = _check_probability(p)
        return _scalar_or_array(self.scale * (-np.log1p(-arr)) ** (1.0 / self.shape))

    def cdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        """Cumulative probability; negative x maps to 0."""
        arr = np.asarray(x, dtype=np.float64)
        z = np.maximum(arr, 0.0) / self.scale
        return _scalar_or_array(-np.expm1(-(z**self.shape)))

    def pdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        arr = np.asarray(x, dtype=np.float64)
        z = np.maximum(arr, 0.0) / self.scale
        with np.errstate(divide="ignore"):
            density = (self.shape / self.scale) * z ** (self.shape - 1.0) * np.exp(
                -(z**self.shape)
            )
        return _scalar_or_array(np.where(arr < 0.0, 0.0, density))

    def sample(
        self, rng: np.random.Generator, size: int | None = None
    ) -> float | NDArray[np.float64]:
        """Draw by inverse transform of U ~ Uniform[0, 1)."""
        return self.quantile(rng.random(size))

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


class ZeroDemand(BaseModel):
    """Degenerate distribution at zero, for classes that need no processing."""

    kind: Literal["zero"] = "zero"

    model_config = ConfigDict(frozen=True, extra="forbid")

    def quantile(self, p: ArrayLike) -> float | NDArray[np.float64]:
        return _scalar_or_array(np.zeros_like(_check_probability(p)))

    def cdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        arr = np.asarray(x, dtype=np.float64)
        return _scalar_or_array(np.where(arr < 0.0, 0.0, 1.0))

    def sample(
        self, rng: np.random.Generator, size: int | None = None
    ) -> float | NDArray[np.float64]:
        del rng
        return 0.0 if size is None else np.zeros(size)

    def mean(self) -> float:
        return 0.0


ServiceDemand = Annotated[Weibull | ZeroDemand, Field(discriminator="kind")]


def quantile(d: Weibull | ZeroDemand, p: ArrayLike) -> float | NDArray[np.float64]:
    """Quantile of `d` at probability p in [0, 1)."""
    return d.quantile(p)


def cdf(d: Weibull | ZeroDemand, x: ArrayLike) -> float | NDArray[np.float64]:
    """CDF of `d`; returns 0 for x < 0."""
    return d.cdf(x)


def sample(
    d: Weibull | ZeroDemand,
    rng: np.random.Generator,
    size: int | None = None,
) -> float | NDArray[np.float64]:
    """Inverse-transform sample(s) of `d` from a caller-owned generator."""
    return d.sample(rng, size)


@dataclass(frozen=True)
class FitReport:
    """Outcome of a Weibull fit.

    Attributes:
        distribution: Maximum-likelihood Weibull.
        nrmse: RMSE between the density histogram and the fitted pdf at bin
            centers, divided by the range of histogram heights.
        sample_count: Positive samples used by the fit.
        bins: Histogram bin count.
    """

    distribution: Weibull
    nrmse: float
    sample_count: int
    bins: int


def _shape_equation(
    k: float, log_y: NDArray[np.float64], mean_log_y: float
) -> tuple[float, float]:
    # Samples are pre-divided by their maximum so y**k never overflows.
    w = np.exp(k * log_y)
    s0 = float(w.sum())
    s1 = float((w * log_y).sum())
    s2 = float((w * log_y * log_y).sum())
    g = s1 / s0 - 1.0 / k - mean_log_y
    dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k)
    return g, dg


def _mle_shape(log_y: NDArray[np.float64]) -> float:
    mean_log_y = float(log_y.mean())
    k = math.pi / (math.sqrt(6.0) * float(log_y.std()))
    for _ in range(MAX_NEWTON_ITERATIONS):
        g, dg = _shape_equation(k, log_y, mean_log_y)
        step = g / dg
        k_next = k - step
        if k_next <= 0.0:
            k_next = k / 2.0
        if abs(k_next - k) <= _NEWTON_TOLERANCE * k:
            return k_next
        k = k_next
    raise FitError(
        f"Newton iteration did not converge after {MAX_NEWTON_ITERATIONS} steps",
        last_iterate=k,
    )


def fit(samples: ArrayLike, bins: int = 50) -> FitReport:
    """Fit a Weibull by maximum likelihood and report histogram NRMSE.

    Zero-valued samples are dropped with a warning; zero demand is modeled
    by a separate class.

    Args:
        samples: Non-negative observations.
        bins: Histogram bin count for the NRMSE report.

    Returns:
        FitReport with the fitted distribution.

    Raises:
        DistributionError: On negative or non-finite samples, or fewer than
            100 positive samples.
        DegenerateSampleError: If all positive samples are equal.
        FitError: If the shape iteration does not converge.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)) or np.any(x < 0.0):
        raise DistributionError("samples must be finite and non-negative")
    positive = x[x > 0.0]
    if positive.size < x.size:
        logger.warning(
            "fit_dropped_zero_samples",
            dropped=int(x.size - positive.size),
            remaining=int(positive.size),
        )
    if positive.size < MIN_FIT_SAMPLES:
        raise DistributionError(
            f"at least {MIN_FIT_SAMPLES} positive samples required, got {positive.size}"
        )
    x_max = float(positive.max())
    if float(positive.min()) == x_max:
        raise DegenerateSampleError("all samples are equal")

    log_y = np.log(positive / x_max)
    k = _mle_shape(log_y)
    scale = x_max * float(np.mean(np.exp(k * log_y))) ** (1.0 / k)
    fitted = Weibull(shape=k, scale=scale)

    heights, edges = np.histogram(positive, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    rmse = float(np.sqrt(np.mean((heights - fitted.pdf(centers)) ** 2)))
    spread = float(heights.max() - heights.min())
    nrmse = rmse / spread if spread > 0.0 else 0.0

    logger.debug(
        "weibull_fitted",
        shape=k,
        scale=scale,
        nrmse=nrmse,
        sample_count=int(positive.size),
    )
    return FitReport(
        distribution=fitted,
        nrmse=nrmse,
        sample_count=int(positive.size),
        bins=bins,
    )
