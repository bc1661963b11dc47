"""Sentiment time-series analysis.

Per-bucket aggregation, exponential smoothing, sentiment variation and
lagged Pearson correlation between sentiment and volume, plus the
post-time-bucketed sentiment buffer the appdata policy reads.
"""

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.stats import pearsonr

from mkg_lib_autoscale.exceptions import InsufficientDataError
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.workload import WorkItem

logger = get_logger(__name__, component="analytics")

MIN_OVERLAP = 3


@dataclass(frozen=True)
class TimeSeries:
    """Dense bucketed series.

    Bucket i covers `[origin_s + i * bucket_width_s, origin_s + (i + 1) * bucket_width_s)`.
    Buckets without samples have `counts[i] == 0`; mean series hold NaN there.
    """

    bucket_width_s: float
    origin_s: float
    values: NDArray[np.float64]
    counts: NDArray[np.int64]

    def __post_init__(self) -> None:
        if self.bucket_width_s <= 0:
            raise ValueError("bucket_width_s must be positive")
        if self.values.shape != self.counts.shape:
            raise ValueError("values and counts must have the same length")

    def __len__(self) -> int:
        return int(self.values.size)

    def bucket_starts(self) -> NDArray[np.float64]:
        return self.origin_s + self.bucket_width_s * np.arange(self.values.size)

    @classmethod
    def empty(cls, bucket_width_s: float) -> "TimeSeries":
        return cls(bucket_width_s, 0.0, np.empty(0), np.empty(0, dtype=np.int64))


def bucketize_times(
    times: NDArray[np.float64],
    values: NDArray[np.float64] | None,
    bucket_width_s: float,
    origin_s: float | None = None,
) -> TimeSeries:
    """Bucket raw samples; a count series when `values` is None, else means."""
    if bucket_width_s <= 0:
        raise ValueError("bucket_width_s must be positive")
    if times.size == 0:
        return TimeSeries.empty(bucket_width_s)
    if origin_s is None:
        origin_s = math.floor(float(times.min()) / bucket_width_s) * bucket_width_s
    index = np.floor((times - origin_s) / bucket_width_s).astype(np.int64)
    if index.min() < 0:
        raise ValueError("samples precede origin_s")
    size = int(index.max()) + 1
    counts = np.bincount(index, minlength=size).astype(np.int64)
    if values is None:
        series = counts.astype(np.float64)
    else:
        sums = np.bincount(index, weights=values, minlength=size)
        with np.errstate(invalid="ignore", divide="ignore"):
            series = np.where(counts > 0, sums / counts, np.nan)
    return TimeSeries(bucket_width_s, origin_s, series, counts)


def bucketize(
    items: Sequence[WorkItem],
    value: Literal["sentiment", "count"] = "count",
    bucket_width_s: float = 60.0,
    origin_s: float | None = None,
) -> TimeSeries:
    """Aggregate items by post time into per-bucket counts or mean sentiment.

    Buckets are aligned to multiples of `bucket_width_s` and span the first
    to the last post time.
    """
    times = np.fromiter((i.post_time for i in items), dtype=np.float64, count=len(items))
    if value == "count":
        return bucketize_times(times, None, bucket_width_s, origin_s)
    scores = np.fromiter(
        (i.sentiment.score for i in items),
        dtype=np.float64,
        count=len(items),
    )
    return bucketize_times(times, scores, bucket_width_s, origin_s)


def ema_alpha(window_s: float, bucket_width_s: float) -> float:
    """Smoothing constant `2 / (N + 1)` of an N-bucket moving window."""
    n = window_s / bucket_width_s
    return min(1.0, 2.0 / (n + 1.0))


def ema(series: TimeSeries, alpha: float) -> TimeSeries:
    """Exponential moving average; empty buckets carry the previous value."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    out = np.full(series.values.size, np.nan)
    previous = math.nan
    for t, x in enumerate(series.values):
        if math.isnan(x):
            out[t] = previous
        elif math.isnan(previous):
            out[t] = x
        else:
            out[t] = alpha * x + (1.0 - alpha) * previous
        previous = out[t]
    return TimeSeries(series.bucket_width_s, series.origin_s, out, series.counts.copy())


def variation(series: TimeSeries) -> TimeSeries:
    """Absolute first differences, assigned to the later bucket.

    Raises:
        InsufficientDataError: If the series has fewer than two buckets.
    """
    if len(series) < 2:
        raise InsufficientDataError("variation needs at least two buckets")
    diffs = np.abs(np.diff(series.values))
    counts = np.minimum(series.counts[1:], series.counts[:-1])
    return TimeSeries(
        series.bucket_width_s,
        series.origin_s + series.bucket_width_s,
        diffs,
        counts,
    )


@dataclass(frozen=True)
class LagCorrelation:
    """Pearson r of a(t) against b(t + lag); r is None where undefined."""

    lag: int
    r: float | None
    overlap: int


def lagged_pearson(
    series_a: TimeSeries,
    series_b: TimeSeries,
    max_lag: int,
    min_lag: int = 0,
) -> list[LagCorrelation]:
    """Correlate a(t) with b(t + lag) for lag in [min_lag, max_lag].

    Buckets are matched on absolute time. Pairs with an empty (NaN) bucket
    are excluded. r is None at lags with fewer than three pairs or zero
    variance in either side.
    """
    if not math.isclose(series_a.bucket_width_s, series_b.bucket_width_s):
        raise ValueError("series must share a bucket width")
    width = series_a.bucket_width_s
    offset = round((series_b.origin_s - series_a.origin_s) / width)
    a = series_a.values
    b = series_b.values

    results: list[LagCorrelation] = []
    for lag in range(min_lag, max_lag + 1):
        # a[i] pairs with b[j], j = i + lag - offset
        shift = lag - offset
        i_lo = max(0, -shift)
        i_hi = min(a.size, b.size - shift)
        if i_hi <= i_lo:
            results.append(LagCorrelation(lag, None, 0))
            continue
        xa = a[i_lo:i_hi]
        xb = b[i_lo + shift : i_hi + shift]
        valid = ~(np.isnan(xa) | np.isnan(xb))
        xa, xb = xa[valid], xb[valid]
        overlap = int(xa.size)
        if overlap < MIN_OVERLAP or np.ptp(xa) == 0 or np.ptp(xb) == 0:
            results.append(LagCorrelation(lag, None, overlap))
            continue
        r = float(np.clip(pearsonr(xa, xb).statistic, -1.0, 1.0))
        results.append(LagCorrelation(lag, r, overlap))
    return results


class SentimentBuffer:
    """Running sentiment sums of completed items, bucketed by post time.

    Bucket k covers `[origin_s + k * width, origin_s + (k + 1) * width)`.
    Window queries aligned to the bucket grid are exact.
    """

    def __init__(self, origin_s: float = 0.0, bucket_width_s: float = 1.0) -> None:
        if bucket_width_s <= 0:
            raise ValueError("bucket_width_s must be positive")
        self.origin_s = origin_s
        self.bucket_width_s = bucket_width_s
        self._sums: dict[int, float] = {}
        self._counts: dict[int, int] = {}
        self._total = 0

    def __len__(self) -> int:
        return self._total

    def _bucket(self, t: float) -> int:
        return math.floor((t - self.origin_s) / self.bucket_width_s + 1e-9)

    def add(self, post_time: float, score: float) -> None:
        key = self._bucket(post_time)
        self._sums[key] = self._sums.get(key, 0.0) + score
        self._counts[key] = self._counts.get(key, 0) + 1
        self._total += 1

    def window(self, start_s: float, end_s: float) -> tuple[float, int]:
        """Sum and count of scores posted in `[start_s, end_s)`."""
        total = 0.0
        count = 0
        for key in range(self._bucket(start_s), self._bucket(end_s)):
            n = self._counts.get(key)
            if n:
                total += self._sums[key]
                count += n
        return total, count

    def window_mean(self, start_s: float, end_s: float) -> float | None:
        """Mean score posted in `[start_s, end_s)`, None when empty."""
        total, count = self.window(start_s, end_s)
        return total / count if count else None


@dataclass(frozen=True)
class BucketRow:
    start_s: float
    volume: float
    sentiment: float
    sentiment_ema: float
    variation: float


@dataclass
class CorrelationReport:
    """Lag table and per-bucket series of a sentiment/volume analysis.

    Attributes:
        bucket_width_s: Bucket width of every series.
        lags: Pearson r of smoothed sentiment at t against volume at t + lag.
        rows: Per-bucket volume, mean sentiment, its EMA and variation.
        volume_peak_s: Start of the bucket with the highest volume.
        variation_peak_s: Start of the strongest variation bucket in the
            `max_lag` buckets up to the volume peak.
        lead_buckets: Buckets between the variation peak and the volume peak.
    """

    bucket_width_s: float
    lags: list[LagCorrelation]
    rows: list[BucketRow] = field(default_factory=list)
    volume_peak_s: float | None = None
    variation_peak_s: float | None = None
    lead_buckets: int | None = None

    def lag_zero_r(self) -> float | None:
        for entry in self.lags:
            if entry.lag == 0:
                return entry.r
        return None

    def write_lag_table(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["lag_buckets", "lag_s", "r", "overlap"])
            for entry in self.lags:
                writer.writerow(
                    [
                        entry.lag,
                        format(entry.lag * self.bucket_width_s, "g"),
                        "" if entry.r is None else format(entry.r, ".6f"),
                        entry.overlap,
                    ]
                )

    def write_series(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["start_s", "volume", "sentiment", "sentiment_ema", "variation"])
            for row in self.rows:
                writer.writerow(
                    [
                        format(row.start_s, "g"),
                        format(row.volume, "g"),
                        *(
                            "" if math.isnan(v) else format(v, ".6f")
                            for v in (row.sentiment, row.sentiment_ema, row.variation)
                        ),
                    ]
                )


def report_correlation(
    items: Sequence[WorkItem],
    bucket_width_s: float = 60.0,
    max_lag: int = 10,
    ema_window_s: float = 60.0,
) -> CorrelationReport:
    """Analyze how sentiment leads volume in a trace or a finished run.

    Args:
        items: Items of a raw trace or of a completed run.
        bucket_width_s: Resampling width of every series.
        max_lag: Largest lag, in buckets, of the correlation table.
        ema_window_s: Smoothing window mapped to `alpha = 2 / (N + 1)`.
    """
    volume = bucketize(items, "count", bucket_width_s)
    if len(volume) == 0:
        logger.warning("correlation_report_empty")
        return CorrelationReport(bucket_width_s, [])
    sentiment = bucketize(items, "sentiment", bucket_width_s, origin_s=volume.origin_s)
    smoothed = ema(sentiment, ema_alpha(ema_window_s, bucket_width_s))
    lags = lagged_pearson(smoothed, volume, max_lag)

    var_values = np.full(len(volume), np.nan)
    if len(smoothed) >= 2:
        var_values[1:] = variation(smoothed).values

    peak = int(np.argmax(volume.values))
    window = var_values[max(0, peak - max_lag) : peak + 1]
    variation_peak: int | None = None
    if window.size and not np.all(np.isnan(window)):
        variation_peak = max(0, peak - max_lag) + int(np.nanargmax(window))

    starts = volume.bucket_starts()
    rows = [
        BucketRow(
            start_s=float(starts[i]),
            volume=float(volume.values[i]),
            sentiment=float(sentiment.values[i]),
            sentiment_ema=float(smoothed.values[i]),
            variation=float(var_values[i]),
        )
        for i in range(len(volume))
    ]
    report = CorrelationReport(
        bucket_width_s=bucket_width_s,
        lags=lags,
        rows=rows,
        volume_peak_s=float(starts[peak]),
        variation_peak_s=None if variation_peak is None else float(starts[variation_peak]),
        lead_buckets=None if variation_peak is None else peak - variation_peak,
    )
    logger.info(
        "correlation_reported",
        buckets=len(volume),
        lag0_r=report.lag_zero_r(),
        lead_buckets=report.lead_buckets,
    )
    return report
