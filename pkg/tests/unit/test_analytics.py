"""Unit tests for sentiment time-series analysis."""

from pathlib import Path

import numpy as np
import pytest

from mkg_lib_autoscale.analytics import (
    SentimentBuffer,
    TimeSeries,
    bucketize,
    ema,
    ema_alpha,
    lagged_pearson,
    report_correlation,
    variation,
)
from mkg_lib_autoscale.exceptions import InsufficientDataError
from mkg_lib_autoscale.models.workload import BurstEvent, SyntheticSpec
from mkg_lib_autoscale.workload import generate_synthetic


def _series(values: list[float], width: float = 60.0, origin: float = 0.0) -> TimeSeries:
    arr = np.asarray(values, dtype=np.float64)
    counts = np.where(np.isnan(arr), 0, 1).astype(np.int64)
    return TimeSeries(width, origin, arr, counts)


class TestBucketize:
    """Tests for bucketize."""

    def test_counts(self, make_item) -> None:
        """Test items are counted per bucket."""
        items = [make_item(post_time=t) for t in (10.0, 20.0, 70.0)]

        series = bucketize(items, "count", 60.0)

        assert series.values.tolist() == [2.0, 1.0]
        assert series.origin_s == 0.0

    def test_mean_sentiment(self, make_item) -> None:
        """Test the sentiment series holds the per-bucket mean score."""
        items = [make_item(post_time=5.0, score=0.2), make_item(post_time=6.0, score=0.4)]

        series = bucketize(items, "sentiment", 60.0)

        assert series.values.tolist() == [pytest.approx(0.3)]
        assert series.counts.tolist() == [2]

    def test_empty_buckets_are_nan(self, make_item) -> None:
        """Test gaps in a sentiment series are marked empty."""
        items = [make_item(post_time=0.0, score=0.5), make_item(post_time=130.0, score=0.5)]

        series = bucketize(items, "sentiment", 60.0)

        assert np.isnan(series.values[1])
        assert series.counts.tolist() == [1, 0, 1]

    def test_empty_input(self) -> None:
        """Test no items give an empty series."""
        assert len(bucketize([], "count", 60.0)) == 0

    def test_counts_sum_to_items(self) -> None:
        """Test bucket counts add up to the item count."""
        items, _ = generate_synthetic(SyntheticSpec(duration_s=900.0, base_rate=3.0))

        series = bucketize(items, "count", 60.0)

        assert series.values.sum() == len(items)


class TestEma:
    """Tests for exponential smoothing."""

    def test_constant_is_fixed_point(self) -> None:
        """Test a constant series is unchanged."""
        assert ema(_series([0.4] * 5), 0.3).values.tolist() == pytest.approx([0.4] * 5)

    def test_alpha_one_is_identity(self) -> None:
        """Test alpha = 1 returns the input."""
        values = [0.1, 0.9, 0.3]

        assert ema(_series(values), 1.0).values.tolist() == values

    def test_one_step(self) -> None:
        """Test one smoothing step."""
        assert ema(_series([0.0, 1.0]), 0.5).values.tolist() == [0.0, 0.5]

    def test_empty_bucket_carries_forward(self) -> None:
        """Test empty buckets repeat the previous value."""
        smoothed = ema(_series([0.2, float("nan"), 0.6]), 0.5)

        assert smoothed.values.tolist() == pytest.approx([0.2, 0.2, 0.4])

    def test_stays_within_range(self) -> None:
        """Test smoothing never leaves the range of the input."""
        values = np.random.default_rng(1).random(200)

        smoothed = ema(_series(values.tolist()), 0.2).values

        assert smoothed.min() >= values.min()
        assert smoothed.max() <= values.max()

    def test_rejects_bad_alpha(self) -> None:
        """Test alpha must lie in (0, 1]."""
        with pytest.raises(ValueError):
            ema(_series([1.0]), 0.0)

    def test_window_mapping(self) -> None:
        """Test an N-bucket window maps to 2 / (N + 1)."""
        assert ema_alpha(60.0, 60.0) == 1.0
        assert ema_alpha(300.0, 60.0) == pytest.approx(1.0 / 3.0)


class TestVariation:
    """Tests for sentiment variation."""

    def test_absolute_differences(self) -> None:
        """Test variation is the absolute change between buckets."""
        result = variation(_series([0.2, 0.7, 0.6]))

        assert result.values.tolist() == pytest.approx([0.5, 0.1])
        assert result.origin_s == 60.0

    def test_constant_series(self) -> None:
        """Test a constant series has zero variation."""
        assert variation(_series([0.3, 0.3, 0.3])).values.tolist() == [0.0, 0.0]

    def test_single_bucket(self) -> None:
        """Test one bucket is not enough."""
        with pytest.raises(InsufficientDataError):
            variation(_series([0.3]))


class TestLaggedPearson:
    """Tests for lagged Pearson correlation."""

    def test_self_correlation(self) -> None:
        """Test a series correlates perfectly with itself at lag 0."""
        a = _series(np.random.default_rng(3).random(50).tolist())

        assert lagged_pearson(a, a, 3)[0].r == pytest.approx(1.0)

    def test_anti_correlation(self) -> None:
        """Test a negated series correlates at -1."""
        values = np.random.default_rng(4).random(50)

        result = lagged_pearson(_series(values.tolist()), _series((-values).tolist()), 0)

        assert result[0].r == pytest.approx(-1.0)

    def test_recovers_planted_lag(self) -> None:
        """Test the strongest lag is the one the pair was built with."""
        rng = np.random.default_rng(5)
        a = rng.random(300)
        b = np.empty_like(a)
        b[:2] = rng.random(2)
        b[2:] = 2.0 * a[:-2] + 0.1 * rng.random(298)

        result = lagged_pearson(_series(a.tolist()), _series(b.tolist()), 5)

        best = max(result, key=lambda entry: entry.r or -1.0)
        assert best.lag == 2
        assert all(entry.r is None or -1.0 <= entry.r <= 1.0 for entry in result)

    def test_zero_variance_is_undefined(self) -> None:
        """Test a constant series yields no r rather than zero."""
        result = lagged_pearson(_series([1.0] * 10), _series(list(range(10))), 2)

        assert all(entry.r is None for entry in result)

    def test_short_overlap_is_undefined(self) -> None:
        """Test fewer than three pairs yield no r."""
        result = lagged_pearson(_series([1.0, 2.0, 3.0]), _series([3.0, 1.0, 2.0]), 1)

        assert result[0].r is not None
        assert result[1].r is None
        assert result[1].overlap == 2

    def test_symmetric_under_swap(self) -> None:
        """Test swapping the series mirrors the lag."""
        rng = np.random.default_rng(6)
        a = _series(rng.random(80).tolist())
        b = _series(rng.random(80).tolist())

        forward = {e.lag: e.r for e in lagged_pearson(a, b, 4)}
        backward = {e.lag: e.r for e in lagged_pearson(b, a, 0, min_lag=-4)}

        for lag, r in forward.items():
            assert backward[-lag] == pytest.approx(r)

    def test_aligned_on_absolute_time(self) -> None:
        """Test series with different origins are matched by bucket time."""
        values = np.random.default_rng(7).random(40)
        a = _series(values.tolist(), origin=0.0)
        b = _series(values[1:].tolist(), origin=60.0)

        assert lagged_pearson(a, b, 0)[0].r == pytest.approx(1.0)

    def test_rejects_mixed_widths(self) -> None:
        """Test series must share a bucket width."""
        with pytest.raises(ValueError):
            lagged_pearson(_series([1.0], width=60.0), _series([1.0], width=30.0), 0)


class TestSentimentBuffer:
    """Tests for the post-time sentiment buffer."""

    def test_window_mean(self) -> None:
        """Test windows select by post time."""
        buffer = SentimentBuffer(origin_s=0.0, bucket_width_s=1.0)
        buffer.add(10.0, 0.2)
        buffer.add(10.5, 0.4)
        buffer.add(50.0, 1.0)

        assert buffer.window_mean(0.0, 20.0) == pytest.approx(0.3)
        assert buffer.window_mean(20.0, 51.0) == pytest.approx(1.0)
        assert buffer.window_mean(60.0, 120.0) is None
        assert len(buffer) == 3

    def test_window_is_half_open(self) -> None:
        """Test the window end is excluded."""
        buffer = SentimentBuffer()
        buffer.add(120.0, 0.9)

        assert buffer.window_mean(0.0, 120.0) is None
        assert buffer.window_mean(120.0, 240.0) == pytest.approx(0.9)


class TestReportCorrelation:
    """Tests for the correlation report."""

    def test_variation_leads_volume(self) -> None:
        """Test the sentiment variation peak precedes the volume peak."""
        spec = SyntheticSpec(
            duration_s=1800.0,
            base_rate=5.0,
            bursts=[BurstEvent(event_time_s=630.0, peak_rate=80.0, rise_s=30.0, decay_s=300.0)],
            signal_lead_s=90.0,
            rng_seed=17,
        )
        items, _ = generate_synthetic(spec)

        report = report_correlation(items, bucket_width_s=60.0, max_lag=10)

        assert report.volume_peak_s == 660.0
        assert report.lead_buckets in (1, 2)
        assert report.lag_zero_r() is not None

    def test_stationary_workload_is_uncorrelated(self) -> None:
        """Test sentiment and volume of a stationary workload barely correlate."""
        spec = SyntheticSpec(duration_s=20_000.0, base_rate=1.0, rng_seed=23)
        items, _ = generate_synthetic(spec)

        report = report_correlation(items, bucket_width_s=10.0, max_lag=10, ema_window_s=10.0)

        assert len(report.rows) >= 200
        assert all(entry.r is not None and abs(entry.r) < 0.2 for entry in report.lags)

    def test_writes_tables(self, tmp_path: Path) -> None:
        """Test the lag table and series are written as CSV."""
        items, _ = generate_synthetic(SyntheticSpec(duration_s=900.0, base_rate=2.0))
        report = report_correlation(items, bucket_width_s=60.0, max_lag=3)

        report.write_lag_table(tmp_path / "lags.csv")
        report.write_series(tmp_path / "series.csv")

        lags = (tmp_path / "lags.csv").read_text(encoding="utf-8").splitlines()
        series = (tmp_path / "series.csv").read_text(encoding="utf-8").splitlines()
        assert lags[0] == "lag_buckets,lag_s,r,overlap"
        assert len(lags) == 5
        assert series[0] == "start_s,volume,sentiment,sentiment_ema,variation"
        assert len(series) == len(report.rows) + 1

    def test_empty_items(self) -> None:
        """Test an empty trace gives an empty report."""
        report = report_correlation([])

        assert report.lags == []
        assert report.lead_buckets is None
