"""Workload sources: trace files, class manifests and the synthetic generator.

Example:
    ```python
    from mkg_lib_autoscale.models import BurstEvent, SyntheticSpec
    from mkg_lib_autoscale.workload import generate_synthetic, write_trace

    spec = SyntheticSpec(
        duration_s=3600,
        base_rate=10.0,
        bursts=[BurstEvent(event_time_s=1200, peak_rate=100.0)],
        rng_seed=7,
    )
    items, classes = generate_synthetic(spec)
    write_trace("trace.csv", items)
    ```
"""

import csv
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import replace
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from mkg_lib_autoscale.dist import (
    MIN_FIT_SAMPLES,
    ServiceDemand,
    Weibull,
    ZeroDemand,
    fit,
)
from mkg_lib_autoscale.exceptions import (
    ConversionError,
    FitError,
    TraceFormatError,
    UnknownClassError,
)
from mkg_lib_autoscale.logging import get_logger
from mkg_lib_autoscale.models.workload import (
    ConversionContext,
    SentimentTriple,
    SyntheticSpec,
    WorkItem,
    WorkloadClass,
    check_proportions,
)

logger = get_logger(__name__, component="workload")

TRACE_COLUMNS = ("id", "post_time_s", "class_id", "p_pos", "p_neg", "p_neu")
DEMAND_COLUMNS = ("cycles", "delay_s")
MANIFEST_COLUMNS = ("class_id", "name", "dist", "shape", "scale", "proportion")


def _fmt(value: float) -> str:
    return format(value, ".9g")


def format_seconds(value: float) -> str:
    """Seconds with microsecond resolution and no trailing zeros."""
    return format(value, ".6f").rstrip("0").rstrip(".")


def convert_delay_to_cycles(delay_s: float, ctx: ConversionContext) -> float:
    """Convert a measured processing delay into a CPU-cycle demand.

    Cycles are shared uniformly among the items in the reference system, so
    one item received `f_ref_hz * utilization / l_avg` cycles per second.

    Raises:
        ConversionError: If delay_s is negative or not finite.
    """
    if not math.isfinite(delay_s):
        raise ConversionError(f"delay must be finite, got {delay_s}")
    if delay_s < 0:
        raise ConversionError(f"delay must be non-negative, got {delay_s}")
    return delay_s * ctx.f_ref_hz * ctx.utilization / ctx.l_avg


def _parse_float(raw: str | None, column: str, row: int, path: Path) -> float:
    try:
        value = float(raw) if raw is not None else math.nan
    except ValueError:
        raise TraceFormatError(
            f"column '{column}' is not a number: {raw!r}", row=row, path=str(path)
        ) from None
    if not math.isfinite(value):
        raise TraceFormatError(
            f"column '{column}' is missing or not finite", row=row, path=str(path)
        )
    return value


def _class_proportions(items: Sequence[WorkItem]) -> dict[str, float]:
    counts = Counter(item.class_id for item in items)
    total = len(items)
    return {class_id: counts[class_id] / total for class_id in sorted(counts)}


def load_class_manifest(path: str | Path) -> list[WorkloadClass]:
    """Read a `class_id,name,dist,shape,scale,proportion` manifest.

    Raises:
        TraceFormatError: On malformed rows, unknown `dist` values or
            proportions that do not sum to 1.
    """
    path = Path(path)
    classes: list[WorkloadClass] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise TraceFormatError(
                f"manifest header lacks columns {sorted(missing)}", row=0, path=str(path)
            )
        for row_number, record in enumerate(reader, start=1):
            kind = (record["dist"] or "").strip().lower()
            demand: ServiceDemand
            if kind == "zero":
                demand = ZeroDemand()
            elif kind == "weibull":
                shape = _parse_float(record["shape"], "shape", row_number, path)
                scale = _parse_float(record["scale"], "scale", row_number, path)
                if shape <= 0 or scale <= 0:
                    raise TraceFormatError(
                        "Weibull shape and scale must be positive",
                        row=row_number,
                        path=str(path),
                    )
                demand = Weibull(shape=shape, scale=scale)
            else:
                raise TraceFormatError(
                    f"unknown dist {kind!r}, expected weibull or zero",
                    row=row_number,
                    path=str(path),
                )
            proportion = _parse_float(record["proportion"], "proportion", row_number, path)
            if not 0.0 <= proportion <= 1.0:
                raise TraceFormatError(
                    "proportion must lie in [0, 1]", row=row_number, path=str(path)
                )
            classes.append(
                WorkloadClass(
                    class_id=record["class_id"],
                    name=record["name"] or "",
                    demand_dist=demand,
                    proportion=proportion,
                )
            )
    try:
        check_proportions(classes)
    except ValueError as e:
        raise TraceFormatError(str(e), path=str(path)) from e
    return classes


def write_class_manifest(path: str | Path, classes: Iterable[WorkloadClass]) -> None:
    """Write classes in the manifest format read by `load_class_manifest`."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for cls in classes:
            dist = cls.demand_dist
            if isinstance(dist, Weibull):
                writer.writerow(
                    [
                        cls.class_id,
                        cls.name,
                        "weibull",
                        _fmt(dist.shape),
                        _fmt(dist.scale),
                        _fmt(cls.proportion),
                    ]
                )
            else:
                writer.writerow(
                    [cls.class_id, cls.name, "zero", "", "", _fmt(cls.proportion)]
                )


def fit_classes(
    items: Sequence[WorkItem],
    proportions: dict[str, float] | None = None,
) -> list[WorkloadClass]:
    """Derive one WorkloadClass per class id from the items' cycle demands.

    All-zero classes get the zero distribution. Classes with at least 100
    distinct positive demands get a maximum-likelihood Weibull; the rest
    fall back to an exponential with the sample mean.

    Args:
        items: Items whose `cycles_required` are the observations.
        proportions: Class proportions; counted from `items` when omitted.
    """
    if not items:
        return []
    demands: dict[str, list[float]] = defaultdict(list)
    for item in items:
        demands[item.class_id].append(item.cycles_required)
    proportions = proportions or _class_proportions(items)

    classes: list[WorkloadClass] = []
    for class_id in sorted(demands):
        values = np.asarray(demands[class_id])
        positive = values[values > 0]
        dist: ServiceDemand
        if positive.size == 0:
            dist = ZeroDemand()
        else:
            dist = Weibull(shape=1.0, scale=float(positive.mean()))
            if positive.size >= MIN_FIT_SAMPLES:
                try:
                    dist = fit(positive).distribution
                except FitError as e:
                    logger.warning(
                        "class_fit_fallback", class_id=class_id, error=str(e)
                    )
            else:
                logger.info(
                    "class_fit_exponential",
                    class_id=class_id,
                    sample_count=int(positive.size),
                )
        classes.append(
            WorkloadClass(
                class_id=class_id,
                name=class_id,
                demand_dist=dist,
                proportion=proportions.get(class_id, 0.0),
            )
        )
    return classes


def load_trace(
    path: str | Path,
    reference: ConversionContext | None = None,
    manifest: str | Path | None = None,
) -> tuple[list[WorkItem], list[WorkloadClass]]:
    """Load work items from a trace file.

    Args:
        path: CSV with header `id,post_time_s,class_id,p_pos,p_neg,p_neu`
            followed by exactly one of `cycles` or `delay_s`.
        reference: Conversion context, required for `delay_s` traces.
        manifest: Optional class manifest; class ids must then be listed
            there and its distributions are used. Without one, demand
            distributions are fitted from the trace.

    Returns:
        Items in post-time order and the classes present in the file, with
        proportions counted from the file.

    Raises:
        TraceFormatError: On malformed records (the row number is reported).
        UnknownClassError: If a class id is missing from the manifest.
        ConversionError: If `delay_s` is used without a reference context.
    """
    path = Path(path)
    known = {c.class_id: c for c in load_class_manifest(manifest)} if manifest else None

    items: list[WorkItem] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = list(reader.fieldnames or ())
        missing = [column for column in TRACE_COLUMNS if column not in header]
        if missing:
            raise TraceFormatError(
                f"header lacks columns {missing}", row=0, path=str(path)
            )
        present = [column for column in DEMAND_COLUMNS if column in header]
        if len(present) != 1:
            raise TraceFormatError(
                "header must contain exactly one of 'cycles' or 'delay_s'",
                row=0,
                path=str(path),
            )
        demand_column = present[0]
        if demand_column == "delay_s" and reference is None:
            raise ConversionError(
                f"{path}: delay_s traces need a ConversionContext"
            )

        seen_ids: set[str] = set()
        for row_number, record in enumerate(reader, start=1):
            item_id = record["id"]
            class_id = record["class_id"]
            if not item_id or not class_id:
                raise TraceFormatError(
                    "id and class_id must be non-empty", row=row_number, path=str(path)
                )
            if item_id in seen_ids:
                raise TraceFormatError(
                    f"duplicate id {item_id!r}", row=row_number, path=str(path)
                )
            seen_ids.add(item_id)
            if known is not None and class_id not in known:
                raise UnknownClassError(
                    f"unknown class {class_id!r}", row=row_number, path=str(path)
                )

            post_time = _parse_float(record["post_time_s"], "post_time_s", row_number, path)
            demand = _parse_float(record[demand_column], demand_column, row_number, path)
            if post_time < 0:
                raise TraceFormatError(
                    "negative post time", row=row_number, path=str(path)
                )
            if demand < 0:
                raise TraceFormatError(
                    f"negative {demand_column}", row=row_number, path=str(path)
                )
            if reference is not None and demand_column == "delay_s":
                demand = convert_delay_to_cycles(demand, reference)

            try:
                sentiment = SentimentTriple(
                    p_pos=_parse_float(record["p_pos"], "p_pos", row_number, path),
                    p_neg=_parse_float(record["p_neg"], "p_neg", row_number, path),
                    p_neu=_parse_float(record["p_neu"], "p_neu", row_number, path),
                )
            except ValueError as e:
                raise TraceFormatError(str(e), row=row_number, path=str(path)) from e

            items.append(
                WorkItem(
                    id=item_id,
                    post_time=post_time,
                    class_id=class_id,
                    cycles_required=demand,
                    cycles_remaining=demand,
                    sentiment=sentiment,
                )
            )

    if any(a.post_time > b.post_time for a, b in zip(items, items[1:], strict=False)):
        logger.warning("trace_rows_out_of_order", path=str(path), items=len(items))
        items.sort(key=lambda item: item.post_time)

    proportions = _class_proportions(items) if items else {}
    if known is not None:
        classes = [
            known[class_id].model_copy(update={"proportion": proportion})
            for class_id, proportion in proportions.items()
        ]
    else:
        classes = fit_classes(items, proportions)

    logger.info(
        "trace_loaded",
        path=str(path),
        items=len(items),
        classes=len(classes),
        demand_column=demand_column,
    )
    return items, classes


def write_trace(path: str | Path, items: Iterable[WorkItem]) -> None:
    """Write items as a `cycles` trace.

    Post times keep microseconds, demands 9 significant digits. Sentiment
    probabilities are written exactly so they still sum to 1 when read back.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow((*TRACE_COLUMNS, "cycles"))
        for item in items:
            writer.writerow(
                [
                    item.id,
                    format_seconds(item.post_time),
                    item.class_id,
                    repr(item.sentiment.p_pos),
                    repr(item.sentiment.p_neg),
                    repr(item.sentiment.p_neu),
                    _fmt(item.cycles_required),
                ]
            )


def _draw_demands(
    class_index: NDArray[np.intp],
    classes: Sequence[WorkloadClass],
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    cycles = np.zeros(class_index.size)
    for position, cls in enumerate(classes):
        mask = class_index == position
        count = int(mask.sum())
        if count:
            cycles[mask] = cls.demand_dist.sample(rng, count)
    return cycles


def resample_demands(
    items: Sequence[WorkItem],
    classes: Sequence[WorkloadClass],
    rng: np.random.Generator,
) -> list[WorkItem]:
    """Copy `items` with cycle demands redrawn from their class distributions.

    Raises:
        UnknownClassError: If an item's class is not in `classes`.
    """
    positions = {cls.class_id: position for position, cls in enumerate(classes)}
    try:
        class_index = np.fromiter(
            (positions[item.class_id] for item in items), dtype=np.intp, count=len(items)
        )
    except KeyError as e:
        raise UnknownClassError(f"unknown class {e.args[0]!r}") from None
    cycles = _draw_demands(class_index, classes, rng)
    return [
        replace(
            item,
            cycles_required=float(c),
            cycles_remaining=float(c),
            completion_time=None,
        )
        for item, c in zip(items, cycles, strict=True)
    ]


def _burst_envelopes(spec: SyntheticSpec, t: NDArray[np.float64]) -> NDArray[np.float64]:
    """Extra arrival rate contributed by all bursts at times `t`."""
    extra = np.zeros_like(t)
    for burst in spec.bursts:
        height = max(burst.peak_rate - spec.base_rate, 0.0)
        since = t - burst.event_time_s
        rising = (since >= 0) & (since < burst.rise_s)
        decaying = since >= burst.rise_s
        extra[rising] += height * since[rising] / burst.rise_s
        extra[decaying] += height * np.exp(
            -(since[decaying] - burst.rise_s) / burst.decay_s
        )
    return extra


def arrival_rate(spec: SyntheticSpec, t: NDArray[np.float64]) -> NDArray[np.float64]:
    """Instantaneous arrival rate (items/s) of the generator at times `t`."""
    phase = 2.0 * np.pi * t / spec.base_period_s
    base = spec.base_rate * (1.0 + spec.base_amplitude * np.sin(phase))
    return base + _burst_envelopes(spec, t)


def sentiment_mean(spec: SyntheticSpec, t: NDArray[np.float64]) -> NDArray[np.float64]:
    """Mean sentiment score of items posted at times `t`.

    The burst mean holds from `signal_lead_s` before each event until the
    end of its rise, then relaxes towards the baseline with the burst's
    decay constant.
    """
    mean = np.full_like(t, spec.baseline_sentiment_mean)
    jump = spec.burst_sentiment_mean - spec.baseline_sentiment_mean
    for burst in spec.bursts:
        start = burst.event_time_s - spec.signal_lead_s
        peak_end = burst.event_time_s + burst.rise_s
        level = np.where(
            (t >= start) & (t <= peak_end),
            spec.burst_sentiment_mean,
            spec.baseline_sentiment_mean,
        )
        after = t > peak_end
        level[after] = spec.baseline_sentiment_mean + jump * np.exp(
            -(t[after] - peak_end) / burst.decay_s
        )
        mean = np.maximum(mean, level) if jump >= 0 else np.minimum(mean, level)
    return mean


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[WorkItem], list[WorkloadClass]]:
    """Draw a bursty workload whose sentiment leads its volume bursts.

    Arrivals follow a non-homogeneous Poisson process sampled by thinning a
    homogeneous process at the peak rate. The same spec (seed included)
    always yields the same items.

    Returns:
        Items in post-time order and the spec's classes.
    """
    rng = np.random.default_rng(spec.rng_seed)
    classes = list(spec.classes)
    if spec.duration_s <= 0:
        return [], classes

    rate_max = spec.base_rate * (1.0 + spec.base_amplitude) + sum(
        max(burst.peak_rate - spec.base_rate, 0.0) for burst in spec.bursts
    )
    if rate_max <= 0:
        return [], classes

    candidate_count = rng.poisson(rate_max * spec.duration_s)
    candidates = np.sort(rng.uniform(0.0, spec.duration_s, candidate_count))
    keep = rng.random(candidates.size) * rate_max < arrival_rate(spec, candidates)
    post_times = candidates[keep]
    n = post_times.size

    scores = np.clip(
        rng.normal(sentiment_mean(spec, post_times), spec.sentiment_sd), 0.0, 1.0
    )
    positive_share = rng.random(n)
    p_pos = scores * positive_share
    p_neg = scores - p_pos
    p_neu = 1.0 - scores

    class_index = rng.choice(len(classes), size=n, p=[c.proportion for c in classes])
    cycles = _draw_demands(class_index, classes, rng)

    items = [
        WorkItem(
            id=f"s{i:07d}",
            post_time=float(post_times[i]),
            class_id=classes[class_index[i]].class_id,
            cycles_required=float(cycles[i]),
            cycles_remaining=float(cycles[i]),
            sentiment=SentimentTriple(
                p_pos=float(p_pos[i]), p_neg=float(p_neg[i]), p_neu=float(p_neu[i])
            ),
        )
        for i in range(n)
    ]
    logger.info(
        "synthetic_workload_generated",
        items=n,
        duration_s=spec.duration_s,
        bursts=len(spec.bursts),
        seed=spec.rng_seed,
    )
    return items, classes
