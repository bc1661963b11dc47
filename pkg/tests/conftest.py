"""Shared fixtures."""

from collections.abc import Callable

import pytest

from mkg_lib_autoscale.models.workload import SentimentTriple, WorkItem

ItemFactory = Callable[..., WorkItem]


@pytest.fixture
def make_item() -> ItemFactory:
    """Factory for work items with neutral sentiment by default."""
    counter = iter(range(1_000_000))

    def factory(
        post_time: float = 0.0,
        cycles: float = 1.0,
        class_id: str = "c",
        score: float = 0.0,
        item_id: str | None = None,
    ) -> WorkItem:
        return WorkItem(
            id=item_id if item_id is not None else f"i{next(counter):06d}",
            post_time=post_time,
            class_id=class_id,
            cycles_required=cycles,
            cycles_remaining=cycles,
            sentiment=SentimentTriple(p_pos=score, p_neg=0.0, p_neu=1.0 - score),
        )

    return factory
