"""Shared builders for page layouts, simulated worlds, and bandit benchmarks."""

from __future__ import annotations

import numpy as np
import pytest

from wpxlab.bandit.ranker import (
    NON_ABANDONMENT,
    REVENUE,
    ImpressionRecord,
    ObjectiveStats,
    RewardWeights,
    apply_impression,
    new_bundle,
    select_template,
)
from wpxlab.domain import ContentKind, ContextFeatures, Device, Item, ObjectiveVector, PageLayout, Slot
from wpxlab.sim.world import WorldConfig, generate_world


def make_item(
    brand: str = "b000",
    appeal: float = 0.5,
    price: float = 10.0,
    item_id: str = "i0",
) -> Item:
    return Item(item_id=item_id, brand_id=brand, base_appeal=appeal, price=price)


def make_layout(
    matches,
    query_brand: str = "b000",
    other_brand: str = "zzz",
    template_id: str = "page",
    area: float = 100.0,
    kinds=None,
    appeal: float = 0.5,
    price: float = 10.0,
) -> PageLayout:
    """One slot per entry of ``matches`` at positions 1..n, uniform areas."""
    slots = []
    for i, m in enumerate(matches):
        slots.append(
            Slot(
                position=i + 1,
                content_kind=ContentKind.ORGANIC if kinds is None else kinds[i],
                item=make_item(
                    brand=query_brand if m else other_brand,
                    appeal=appeal,
                    price=price,
                    item_id=f"i{i}",
                ),
                pixel_area=area,
            )
        )
    return PageLayout(template_id=template_id, slots=tuple(slots))


@pytest.fixture(scope="session")
def default_world():
    return generate_world(WorldConfig(seed=11))


@pytest.fixture(scope="session")
def rng_factory():
    def factory(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return factory


def stationary_best_template_rate(seed: int, rounds: int = 10_000) -> float:
    """Fraction of the final 1,000 rounds whose pick is the best template.

    Stationary three-template environment: template t0 pays the highest mean
    revenue and click-through; a learner that converges should serve it almost
    exclusively by the end.
    """
    reward = RewardWeights(
        weights={REVENUE: 1.0, NON_ABANDONMENT: 0.2},
        stats={
            REVENUE: ObjectiveStats(1.0, 1.0),
            NON_ABANDONMENT: ObjectiveStats(0.6, 0.5),
        },
    )
    bundle = new_bundle(("c0",), ("s0", "s1", "s2"), reward, None, with_satisfaction=False)
    context = ContextFeatures(
        device=Device.DESKTOP,
        query_specificity=0.5,
        category_id="c0",
        membership=0,
        content_signals={"t0": (1, 0, 0), "t1": (0, 1, 0), "t2": (0, 0, 1)},
    )
    candidates = [PageLayout(t, ()) for t in ("t0", "t1", "t2")]
    mu = {"t0": 2.0, "t1": 1.2, "t2": 0.6}
    p_click = {"t0": 0.9, "t1": 0.6, "t2": 0.4}
    env = np.random.default_rng(seed + 10_000)
    picks = []
    for t in range(rounds):
        chosen, _ = select_template(
            context, candidates, bundle, np.random.default_rng(seed * 1_000_003 + t)
        )
        tid = chosen.template_id
        picks.append(tid)
        revenue = max(0.0, mu[tid] + 0.2 * env.standard_normal())
        label = int(env.random() < p_click[tid])
        bundle = apply_impression(
            bundle,
            ImpressionRecord(
                ts=1,
                context=context,
                template_id=tid,
                targets=ObjectiveVector(revenue, label),
                long_term_revenue=0.0,
                long_term_available_on=1,
            ),
        )
    tail = picks[-1000:]
    return tail.count("t0") / 1000.0
