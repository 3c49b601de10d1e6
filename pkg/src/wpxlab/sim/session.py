"""Per-session click, purchase, and delayed-revenue realization.

The click model is positional: the examination probability of a slot decays
geometrically with position and widget slots draw extra attention. Clicks
turn into purchases, purchases into short-term revenue, and the planted
welfare function turns page quality plus short-term outcomes into long-term
revenue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import ContentKind, PageLayout, Slot
from ..errors import DomainError
from ..metrics import layout_region_bmrs
from .world import World, layout_item_indices


@dataclass(frozen=True)
class SessionOutcome:
    """What one served page produced within the short horizon."""

    clicks: tuple[int, ...]
    non_abandonment: int
    short_term_revenue: float
    engagement_a: float
    purchase_amounts: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.non_abandonment != int(any(self.clicks)):
            raise DomainError("non_abandonment must indicate at least one click")
        if self.short_term_revenue < 0.0:
            raise DomainError("short_term_revenue must be >= 0")


@dataclass(frozen=True)
class LongTermOutcome:
    long_term_revenue: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.long_term_revenue) or self.long_term_revenue < 0.0:
            raise DomainError("long_term_revenue must be finite and >= 0")


def build_layout(
    world: World,
    query_index: int,
    template_index: int,
    available: np.ndarray,
) -> PageLayout:
    """Materialize the page a template produces given today's availability."""
    template = world.templates[template_index]
    picks = layout_item_indices(world, query_index, template_index, available)
    slots = tuple(
        Slot(
            position=i + 1,
            content_kind=kind,
            item=world.items[picks[i]],
            pixel_area=area,
        )
        for i, (kind, area) in enumerate(template.slot_plan)
    )
    return PageLayout(template_id=template.template_id, slots=slots)


def draw_availability(world: World, rng: np.random.Generator) -> np.ndarray:
    """Per-event item availability: independent stockout coin per item."""
    return rng.random(world.config.n_items) < world.config.availability_rate


def _slot_probabilities(
    world: World, layout: PageLayout, query_brand: str
) -> tuple[np.ndarray, np.ndarray]:
    cfg = world.config
    n = len(layout.slots)
    exam = np.empty(n)
    click = np.empty(n)
    for i, slot in enumerate(layout.slots):
        e = cfg.position_bias_decay ** (slot.position - 1)
        if slot.content_kind is ContentKind.WIDGET:
            e *= cfg.widget_attention_multiplier
        exam[i] = min(e, 1.0)
        c = slot.item.base_appeal
        if slot.item.brand_id == query_brand:
            c *= cfg.brand_click_boost
        click[i] = min(c, 1.0)
    return exam, click


def simulate_session(
    world: World,
    customer_index: int,
    query_index: int,
    layout: PageLayout,
    rng: np.random.Generator,
) -> SessionOutcome:
    """Realize one session on a page.

    Consumes exactly 3 * n_slots uniforms in a fixed order (examination,
    click, purchase), so outcomes are reproducible per event stream.
    """
    cfg = world.config
    query_brand = world.brands[world.queries[query_index].brand_index]
    exam_p, click_p = _slot_probabilities(world, layout, query_brand)
    n = len(layout.slots)
    match = np.array([slot.item.brand_id == query_brand for slot in layout.slots])
    purchase_p = np.minimum(
        np.where(match, cfg.purchase_prob * cfg.brand_conversion_boost, cfg.purchase_prob),
        1.0,
    )
    u = rng.random((3, n))
    examined = u[0] < exam_p
    clicked = examined & (u[1] < click_p)
    purchased = clicked & (u[2] < purchase_p)
    spend_mult = float(
        np.exp(cfg.spend_sensitivity * world.customers.propensity[customer_index])
    )
    prices = np.array([slot.item.price for slot in layout.slots])
    amounts = np.where(purchased, prices * spend_mult, 0.0)
    return SessionOutcome(
        clicks=tuple(int(c) for c in clicked),
        non_abandonment=int(clicked.any()),
        short_term_revenue=float(amounts.sum()),
        engagement_a=float(clicked.sum()),
        purchase_amounts=tuple(float(a) for a in amounts),
    )


def realize_long_term(
    world: World,
    customer_index: int,
    query_index: int,
    layout: PageLayout,
    session: SessionOutcome,
    rng: np.random.Generator,
) -> LongTermOutcome:
    """Evaluate the planted welfare function for one event.

    Long-term revenue carries forward short-term revenue and engagement, adds
    the true per-region quality effects on the realized page, the customer's
    history effect, both fixed effects, and noise; negative totals floor at 0.
    """
    cfg = world.config
    query = world.queries[query_index]
    bmrs = layout_region_bmrs(layout, world.brands[query.brand_index])
    c_top, c_mid, c_bot = cfg.true_region_effects
    zeta = float(world.zip_zeta[world.customers.zip_index[customer_index]])
    eps = cfg.noise_scale * float(rng.standard_normal())
    total = (
        cfg.short_term_carry * session.short_term_revenue
        + cfg.engagement_carry * session.engagement_a
        + c_top * bmrs[0]
        + c_mid * bmrs[1]
        + c_bot * bmrs[2]
        + world.history_effect(customer_index)
        + query.alpha
        + zeta
        + eps
    )
    return LongTermOutcome(long_term_revenue=max(total, 0.0))
