"""Synthetic marketplace with planted causal structure.

The world holds a catalog, customers with history vectors, branded query
groups, ZIP effects, and a fixed template pool. Long-term revenue follows a
known welfare function whose region coefficients are the ground truth every
estimator in the repo is judged against. Customers carry a latent spend
propensity correlated with their history; the confounded logging policy
routes high-propensity customers toward brand-heavy templates, which is
exactly the bias the estimation pipeline must remove.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..domain import ContentKind, Item, PageTemplate
from ..errors import DomainError
from ..rng import stream

HISTORY_COLUMNS = ("h_spend", "h_orders", "h_engage", "h_tenure")
SIGNAL_NAMES = (
    "expected_bmr_top",
    "expected_bmr_mid",
    "expected_bmr_bot",
    "organic_appeal",
    "widget_appeal",
    "widget_pixel_share",
)

ORGANIC_AREA = 1.0
WIDGET_AREA = 1.5
REGION_SPAN = 8
PAGE_SLOTS = 24

# canonical pool: (template_id, widget block position range or None, item filter,
#                  assignment affinity to customer propensity, fixed-effect loading)
TEMPLATE_TABLE = (
    ("organic_grid", None, "any", 0.0, 0.0),
    ("brand_top", (1, 4), "query_brand", 1.0, 0.8),
    ("brand_mid", (9, 16), "query_brand", 0.7, 0.5),
    ("brand_bottom", (17, 24), "query_brand", 0.5, 0.3),
    ("trending_top", (1, 4), "high_appeal", 0.2, 0.1),
    ("trending_mid", (13, 16), "high_appeal", 0.1, 0.0),
)


@dataclass(frozen=True)
class WorldConfig:
    """Population sizes, welfare coefficients, and behavioral knobs."""

    n_customers: int = 2000
    n_queries: int = 50
    n_zips: int = 30
    n_brands: int = 12
    n_templates: int = 6
    true_region_effects: tuple[float, float, float] = (1.0, 0.6, 0.0)
    short_term_carry: float = 0.35
    engagement_carry: float = 0.10
    fixed_effect_scales: tuple[float, float] = (0.5, 0.3)
    noise_scale: float = 0.5
    position_bias_decay: float = 0.93
    widget_attention_multiplier: float = 1.3
    seed: int = 0
    n_items: int = 240
    n_categories: int = 3
    history_effects: tuple[float, ...] = (0.02, 0.8, 0.5, 0.1)
    confound_strength: float = 2.0
    propensity_noise: float = 0.5
    availability_rate: float = 0.9
    purchase_prob: float = 0.30
    brand_click_boost: float = 1.55
    brand_conversion_boost: float = 1.35
    organic_brand_bonus: float = 0.25
    spend_sensitivity: float = 0.8
    high_appeal_threshold: float = 0.6
    mobile_fraction: float = 0.35
    membership_rate: float = 0.4

    def __post_init__(self) -> None:
        counts = {
            "n_customers": self.n_customers,
            "n_queries": self.n_queries,
            "n_zips": self.n_zips,
            "n_brands": self.n_brands,
            "n_templates": self.n_templates,
            "n_items": self.n_items,
            "n_categories": self.n_categories,
        }
        for name, value in counts.items():
            if value < 1:
                raise DomainError(f"{name} must be >= 1, got {value}")
        if self.n_templates > len(TEMPLATE_TABLE):
            raise DomainError(
                f"template pool supports up to {len(TEMPLATE_TABLE)} templates"
            )
        scales = (
            *self.fixed_effect_scales,
            self.noise_scale,
            self.propensity_noise,
        )
        if any(s < 0 for s in scales):
            raise DomainError("scale parameters must be >= 0")
        if not 0.0 < self.position_bias_decay < 1.0:
            raise DomainError("position_bias_decay must be in (0, 1)")
        if self.widget_attention_multiplier <= 0.0:
            raise DomainError("widget_attention_multiplier must be > 0")
        if len(self.history_effects) != len(HISTORY_COLUMNS):
            raise DomainError(
                f"history_effects must have {len(HISTORY_COLUMNS)} entries"
            )
        if not 0.0 < self.availability_rate <= 1.0:
            raise DomainError("availability_rate must be in (0, 1]")
        for name in ("purchase_prob", "mobile_fraction", "membership_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class CustomerTable:
    """Column-oriented customer population."""

    history: np.ndarray  # (n, len(HISTORY_COLUMNS))
    u_lin: np.ndarray  # history-predictable core of the latent propensity
    propensity: np.ndarray  # u_lin plus private noise
    zip_index: np.ndarray
    membership: np.ndarray  # 0/1


@dataclass(frozen=True)
class QueryGroup:
    query_id: str
    brand_index: int
    specificity: float
    category_id: str
    alpha: float


@dataclass(frozen=True)
class World:
    """Everything fixed before any session runs."""

    config: WorldConfig
    items: tuple[Item, ...]
    item_appeal: np.ndarray
    item_price: np.ndarray
    item_brand: np.ndarray  # brand index per item
    brands: tuple[str, ...]
    customers: CustomerTable
    queries: tuple[QueryGroup, ...]
    query_alpha: np.ndarray
    zip_ids: tuple[str, ...]
    zip_zeta: np.ndarray
    categories: tuple[str, ...]
    templates: tuple[PageTemplate, ...]
    template_widget_filter: tuple[str, ...]
    template_affinity: np.ndarray
    template_fe_loading: np.ndarray
    organic_order: np.ndarray = field(repr=False)  # (n_queries, n_items)
    appeal_order: np.ndarray = field(repr=False)  # (n_items,)
    brand_orders: tuple[np.ndarray, ...] = field(repr=False)
    content_signals: np.ndarray = field(repr=False)  # (n_queries, n_templates, 6)
    signal_names: tuple[str, ...] = SIGNAL_NAMES

    @property
    def n_slots(self) -> int:
        return PAGE_SLOTS

    def history_effect(self, customer_index: int) -> float:
        return float(
            np.asarray(self.config.history_effects)
            @ self.customers.history[customer_index]
        )


def _make_templates(n_templates: int) -> tuple[tuple[PageTemplate, ...], tuple[str, ...]]:
    templates = []
    filters = []
    for template_id, widget_range, item_filter, _, _ in TEMPLATE_TABLE[:n_templates]:
        plan = []
        for pos in range(1, PAGE_SLOTS + 1):
            if widget_range is not None and widget_range[0] <= pos <= widget_range[1]:
                plan.append((ContentKind.WIDGET, WIDGET_AREA))
            else:
                plan.append((ContentKind.ORGANIC, ORGANIC_AREA))
        templates.append(
            PageTemplate(
                template_id=template_id,
                slot_plan=tuple(plan),
                eligible_item_filter=item_filter,
            )
        )
        filters.append(item_filter)
    return tuple(templates), tuple(filters)


def _standardize(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    return (v - v.mean()) / sd if sd > 0 else np.zeros_like(v)


def generate_world(config: WorldConfig) -> World:
    """Materialize a world deterministically from the config seed."""
    seed = config.seed

    r_items = stream(seed, "world", "items")
    appeal = r_items.beta(2.0, 2.0, config.n_items)
    price = np.exp(r_items.normal(3.0, 0.45, config.n_items))
    brand_idx = np.arange(config.n_items) % config.n_brands
    brands = tuple(f"b{i:03d}" for i in range(config.n_brands))
    items = tuple(
        Item(
            item_id=f"i{i:05d}",
            brand_id=brands[brand_idx[i]],
            base_appeal=float(appeal[i]),
            price=float(price[i]),
        )
        for i in range(config.n_items)
    )

    r_cust = stream(seed, "world", "customers")
    spend = r_cust.gamma(4.0, 25.0, config.n_customers)
    orders = r_cust.poisson(8.0, config.n_customers).astype(float)
    engage = r_cust.beta(2.0, 2.0, config.n_customers)
    tenure = r_cust.uniform(0.0, 10.0, config.n_customers)
    history = np.column_stack([spend, orders, engage, tenure])
    u_lin = 0.6 * _standardize(spend) + 0.4 * _standardize(orders)
    propensity = u_lin + config.propensity_noise * r_cust.standard_normal(
        config.n_customers
    )
    customers = CustomerTable(
        history=history,
        u_lin=u_lin,
        propensity=propensity,
        zip_index=r_cust.integers(0, config.n_zips, config.n_customers),
        membership=(r_cust.random(config.n_customers) < config.membership_rate).astype(
            np.int64
        ),
    )

    r_fe = stream(seed, "world", "fixed_effects")
    sigma_q, sigma_z = config.fixed_effect_scales
    query_alpha = sigma_q * r_fe.standard_normal(config.n_queries)
    zip_zeta = sigma_z * r_fe.standard_normal(config.n_zips)
    zip_ids = tuple(f"z{i:03d}" for i in range(config.n_zips))
    categories = tuple(f"cat{i}" for i in range(config.n_categories))

    r_query = stream(seed, "world", "queries")
    q_brand = r_query.integers(0, config.n_brands, config.n_queries)
    q_spec = r_query.uniform(0.3, 1.0, config.n_queries)
    q_cat = r_query.integers(0, config.n_categories, config.n_queries)
    queries = tuple(
        QueryGroup(
            query_id=f"q{i:03d}",
            brand_index=int(q_brand[i]),
            specificity=float(q_spec[i]),
            category_id=categories[q_cat[i]],
            alpha=float(query_alpha[i]),
        )
        for i in range(config.n_queries)
    )

    templates, widget_filters = _make_templates(config.n_templates)
    affinity = np.array([row[3] for row in TEMPLATE_TABLE[: config.n_templates]])
    fe_loading = np.array([row[4] for row in TEMPLATE_TABLE[: config.n_templates]])

    idx = np.arange(config.n_items)
    organic_order = np.empty((config.n_queries, config.n_items), dtype=np.intp)
    for qi, query in enumerate(queries):
        score = appeal + config.organic_brand_bonus * (brand_idx == query.brand_index)
        organic_order[qi] = np.lexsort((idx, -score))
    appeal_order = np.lexsort((idx, -appeal))
    brand_orders = tuple(
        appeal_order[brand_idx[appeal_order] == b] for b in range(config.n_brands)
    )

    world = World(
        config=config,
        items=items,
        item_appeal=appeal,
        item_price=price,
        item_brand=brand_idx,
        brands=brands,
        customers=customers,
        queries=queries,
        query_alpha=query_alpha,
        zip_ids=zip_ids,
        zip_zeta=zip_zeta,
        categories=categories,
        templates=templates,
        template_widget_filter=widget_filters,
        template_affinity=affinity,
        template_fe_loading=fe_loading,
        organic_order=organic_order,
        appeal_order=appeal_order,
        brand_orders=brand_orders,
        content_signals=np.zeros((config.n_queries, config.n_templates, len(SIGNAL_NAMES))),
    )
    return replace(world, content_signals=_content_signal_table(world))


def eligible_item_mask(world: World, item_filter: str, query_index: int) -> np.ndarray:
    """Boolean catalog mask for a template's widget-item predicate."""
    if item_filter == "any":
        return np.ones(world.config.n_items, dtype=bool)
    if item_filter == "query_brand":
        return world.item_brand == world.queries[query_index].brand_index
    if item_filter == "high_appeal":
        return world.item_appeal >= world.config.high_appeal_threshold
    raise DomainError(f"unknown item filter {item_filter!r}")


def _widget_source(world: World, item_filter: str, query_index: int) -> np.ndarray:
    """Widget fill order: predicate pool by descending appeal."""
    if item_filter == "query_brand":
        return world.brand_orders[world.queries[query_index].brand_index]
    if item_filter == "high_appeal":
        order = world.appeal_order
        keep = world.item_appeal[order] >= world.config.high_appeal_threshold
        return order[keep]
    return world.appeal_order


def layout_item_indices(
    world: World,
    query_index: int,
    template_index: int,
    available: np.ndarray,
) -> np.ndarray:
    """Pick the catalog item for every slot of a template, in position order.

    Widget slots draw from the template's predicate pool by appeal; organic
    slots draw from the query's relevance order; no item repeats on a page.
    An exhausted widget pool falls through to the organic order so the page
    always fills.
    """
    template = world.templates[template_index]
    organic_src = world.organic_order[query_index]
    widget_src = _widget_source(
        world, world.template_widget_filter[template_index], query_index
    )
    used = np.zeros(world.config.n_items, dtype=bool)
    chosen = np.empty(len(template.slot_plan), dtype=np.intp)
    o_ptr = 0
    w_ptr = 0

    def take(source: np.ndarray, ptr: int) -> tuple[int, int]:
        while ptr < len(source):
            cand = source[ptr]
            ptr += 1
            if available[cand] and not used[cand]:
                return int(cand), ptr
        return -1, ptr

    for slot_i, (kind, _) in enumerate(template.slot_plan):
        item = -1
        if kind is ContentKind.WIDGET:
            item, w_ptr = take(widget_src, w_ptr)
        if item < 0:
            item, o_ptr = take(organic_src, o_ptr)
        if item < 0:
            raise DomainError("catalog exhausted while filling a page")
        used[item] = True
        chosen[slot_i] = item
    return chosen


def _content_signal_table(world: World) -> np.ndarray:
    """Per-(query, template) signals under full availability.

    These are what the ranker sees at inference time, before any
    availability noise realizes the actual page.
    """
    from ..domain import PageLayout, Slot
    from ..metrics import layout_region_bmrs

    cfg = world.config
    all_available = np.ones(cfg.n_items, dtype=bool)
    table = np.empty((cfg.n_queries, cfg.n_templates, len(SIGNAL_NAMES)))
    for qi, query in enumerate(world.queries):
        for ti, template in enumerate(world.templates):
            picks = layout_item_indices(world, qi, ti, all_available)
            slots = tuple(
                Slot(
                    position=p + 1,
                    content_kind=kind,
                    item=world.items[picks[p]],
                    pixel_area=area,
                )
                for p, (kind, area) in enumerate(template.slot_plan)
            )
            layout = PageLayout(template_id=template.template_id, slots=slots)
            bmrs = layout_region_bmrs(layout, world.brands[query.brand_index])
            widget = [s for s in slots if s.content_kind is ContentKind.WIDGET]
            organic = [s for s in slots if s.content_kind is ContentKind.ORGANIC]
            total_area = sum(s.pixel_area for s in slots)
            table[qi, ti] = (
                bmrs[0],
                bmrs[1],
                bmrs[2],
                float(np.mean([s.item.base_appeal for s in organic])) if organic else 0.0,
                float(np.mean([s.item.base_appeal for s in widget])) if widget else 0.0,
                sum(s.pixel_area for s in widget) / total_area,
            )
    return table
