"""Logged event generation and panel emission for the estimator.

Two logging policies: a confounded one that routes high-propensity customers
and high-effect query groups toward brand-heavy templates (what production
traffic looks like), and a randomized one that assigns templates uniformly
(what a weight-estimation experiment looks like).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import PageLayout
from ..errors import DomainError
from ..metrics import layout_region_bmrs
from ..rng import event_stream, stream
from .world import HISTORY_COLUMNS, World
from .session import (
    LongTermOutcome,
    SessionOutcome,
    build_layout,
    draw_availability,
    realize_long_term,
    simulate_session,
)
from ..dml.panel import PanelDataset

X_COLUMNS = ("x_bmr_top", "x_bmr_mid", "x_bmr_bot")
M_COLUMNS = ("m_short_rev", "m_engagement")

CONFOUNDED = "confounded"
RANDOMIZED = "randomized"


@dataclass(frozen=True)
class SimulatedEvent:
    """One logged search event with its page and both horizons' outcomes."""

    event_id: str
    customer_index: int
    query_index: int
    template_id: str
    layout: PageLayout
    session: SessionOutcome
    long_term: LongTermOutcome | None


def assign_templates(
    world: World,
    customer_idx: np.ndarray,
    query_idx: np.ndarray,
    policy: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """Pick a template per event under the named logging policy."""
    n = len(customer_idx)
    n_templates = len(world.templates)
    if policy == RANDOMIZED:
        return rng.integers(0, n_templates, n)
    if policy != CONFOUNDED:
        raise DomainError(f"unknown logging policy {policy!r}")
    u = world.customers.u_lin[customer_idx]
    fe = (
        world.query_alpha[query_idx]
        + world.zip_zeta[world.customers.zip_index[customer_idx]]
    )
    systematic = world.config.confound_strength * (
        np.outer(u, world.template_affinity) + np.outer(fe, world.template_fe_loading)
    )
    noise = rng.gumbel(size=(n, n_templates))
    return np.argmax(systematic + noise, axis=1)


def generate_events(
    world: World,
    n_events: int,
    policy: str,
    seed: int,
) -> list[SimulatedEvent]:
    """Draw customers and queries, assign templates, realize both horizons."""
    if n_events < 1:
        raise DomainError("n_events must be >= 1")
    cfg = world.config
    r = stream(seed, "panel_events")
    customer_idx = r.integers(0, cfg.n_customers, n_events)
    query_idx = r.integers(0, cfg.n_queries, n_events)
    template_idx = assign_templates(
        world, customer_idx, query_idx, policy, stream(seed, "panel_assignment")
    )
    events = []
    for i in range(n_events):
        ci = int(customer_idx[i])
        qi = int(query_idx[i])
        ti = int(template_idx[i])
        available = draw_availability(world, event_stream(seed, i, "availability"))
        layout = build_layout(world, qi, ti, available)
        session = simulate_session(
            world, ci, qi, layout, event_stream(seed, i, "session")
        )
        long_term = realize_long_term(
            world, ci, qi, layout, session, event_stream(seed, i, "long_term")
        )
        events.append(
            SimulatedEvent(
                event_id=f"e{i:08d}",
                customer_index=ci,
                query_index=qi,
                template_id=world.templates[ti].template_id,
                layout=layout,
                session=session,
                long_term=long_term,
            )
        )
    return events


def emit_panel(world: World, events: list[SimulatedEvent]) -> PanelDataset:
    """Flatten events into the estimator's panel: keys, target, X, M, H.

    Rows are ordered by event_id regardless of input order, so parallel
    generation cannot change the output.
    """
    if not events:
        raise DomainError("no events to emit")
    events = sorted(events, key=lambda e: e.event_id)
    n = len(events)
    x = np.empty((n, len(X_COLUMNS)))
    m = np.empty((n, len(M_COLUMNS)))
    h = np.empty((n, len(HISTORY_COLUMNS)))
    drev = np.empty(n)
    event_id = []
    customer_id = []
    query_group = []
    zip_code = []
    for i, ev in enumerate(events):
        if ev.long_term is None:
            raise DomainError(
                f"event {ev.event_id} lacks its long-term outcome"
            )
        query = world.queries[ev.query_index]
        x[i] = layout_region_bmrs(ev.layout, world.brands[query.brand_index])
        m[i] = (ev.session.short_term_revenue, ev.session.engagement_a)
        h[i] = world.customers.history[ev.customer_index]
        drev[i] = ev.long_term.long_term_revenue
        event_id.append(ev.event_id)
        customer_id.append(f"c{ev.customer_index:06d}")
        query_group.append(query.query_id)
        zip_code.append(world.zip_ids[world.customers.zip_index[ev.customer_index]])
    return PanelDataset(
        event_id=np.array(event_id),
        customer_id=np.array(customer_id),
        query_group=np.array(query_group),
        zip_code=np.array(zip_code),
        drev=drev,
        x=x,
        m=m,
        h=h,
        x_names=X_COLUMNS,
        m_names=M_COLUMNS,
        h_names=HISTORY_COLUMNS,
    )


def simulate_panel(
    world: World, n_events: int, policy: str, seed: int
) -> PanelDataset:
    """Generate events under a policy and emit the estimation panel."""
    return emit_panel(world, generate_events(world, n_events, policy, seed))
