"""Shared feature encoding for all per-objective models.

Every model scores a (request context, candidate template) pair through the
same fixed-width vector: a bias term, device and account fields, a category
one-hot, and the candidate's per-template content signals.
"""

from __future__ import annotations

import numpy as np

from ..domain import ContextFeatures, Device
from ..errors import DomainError

CONTEXT_FEATURE_NAMES = ("bias", "device_mobile", "query_specificity", "membership")


def feature_schema(
    categories: tuple[str, ...], signal_names: tuple[str, ...]
) -> tuple[str, ...]:
    """Ordered feature names for a given category vocabulary and signal set."""
    if len(set(categories)) != len(categories):
        raise DomainError("duplicate category ids")
    if len(set(signal_names)) != len(signal_names):
        raise DomainError("duplicate signal names")
    return (
        *CONTEXT_FEATURE_NAMES,
        *(f"category_{c}" for c in categories),
        *(f"signal_{s}" for s in signal_names),
    )


def build_features(
    context: ContextFeatures,
    template_id: str,
    categories: tuple[str, ...],
    signal_names: tuple[str, ...],
) -> np.ndarray:
    """Encode one candidate template under one request context."""
    if context.category_id not in categories:
        raise DomainError(f"unknown category {context.category_id!r}")
    signals = context.content_signals.get(template_id)
    if signals is None:
        raise DomainError(f"context has no content signals for template {template_id!r}")
    if len(signals) != len(signal_names):
        raise DomainError(
            f"template {template_id!r} has {len(signals)} content signals, "
            f"schema expects {len(signal_names)}"
        )
    out = np.empty(len(CONTEXT_FEATURE_NAMES) + len(categories) + len(signal_names))
    out[0] = 1.0
    out[1] = 1.0 if context.device is Device.MOBILE else 0.0
    out[2] = context.query_specificity
    out[3] = float(context.membership)
    base = len(CONTEXT_FEATURE_NAMES)
    for i, cat in enumerate(categories):
        out[base + i] = 1.0 if cat == context.category_id else 0.0
    out[base + len(categories) :] = signals
    return out
