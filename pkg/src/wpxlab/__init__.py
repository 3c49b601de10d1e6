"""Desk-scale laboratory for whole-page search experience optimization.

Four pieces that fit together: a synthetic marketplace with planted causal
structure, a pixel-and-region-weighted brand-match metric, a debiased
estimator of how page quality moves long-horizon revenue, and a
Thompson-sampling template ranker driven by those estimates.
"""

from .domain import (
    ContentKind,
    ContextFeatures,
    Device,
    HorizonConfig,
    Item,
    ObjectiveVector,
    PageLayout,
    PageRegion,
    PageTemplate,
    Slot,
    region_of_position,
    validate_layout,
)
from .errors import DomainError, EstimationError, InvariantViolation, WpxError
from .metrics import (
    CTR_REGION_WEIGHTS,
    BrandMatchPage,
    RegionWeights,
    brand_match,
    brand_match_page,
    layout_region_bmrs,
    pr_wp_bmr,
    region_bmr,
)
from .rng import event_stream, stream

__version__ = "0.1.0"

__all__ = [
    "ContentKind",
    "ContextFeatures",
    "Device",
    "HorizonConfig",
    "Item",
    "ObjectiveVector",
    "PageLayout",
    "PageRegion",
    "PageTemplate",
    "Slot",
    "region_of_position",
    "validate_layout",
    "DomainError",
    "EstimationError",
    "InvariantViolation",
    "WpxError",
    "CTR_REGION_WEIGHTS",
    "BrandMatchPage",
    "RegionWeights",
    "brand_match",
    "brand_match_page",
    "layout_region_bmrs",
    "pr_wp_bmr",
    "region_bmr",
    "event_stream",
    "stream",
    "__version__",
]
