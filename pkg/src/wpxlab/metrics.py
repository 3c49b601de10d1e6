"""Whole-page brand satisfaction: pixel- and region-weighted brand match rate.

The metric scores how much of a page's visual real estate is devoted to items
matching the query's brand. Matches are pixel-weighted within each page
region, and the three region rates are combined with weights summing to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import Item, PageLayout, PageRegion
from .errors import DomainError

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RegionWeights:
    """Non-negative weights over (top, middle, bottom), summing to one."""

    w_top: float
    w_mid: float
    w_bot: float

    def __post_init__(self) -> None:
        if min(self.w_top, self.w_mid, self.w_bot) < 0.0:
            raise DomainError(f"region weights must be >= 0, got {self.as_tuple()}")
        total = self.w_top + self.w_mid + self.w_bot
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise DomainError(f"region weights must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_top, self.w_mid, self.w_bot)


#: Region weights derived from the empirical click-through distribution.
CTR_REGION_WEIGHTS = RegionWeights(0.60, 0.25, 0.15)


@dataclass(frozen=True)
class BrandMatchPage:
    """Per-slot (region, pixel_area, match) triples, ready for aggregation."""

    slots: tuple[tuple[PageRegion, float, int], ...]

    def __post_init__(self) -> None:
        for region, area, match in self.slots:
            if not area > 0.0:
                raise DomainError(f"pixel area must be positive, got {area}")
            if match not in (0, 1):
                raise DomainError(f"match must be 0 or 1, got {match}")


def brand_match(item: Item, query_brand: str) -> int:
    """1 iff the item's brand equals the query brand. Matching is exact."""
    if not query_brand:
        raise DomainError("query_brand must be non-empty")
    return int(item.brand_id == query_brand)


def brand_match_page(layout: PageLayout, query_brand: str) -> BrandMatchPage:
    """Project a layout onto the (region, area, match) form the metric consumes."""
    return BrandMatchPage(
        tuple(
            (slot.region, slot.pixel_area, brand_match(slot.item, query_brand))
            for slot in layout.slots
        )
    )


def region_bmr(page: BrandMatchPage, region: PageRegion) -> float:
    """Pixel-weighted brand match rate within one region.

    An empty region contributes 0: a page that leaves a region unfilled
    provides no brand-aligned content there.
    """
    matched_area = 0.0
    total_area = 0.0
    for slot_region, area, match in page.slots:
        if slot_region is region:
            total_area += area
            matched_area += area * match
    if total_area == 0.0:
        return 0.0
    return matched_area / total_area


def pr_wp_bmr(page: BrandMatchPage, weights: RegionWeights) -> float:
    """Whole-page brand match rate: region rates combined by region weights."""
    value = (
        weights.w_top * region_bmr(page, PageRegion.TOP)
        + weights.w_mid * region_bmr(page, PageRegion.MIDDLE)
        + weights.w_bot * region_bmr(page, PageRegion.BOTTOM)
    )
    # Guard against float drift out of [0, 1]; each term is a convex combination.
    return min(1.0, max(0.0, value))


def layout_region_bmrs(layout: PageLayout, query_brand: str) -> tuple[float, float, float]:
    """(top, middle, bottom) pixel-weighted brand match rates of a layout."""
    page = brand_match_page(layout, query_brand)
    return (
        region_bmr(page, PageRegion.TOP),
        region_bmr(page, PageRegion.MIDDLE),
        region_bmr(page, PageRegion.BOTTOM),
    )


def weighted_bmr(bmrs: tuple[float, float, float], weights: RegionWeights) -> float:
    """Combine precomputed region rates; keeps batch code off the slot types."""
    for value in bmrs:
        if not (math.isfinite(value) and -1e-9 <= value <= 1.0 + 1e-9):
            raise DomainError(f"region rate out of [0, 1]: {value}")
    value = weights.w_top * bmrs[0] + weights.w_mid * bmrs[1] + weights.w_bot * bmrs[2]
    return min(1.0, max(0.0, value))
