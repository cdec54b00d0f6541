"""Hole-count filtering and merging of vertically split character fragments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .comptree import Region
from .geometry import horizontal_overlap, vertical_gap

DARK_ON_LIGHT = "dark"
LIGHT_ON_DARK = "light"

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CandidateRegion:
    region: Region
    holes: int
    mean_gray: float
    source_polarity: str

    def __post_init__(self) -> None:
        if self.holes < 0:
            raise ValueError("holes must be >= 0")
        if self.source_polarity not in (DARK_ON_LIGHT, LIGHT_ON_DARK):
            raise ValueError(f"unknown polarity {self.source_polarity!r}")


@dataclass(frozen=True)
class MergeParams:
    """Pairwise mergeability gates for stacked character fragments."""

    min_h_overlap: float = 0.5      # of the narrower fragment's width
    max_v_gap: float = 0.2          # of the taller fragment's height
    max_width_ratio: float = 2.0
    max_area_ratio: float = 4.0
    max_gray_diff: float = 25.0


def region_mask(region: Region, pad: int = 1) -> np.ndarray:
    """Boolean mask of the region inside its bbox, padded on all sides."""
    b = region.bbox
    mask = np.zeros((b.height + 2 * pad, b.width + 2 * pad), dtype=bool)
    for x, y in region.pixels:
        mask[y - b.top + pad, x - b.left + pad] = True
    return mask


def count_holes(region: Region) -> int:
    """Count enclosed cavities: 8-connected components of the complement
    (within the padded bbox) that do not reach the border."""
    mask = region_mask(region, pad=1)
    labels, n = ndimage.label(~mask, structure=_EIGHT)
    border = set(labels[0, :]) | set(labels[-1, :]) | set(labels[:, 0]) | set(labels[:, -1])
    border.discard(0)
    return n - len(border)


def make_candidate(region: Region, polarity: str) -> CandidateRegion:
    return CandidateRegion(region=region, holes=count_holes(region),
                           mean_gray=region.mean_gray, source_polarity=polarity)


def filter_candidates(candidates: list[CandidateRegion], max_holes: int) -> list[CandidateRegion]:
    """Keep candidates with at most max_holes holes, preserving order."""
    return [c for c in candidates if c.holes <= max_holes]


def _mergeable(a: CandidateRegion, b: CandidateRegion, p: MergeParams) -> bool:
    if a.source_polarity != b.source_polarity:
        return False
    ba, bb = a.region.bbox, b.region.bbox
    if horizontal_overlap(ba, bb) < p.min_h_overlap * min(ba.width, bb.width):
        return False
    if vertical_gap(ba, bb) > p.max_v_gap * max(ba.height, bb.height):
        return False
    wr = ba.width / bb.width
    if not 1.0 / p.max_width_ratio <= wr <= p.max_width_ratio:
        return False
    ar = a.region.area / b.region.area
    if not 1.0 / p.max_area_ratio <= ar <= p.max_area_ratio:
        return False
    if abs(a.mean_gray - b.mean_gray) > p.max_gray_diff:
        return False
    return True


def merge_fragments(candidates: list[CandidateRegion],
                    params: MergeParams = MergeParams()) -> list[CandidateRegion]:
    """Union the transitive closure of pairwise-mergeable fragments.

    Merged regions recompute bbox, area, mean_gray (pixel-weighted), and
    hole count from the unioned pixel set.  Output keeps the order of each
    group's first member.
    """
    n = len(candidates)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if _mergeable(candidates[i], candidates[j], params):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    out = []
    for root in sorted(groups):
        members = groups[root]
        if len(members) == 1:
            out.append(candidates[members[0]])
            continue
        regs = [candidates[i].region for i in members]
        pixels = frozenset().union(*(r.pixels for r in regs))
        total = sum(r.area for r in regs)
        mean = sum(r.mean_gray * r.area for r in regs) / total
        level = max(r.level for r in regs)
        merged = Region.from_pixels(pixels, mean, level)
        out.append(make_candidate(merged, candidates[members[0]].source_polarity))
    return out
