"""Grouping of high-confidence regions into horizontal text lines."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import BBox, bbox_of_pixels, horizontal_gap
from .scorer import ScoredRegion


@dataclass(frozen=True)
class LineParams:
    """Pairwise link gates: size, vertical alignment, spacing, and color."""

    max_height_ratio: float = 2.0
    max_center_offset: float = 0.5   # of the taller region's height
    max_h_gap: float = 2.0           # of the wider region's width
    max_gray_diff: float = 30.0


@dataclass(frozen=True)
class TextLine:
    members: tuple[ScoredRegion, ...]
    bbox: BBox

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValueError("a text line needs at least 2 members")


def _linked(a: ScoredRegion, b: ScoredRegion, p: LineParams) -> bool:
    ca, cb = a.candidate, b.candidate
    if ca.source_polarity != cb.source_polarity:
        return False
    ba, bb = ca.region.bbox, cb.region.bbox
    hr = ba.height / bb.height
    if not 1.0 / p.max_height_ratio <= hr <= p.max_height_ratio:
        return False
    if abs(ba.center_y - bb.center_y) > p.max_center_offset * max(ba.height, bb.height):
        return False
    if horizontal_gap(ba, bb) > p.max_h_gap * max(ba.width, bb.width):
        return False
    if abs(ca.mean_gray - cb.mean_gray) > p.max_gray_diff:
        return False
    return True


def line_bbox(members: list[ScoredRegion] | tuple[ScoredRegion, ...]) -> BBox:
    """Tight bound over the member regions' pixels."""
    if not members:
        raise ValueError("empty line")
    pixels = (px for m in members for px in m.candidate.region.pixels)
    return bbox_of_pixels(pixels)


def form_lines(scored: list[ScoredRegion], conf_threshold: float = 0.5,
               params: LineParams = LineParams()) -> list[TextLine]:
    """Link confident regions pairwise and keep components of size >= 2.

    Regions below conf_threshold are ignored.  Members are ordered left to
    right; lines are ordered by bbox (top, left).  Singletons are dropped.
    """
    kept = [s for s in scored if s.confidence >= conf_threshold]
    n = len(kept)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if _linked(kept[i], kept[j], params):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    lines = []
    for members_idx in groups.values():
        if len(members_idx) < 2:
            continue
        members = sorted((kept[i] for i in members_idx),
                         key=lambda s: (s.candidate.region.bbox.left,
                                        s.candidate.region.bbox.top))
        lines.append(TextLine(members=tuple(members), bbox=line_bbox(members)))
    lines.sort(key=lambda ln: (ln.bbox.top, ln.bbox.left, ln.bbox.right))
    return lines
