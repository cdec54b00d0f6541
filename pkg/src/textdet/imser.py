"""Isolation of overlapping stable regions and stability-ratio optimization.

Overlapping regions from one polarity are grouped into containment trees.
Walking each tree bottom-up, a node is merged into its father when the
relative area difference (|father| - |region|) / |region| reaches the
stability parameter gamma; otherwise the node is emitted as an isolated
region and its pixels are cut out of every enclosing region.  The result
is a set of pairwise pixel-disjoint regions, one representative per
stable branch.

The optimal gamma is found from labeled father/child area-ratio samples
by maximizing the gap between the cumulative proportion of text pairs
and background pairs at or below gamma.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .comptree import MserParams, Region, build_component_tree, detect_msers
from .geometry import BBox, containment, iou
from .imgio import GrayImage

TEXT = "text"
BACKGROUND = "background"


@dataclass(frozen=True)
class ImserParams:
    gamma: float = 0.15
    min_emit_area: int = 10

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.min_emit_area < 1:
            raise ValueError("min_emit_area must be >= 1")


@dataclass(frozen=True)
class LabeledSample:
    """One father/child area-difference ratio with its text/background label."""

    ratio: float
    label: str

    def __post_init__(self) -> None:
        if self.ratio < 0:
            raise ValueError("ratio must be >= 0")
        if self.label not in (TEXT, BACKGROUND):
            raise ValueError(f"unknown label {self.label!r}")


@dataclass(eq=False)
class MserTree:
    """Containment-ordered group of overlapping regions.

    ``father[i]`` indexes the smallest region strictly containing
    ``regions[i]`` (None for the top).  Leaves are the minimal regions.
    """

    regions: list[Region]
    father: list[int | None]
    children: list[list[int]]
    top: int

    @property
    def top_region(self) -> Region:
        return self.regions[self.top]

    @property
    def leaves(self) -> list[Region]:
        return [self.regions[i] for i, ch in enumerate(self.children) if not ch]


def _sort_key(region: Region) -> tuple:
    return (region.area, region.bbox.left, region.bbox.top, region.level)


def group_msers(regions: list[Region]) -> list[MserTree]:
    """Group nested regions into containment trees.

    Input regions must be pairwise nested or disjoint (the guarantee of a
    single-polarity component tree); partially overlapping regions raise
    ValueError.  Regions nested in nothing and containing nothing become
    singleton trees.
    """
    order = sorted(range(len(regions)), key=lambda i: _sort_key(regions[i]))
    father: list[int | None] = [None] * len(regions)
    for a, i in enumerate(order):
        ri = regions[i]
        probe = next(iter(ri.pixels))
        for j in order[a + 1:]:
            rj = regions[j]
            if rj.area <= ri.area:
                continue
            if not rj.bbox.contains(ri.bbox):
                continue
            if probe in rj.pixels:
                if not ri.pixels <= rj.pixels:
                    raise ValueError("regions partially overlap; mixed-polarity input?")
                father[i] = j
                break
        else:
            father[i] = None

    # remaining pairs that share bbox space but no ancestry must be disjoint
    for a, i in enumerate(order):
        for j in order[a + 1:]:
            if regions[i].bbox.intersects(regions[j].bbox):
                if not _is_ancestor(father, i, j) and not _is_ancestor(father, j, i):
                    if not regions[i].pixels.isdisjoint(regions[j].pixels):
                        raise ValueError("regions partially overlap; mixed-polarity input?")

    children: list[list[int]] = [[] for _ in regions]
    for i, f in enumerate(father):
        if f is not None:
            children[f].append(i)

    trees = []
    tops = [i for i, f in enumerate(father) if f is None]
    tops.sort(key=lambda i: (regions[i].bbox.top, regions[i].bbox.left, -regions[i].area))
    for top in tops:
        member_ids = []
        stack = [top]
        while stack:
            cur = stack.pop()
            member_ids.append(cur)
            stack.extend(children[cur])
        member_ids.sort(key=lambda i: _sort_key(regions[i]))
        remap = {old: new for new, old in enumerate(member_ids)}
        trees.append(MserTree(
            regions=[regions[i] for i in member_ids],
            father=[None if father[i] is None else remap[father[i]] for i in member_ids],
            children=[sorted(remap[c] for c in children[i]) for i in member_ids],
            top=remap[top],
        ))
    return trees


def _is_ancestor(father: list[int | None], anc: int, node: int) -> bool:
    cur = father[node]
    while cur is not None:
        if cur == anc:
            return True
        cur = father[cur]
    return False


def extract_imsers(tree: MserTree, params: ImserParams,
                   img: GrayImage | None = None) -> list[Region]:
    """Apply the merge-or-cut rule bottom-up and emit isolated regions.

    Non-top nodes are visited post-order (children by current area
    ascending, ties by bbox corner then seed order).  For node R with
    father F the ratio (|F| - |R|) / |R| is computed on current, post-cut
    pixel sets: at or above gamma R merges into F (R is dropped); below
    gamma R is emitted and its pixels are cut from every enclosing region.
    The top's remnant is emitted last.  Emissions smaller than
    min_emit_area are cut but not returned.  When ``img`` is given,
    emitted regions get exact mean_gray over their final pixels.
    """
    work: list[set[tuple[int, int]]] = [set(r.pixels) for r in tree.regions]

    def child_order(i: int) -> list[int]:
        return sorted(tree.children[i],
                      key=lambda c: (len(work[c]), tree.regions[c].bbox.left,
                                     tree.regions[c].bbox.top, min(work[c])))

    # iterative post-order from the top
    visit: list[int] = []
    stack: list[tuple[int, bool]] = [(tree.top, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            visit.append(node)
            continue
        stack.append((node, True))
        for c in reversed(child_order(node)):
            stack.append((c, False))

    def materialize(i: int, pixels: set[tuple[int, int]]) -> Region:
        src = tree.regions[i]
        if img is not None:
            mean = sum(img.at(x, y) for x, y in pixels) / len(pixels)
        else:
            mean = src.mean_gray
        return Region.from_pixels(pixels, mean, src.level)

    emitted: list[Region] = []
    for i in visit:
        if i == tree.top:
            continue
        pixels = work[i]
        if not pixels:
            continue  # fully cut away by emitted descendants
        f = tree.father[i]
        assert f is not None
        ratio = (len(work[f]) - len(pixels)) / len(pixels)
        if ratio >= params.gamma:
            continue  # merge: the father keeps R's pixels, R is dropped
        if len(pixels) >= params.min_emit_area:
            emitted.append(materialize(i, pixels))
        anc = tree.father[i]
        while anc is not None:
            work[anc] -= pixels
            anc = tree.father[anc]

    top_pixels = work[tree.top]
    if len(top_pixels) >= params.min_emit_area:
        emitted.append(materialize(tree.top, top_pixels))
    return emitted


def optimize_gamma(samples: list[LabeledSample], grid_step: float = 0.01) -> float:
    """Pick the grid gamma maximizing P_text(gamma) - P_background(gamma).

    P_label(g) is the fraction of that label's ratios <= g.  The grid is
    {0, step, 2*step, ...} up to the largest observed ratio; ties resolve
    to the smallest gamma.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    text = sorted(s.ratio for s in samples if s.label == TEXT)
    background = sorted(s.ratio for s in samples if s.label == BACKGROUND)
    if not text or not background:
        raise ValueError("need at least one sample of each label")

    max_ratio = max(text[-1], background[-1])
    k_max = max(0, math.ceil(max_ratio / grid_step - 1e-12))
    best_k = 0
    best_diff = -math.inf
    for k in range(k_max + 1):
        g = k * grid_step
        diff = bisect_right(text, g) / len(text) - bisect_right(background, g) / len(background)
        if diff > best_diff:
            best_diff = diff
            best_k = k
    return best_k * grid_step


def collect_ratio_samples(img: GrayImage, gt_boxes: list[BBox],
                          mser_params: MserParams) -> list[LabeledSample]:
    """Harvest father/child area ratios from one image, labeled against truth.

    A child counts as text when its bbox overlaps some truth box with
    IoU >= 0.5 or lies >= 80% inside one; otherwise background.  Ratios
    use the original (pre-cut) areas.
    """
    regions = detect_msers(build_component_tree(img), mser_params)
    samples = []
    for tree in group_msers(regions):
        for i, f in enumerate(tree.father):
            if f is None:
                continue
            child = tree.regions[i]
            ratio = (tree.regions[f].area - child.area) / child.area
            is_text = any(iou(child.bbox, gt) >= 0.5 or containment(child.bbox, gt) >= 0.8
                          for gt in gt_boxes)
            samples.append(LabeledSample(ratio, TEXT if is_text else BACKGROUND))
    return samples
