"""Component trees of extremal regions and stable-region selection.

An extremal region is a 4-connected component of {p : I(p) <= t}; the
component tree nests them across all thresholds t in [0, 255].  The tree
is built with the classic union-find sweep: pixels are processed darkest
first and each new pixel adopts the roots of its already-processed
neighbors, followed by a canonicalization pass so that one pixel
represents each node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox
from .imgio import GrayImage


@dataclass(eq=False)
class ERNode:
    """One extremal region: the component of {I <= level} holding its seed."""

    index: int
    level: int
    area: int
    seed_pixel: tuple[int, int]
    parent: "ERNode | None" = None
    children: list["ERNode"] = field(default_factory=list)


@dataclass(eq=False)
class ComponentTree:
    nodes: list[ERNode]
    root: ERNode
    # pixel_assignment[p] = index of the lowest-level node containing pixel p
    pixel_assignment: np.ndarray
    image: GrayImage
    # linear indices of the pixels whose value equals each node's level
    _node_pixels: list[np.ndarray] = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class MserParams:
    """Stability and size gates for classic MSER selection."""

    delta: int = 2
    min_area: int = 10
    max_area_fraction: float = 0.25
    max_variation: float = 0.5
    min_diversity: float = 0.0

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.min_area <= 0:
            raise ValueError("min_area must be positive")
        if not 0.0 < self.max_area_fraction <= 1.0:
            raise ValueError("max_area_fraction must be in (0, 1]")
        if self.max_variation <= 0:
            raise ValueError("max_variation must be positive")
        if not 0.0 <= self.min_diversity <= 1.0:
            raise ValueError("min_diversity must be in [0, 1]")


@dataclass(frozen=True)
class Region:
    """An explicit pixel set with cached bbox, area, and gray statistics."""

    pixels: frozenset[tuple[int, int]]
    bbox: BBox
    area: int
    mean_gray: float
    level: int

    @classmethod
    def from_pixels(cls, pixels, mean_gray: float, level: int) -> "Region":
        pixels = frozenset(pixels)
        if not pixels:
            raise ValueError("region must contain at least one pixel")
        xs = [p[0] for p in pixels]
        ys = [p[1] for p in pixels]
        return cls(pixels=pixels, bbox=BBox(min(xs), min(ys), max(xs), max(ys)),
                   area=len(pixels), mean_gray=float(mean_gray), level=int(level))


def _find(zpar: list[int], x: int) -> int:
    while zpar[x] != x:
        zpar[x] = zpar[zpar[x]]
        x = zpar[x]
    return x


def build_component_tree(img: GrayImage) -> ComponentTree:
    """Build the min-tree of 4-connected extremal regions of an image."""
    h, w = img.height, img.width
    n = h * w
    values = img.data.ravel()
    vals = values.tolist()
    # (value, raster index) ascending: darkest pixels first, stable within a level
    order = np.argsort(values, kind="stable").tolist()

    parent = [0] * n
    zpar = [-1] * n  # -1 marks unprocessed pixels
    for p in order:
        parent[p] = p
        zpar[p] = p
        x = p % w
        if p >= w:
            q = p - w
            if zpar[q] >= 0:
                r = _find(zpar, q)
                if r != p:
                    parent[r] = p
                    zpar[r] = p
        if p + w < n:
            q = p + w
            if zpar[q] >= 0:
                r = _find(zpar, q)
                if r != p:
                    parent[r] = p
                    zpar[r] = p
        if x > 0:
            q = p - 1
            if zpar[q] >= 0:
                r = _find(zpar, q)
                if r != p:
                    parent[r] = p
                    zpar[r] = p
        if x + 1 < w:
            q = p + 1
            if zpar[q] >= 0:
                r = _find(zpar, q)
                if r != p:
                    parent[r] = p
                    zpar[r] = p

    # canonicalize: root-first traversal leaves every parent pointer on the
    # canonical (first-at-its-level) pixel of the enclosing node
    for p in reversed(order):
        q = parent[p]
        if vals[parent[q]] == vals[q]:
            parent[p] = parent[q]

    is_canon = [False] * n
    for p in range(n):
        is_canon[p] = parent[p] == p or vals[parent[p]] != vals[p]

    canon_pixels = [p for p in range(n) if is_canon[p]]
    node_of_canon = {p: i for i, p in enumerate(canon_pixels)}
    k = len(canon_pixels)

    assignment = np.empty(n, dtype=np.int64)
    direct: list[list[int]] = [[] for _ in range(k)]
    for p in range(n):
        c = p if is_canon[p] else parent[p]
        i = node_of_canon[c]
        assignment[p] = i
        direct[i].append(p)

    levels = [vals[c] for c in canon_pixels]
    parent_node: list[int | None] = [None] * k
    for i, c in enumerate(canon_pixels):
        if parent[c] != c:
            parent_node[i] = node_of_canon[parent[c]]

    # children sit at strictly lower levels, so level order is bottom-up
    areas = [len(d) for d in direct]
    for i in sorted(range(k), key=lambda i: levels[i]):
        p = parent_node[i]
        if p is not None:
            areas[p] += areas[i]

    nodes = [
        ERNode(index=i, level=levels[i], area=areas[i],
               seed_pixel=(min(direct[i]) % w, min(direct[i]) // w))
        for i in range(k)
    ]
    root = None
    for i, node in enumerate(nodes):
        p = parent_node[i]
        if p is None:
            root = node
        else:
            node.parent = nodes[p]
            nodes[p].children.append(node)
    assert root is not None

    pixel_arrays = [np.array(sorted(d), dtype=np.int64) for d in direct]
    return ComponentTree(nodes=nodes, root=root, pixel_assignment=assignment,
                         image=img, _node_pixels=pixel_arrays)


def _subtree_pixels(tree: ComponentTree, node: ERNode) -> np.ndarray:
    stack = [node]
    parts = []
    while stack:
        cur = stack.pop()
        parts.append(tree._node_pixels[cur.index])
        stack.extend(cur.children)
    return np.concatenate(parts)


def region_of(node: ERNode, tree: ComponentTree) -> Region:
    """Materialize the pixel set of a tree node as a Region."""
    if node.index >= len(tree.nodes) or tree.nodes[node.index] is not node:
        raise ValueError("node does not belong to this tree")
    idx = _subtree_pixels(tree, node)
    w = tree.image.width
    xs = idx % w
    ys = idx // w
    mean_gray = float(tree.image.data.ravel()[idx].mean())
    pixels = frozenset(zip(xs.tolist(), ys.tolist()))
    return Region(pixels=pixels,
                  bbox=BBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
                  area=int(idx.size), mean_gray=mean_gray, level=node.level)


def _main_child(node: ERNode) -> ERNode | None:
    if not node.children:
        return None
    return min(node.children, key=lambda c: (-c.area, c.seed_pixel[1], c.seed_pixel[0]))


def _variation(node: ERNode, delta: int) -> float:
    """(area at level+delta - area at level-delta) / area, clamped to [0, 255].

    The upper region is the ancestor still covering level+delta.  The lower
    one follows largest-child links down toward level-delta, stopping at a
    leaf when the branch bottoms out before reaching it.
    """
    t_up = min(node.level + delta, 255)
    up = node
    while up.parent is not None and up.parent.level <= t_up:
        up = up.parent
    t_low = max(node.level - delta, 0)
    low = node
    while low.level > t_low:
        nxt = _main_child(low)
        if nxt is None:
            break
        low = nxt
    return (up.area - low.area) / node.area


def detect_msers(tree: ComponentTree, params: MserParams) -> list[Region]:
    """Select maximally stable nodes and return them as Regions.

    A node is kept when its variation is a local minimum along its main
    branch (not above its parent's or largest child's variation), is at
    most max_variation, and its area passes the size gates.  Nested
    survivors whose relative area difference is below min_diversity are
    pruned (the smaller one is dropped); min_diversity = 0 keeps all.
    """
    n = tree.image.width * tree.image.height
    max_area = params.max_area_fraction * n
    q = [_variation(node, params.delta) for node in tree.nodes]

    selected = []
    for node in tree.nodes:
        qi = q[node.index]
        if qi > params.max_variation:
            continue
        if not params.min_area <= node.area <= max_area:
            continue
        if node.parent is not None and qi > q[node.parent.index]:
            continue
        mc = _main_child(node)
        if mc is not None and qi > q[mc.index]:
            continue
        selected.append(node)

    if params.min_diversity > 0.0 and selected:
        chosen = {node.index for node in selected}
        pruned = set()
        for node in selected:
            anc = node.parent
            while anc is not None and anc.index not in chosen:
                anc = anc.parent
            if anc is None:
                continue
            if (anc.area - node.area) / anc.area < params.min_diversity:
                pruned.add(node.index)
        selected = [node for node in selected if node.index not in pruned]

    selected.sort(key=lambda nd: (nd.level, nd.seed_pixel[1], nd.seed_pixel[0]))
    return [region_of(node, tree) for node in selected]
