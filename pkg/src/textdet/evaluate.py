"""Detection scoring: ground-truth parsing and one-to-one IoU matching.

The matcher is a documented stand-in for competition evaluators: within
each image, detection/truth pairs are taken greedily by descending IoU
(ties by detection index, then truth index) and count as matches at or
above the IoU threshold.  Precision and recall use the 0/0 := 1
convention; absolute values are therefore not comparable to evaluators
that allow many-to-one matches.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .geometry import BBox, iou

GtBox = BBox


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f_measure: float

    @classmethod
    def from_counts(cls, matches: int, n_detections: int, n_truth: int) -> "Metrics":
        p = matches / n_detections if n_detections else 1.0
        r = matches / n_truth if n_truth else 1.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)


def load_ground_truth(path: str | Path) -> dict[str, list[GtBox]]:
    """Parse "image-id,left,top,right,bottom" lines into boxes per image.

    Blank lines and lines starting with '#' are skipped.
    """
    boxes: dict[str, list[GtBox]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 comma-separated fields")
        image_id = parts[0].strip()
        try:
            left, top, right, bottom = (int(p.strip()) for p in parts[1:])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-integer coordinate") from None
        try:
            box = BBox(left, top, right, bottom)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: inverted rectangle") from None
        boxes.setdefault(image_id, []).append(box)
    return boxes


def match_boxes(detections: list[BBox], truth: list[BBox],
                iou_threshold: float) -> int:
    """Greedy one-to-one matching; returns the number of matched pairs."""
    pairs = []
    for di, d in enumerate(detections):
        for ti, t in enumerate(truth):
            v = iou(d, t)
            if v >= iou_threshold:
                pairs.append((-v, di, ti))
    pairs.sort()
    used_d: set[int] = set()
    used_t: set[int] = set()
    matches = 0
    for _, di, ti in pairs:
        if di in used_d or ti in used_t:
            continue
        used_d.add(di)
        used_t.add(ti)
        matches += 1
    return matches


def match_and_score(detections: dict[str, list[BBox]],
                    truth: dict[str, list[BBox]],
                    iou_threshold: float = 0.5) -> Metrics:
    """Aggregate greedy per-image matching into precision/recall/f."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in (0, 1]")
    matches = 0
    n_det = sum(len(v) for v in detections.values())
    n_truth = sum(len(v) for v in truth.values())
    for image_id in sorted(set(detections) | set(truth)):
        matches += match_boxes(detections.get(image_id, []),
                               truth.get(image_id, []), iou_threshold)
    return Metrics.from_counts(matches, n_det, n_truth)
