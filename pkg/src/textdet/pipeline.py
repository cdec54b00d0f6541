"""End-to-end detection pipeline and its aggregate configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .candidates import (DARK_ON_LIGHT, LIGHT_ON_DARK, CandidateRegion,
                         MergeParams, filter_candidates, make_candidate,
                         merge_fragments)
from .comptree import MserParams, Region, build_component_tree, detect_msers
from .imgio import GrayImage, invert
from .imser import ImserParams, extract_imsers, group_msers
from .scorer import (ScoredRegion, WeightSet, heuristic_score_regions,
                     score_regions)
from .textline import LineParams, TextLine, form_lines

POLARITY_BOTH = "both"
POLARITY_DARK = "dark"
POLARITY_LIGHT = "light"

SCORER_CNN = "cnn"
SCORER_HEURISTIC = "heuristic"


@dataclass(frozen=True)
class PipelineConfig:
    mser: MserParams = field(default_factory=MserParams)
    imser: ImserParams = field(default_factory=ImserParams)
    merge: MergeParams = field(default_factory=MergeParams)
    lines: LineParams = field(default_factory=LineParams)
    max_holes: int = 3
    conf_threshold: float = 0.5
    scorer: str = SCORER_HEURISTIC
    weights: str | None = None
    polarity: str = POLARITY_BOTH

    def __post_init__(self) -> None:
        if self.scorer not in (SCORER_CNN, SCORER_HEURISTIC):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.polarity not in (POLARITY_BOTH, POLARITY_DARK, POLARITY_LIGHT):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.scorer == SCORER_CNN and not self.weights:
            raise ValueError("cnn scorer requires a weights path")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        kwargs = dict(d)
        for key, sub in (("mser", MserParams), ("imser", ImserParams),
                         ("merge", MergeParams), ("lines", LineParams)):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = sub(**kwargs[key])
        return cls(**kwargs)


def polarities(mode: str) -> list[str]:
    if mode == POLARITY_BOTH:
        return [DARK_ON_LIGHT, LIGHT_ON_DARK]
    return [DARK_ON_LIGHT] if mode == POLARITY_DARK else [LIGHT_ON_DARK]


def extract_isolated_regions(img: GrayImage,
                             config: PipelineConfig) -> list[tuple[Region, str]]:
    """Component tree -> stable regions -> isolated regions, per polarity."""
    out: list[tuple[Region, str]] = []
    for pol in polarities(config.polarity):
        view = img if pol == DARK_ON_LIGHT else invert(img)
        tree = build_component_tree(view)
        msers = detect_msers(tree, config.mser)
        for group in group_msers(msers):
            for region in extract_imsers(group, config.imser, view):
                out.append((region, pol))
    return out


def build_candidates(regions: list[tuple[Region, str]],
                     config: PipelineConfig) -> list[CandidateRegion]:
    """Hole-filter the isolated regions, then merge split fragments."""
    cands = [make_candidate(region, pol) for region, pol in regions]
    cands = filter_candidates(cands, config.max_holes)
    return merge_fragments(cands, config.merge)


def score_candidates(img: GrayImage, cands: list[CandidateRegion],
                     config: PipelineConfig,
                     weights: WeightSet | None = None) -> list[ScoredRegion]:
    if config.scorer == SCORER_HEURISTIC:
        return heuristic_score_regions(img, cands)
    if weights is None:
        raise ValueError("cnn scorer requires loaded weights")
    # the CNN sees each candidate through its own polarity view so text is
    # always presented dark-on-light
    dark = [c for c in cands if c.source_polarity == DARK_ON_LIGHT]
    light = [c for c in cands if c.source_polarity == LIGHT_ON_DARK]
    scored = score_regions(img, dark, weights)
    scored += score_regions(invert(img), light, weights)
    order = {id(c): i for i, c in enumerate(cands)}
    scored.sort(key=lambda s: order[id(s.candidate)])
    return scored


def detect_image(img: GrayImage, config: PipelineConfig,
                 weights: WeightSet | None = None) -> list[TextLine]:
    regions = extract_isolated_regions(img, config)
    cands = build_candidates(regions, config)
    scored = score_candidates(img, cands, config, weights)
    return form_lines(scored, config.conf_threshold, config.lines)
