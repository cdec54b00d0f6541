"""Scene text detection via isolated stable extremal regions."""

from .candidates import (DARK_ON_LIGHT, LIGHT_ON_DARK, CandidateRegion,
                         MergeParams, count_holes, filter_candidates,
                         make_candidate, merge_fragments)
from .comptree import (ComponentTree, ERNode, MserParams, Region,
                       build_component_tree, detect_msers, region_of)
from .evaluate import GtBox, Metrics, load_ground_truth, match_and_score
from .geometry import BBox, iou
from .imgio import GrayImage, extract_patch, invert, load_gray, save_pgm
from .imser import (BACKGROUND, TEXT, ImserParams, LabeledSample, MserTree,
                    collect_ratio_samples, extract_imsers, group_msers,
                    optimize_gamma)
from .pipeline import PipelineConfig, detect_image, extract_isolated_regions
from .scorer import (ScoredRegion, WeightSet, forward, forward_layers,
                     heuristic_score, load_weights, save_weights,
                     score_regions)
from .textline import LineParams, TextLine, form_lines, line_bbox

__version__ = "0.1.0"
