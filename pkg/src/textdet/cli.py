"""Command-line entry point and line-delimited record formats.

Subcommands: detect, extract-regions, optimize-gamma, evaluate.  Region
dumps and line files are JSON-lines (one object per line) so they grep
and stream well.  Exit codes: 0 success, 1 any per-file failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .candidates import make_candidate
from .comptree import MserParams, Region
from .evaluate import load_ground_truth, match_and_score
from .geometry import BBox
from .imgio import GrayImage, invert, load_gray
from .imser import (BACKGROUND, TEXT, ImserParams, LabeledSample,
                    collect_ratio_samples, optimize_gamma)
from .pipeline import (POLARITY_DARK, POLARITY_LIGHT, SCORER_CNN,
                       PipelineConfig, detect_image, extract_isolated_regions,
                       polarities)
from .scorer import load_weights
from .textline import TextLine


def encode_rle(pixels: frozenset[tuple[int, int]]) -> list[list[int]]:
    """Row runs [y, x_start, length], sorted by (y, x_start)."""
    rows: dict[int, list[int]] = {}
    for x, y in pixels:
        rows.setdefault(y, []).append(x)
    runs = []
    for y in sorted(rows):
        xs = sorted(rows[y])
        start = prev = xs[0]
        for x in xs[1:]:
            if x == prev + 1:
                prev = x
                continue
            runs.append([y, start, prev - start + 1])
            start = prev = x
        runs.append([y, start, prev - start + 1])
    return runs


def decode_rle(runs: list[list[int]]) -> frozenset[tuple[int, int]]:
    return frozenset((x, y) for y, x, n in runs for x in range(x, x + n))


def _line_record(image_id: str, line: TextLine) -> dict:
    mean_conf = sum(m.confidence for m in line.members) / len(line.members)
    b = line.bbox
    return {"image": image_id, "left": b.left, "top": b.top,
            "right": b.right, "bottom": b.bottom,
            "members": len(line.members), "confidence": round(mean_conf, 6)}


def _region_record(image_id: str, idx: int, region: Region,
                   polarity: str, holes: int) -> dict:
    b = region.bbox
    return {"id": idx, "image": image_id, "polarity": polarity,
            "left": b.left, "top": b.top, "right": b.right, "bottom": b.bottom,
            "area": region.area, "mean_gray": round(region.mean_gray, 6),
            "holes": holes, "rle": encode_rle(region.pixels)}


def _dump_config(config: PipelineConfig, out_path: Path) -> None:
    sidecar = out_path.with_name(out_path.name + ".config.json")
    sidecar.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = PipelineConfig.from_dict(base) if base else PipelineConfig()

    mser = cfg.mser
    for flag, name in (("delta", "delta"), ("min_area", "min_area"),
                       ("max_area_fraction", "max_area_fraction"),
                       ("max_variation", "max_variation"),
                       ("min_diversity", "min_diversity")):
        val = getattr(args, flag, None)
        if val is not None:
            mser = MserParams(**{**mser.__dict__, name: val})
    imser = cfg.imser
    if getattr(args, "gamma", None) is not None:
        imser = ImserParams(gamma=args.gamma, min_emit_area=imser.min_emit_area)
    updates: dict = {"mser": mser, "imser": imser}
    for flag in ("max_holes", "conf_threshold", "scorer", "weights", "polarity"):
        val = getattr(args, flag, None)
        if val is not None:
            updates[flag] = val
    return _rebuild(cfg, updates)


def _rebuild(cfg: PipelineConfig, updates: dict) -> PipelineConfig:
    d = {f: getattr(cfg, f) for f in ("mser", "imser", "merge", "lines", "max_holes",
                                      "conf_threshold", "scorer", "weights", "polarity")}
    d.update(updates)
    return PipelineConfig(**d)


def _render_overlay(img: GrayImage, lines: list[TextLine], path: Path) -> None:
    from PIL import Image, ImageDraw

    im = Image.fromarray(img.data).convert("RGB")
    draw = ImageDraw.Draw(im)
    for line in lines:
        b = line.bbox
        draw.rectangle([b.left, b.top, b.right, b.bottom], outline=(255, 0, 0))
    im.save(path)


def cmd_detect(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    weights = load_weights(config.weights) if config.scorer == SCORER_CNN else None
    out_path = Path(args.out)

    def run_one(path_str: str):
        path = Path(path_str)
        img = load_gray(path)
        lines = detect_image(img, config, weights)
        return path, img, lines

    failed = False
    records = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [pool.submit(run_one, p) for p in args.images]
        for path_str, fut in zip(args.images, futures):
            try:
                path, img, lines = fut.result()
            except Exception as exc:
                print(f"error: {path_str}: {exc}", file=sys.stderr)
                failed = True
                continue
            for line in lines:
                records.append(_line_record(path.name, line))
            if args.render:
                _render_overlay(img, lines,
                                out_path.parent / (path.stem + ".overlay.png"))

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    _dump_config(config, out_path)
    return 1 if failed else 0


def cmd_extract_regions(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    path = Path(args.image)
    try:
        img = load_gray(path)
        regions = extract_isolated_regions(img, config)
    except Exception as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 1
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        for idx, (region, pol) in enumerate(regions):
            holes = make_candidate(region, pol).holes
            fh.write(json.dumps(_region_record(path.name, idx, region, pol, holes)) + "\n")
    _dump_config(config, out_path)
    return 0


def read_samples_file(path: str | Path) -> list[LabeledSample]:
    """Parse "ratio,label" lines (label: text | background); '#' comments."""
    samples = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2 or parts[1].strip() not in (TEXT, BACKGROUND):
            raise ValueError(f"{path}:{lineno}: expected 'ratio,text|background'")
        samples.append(LabeledSample(float(parts[0]), parts[1].strip()))
    return samples


def cmd_optimize_gamma(args: argparse.Namespace) -> int:
    try:
        if args.samples:
            samples = read_samples_file(args.samples)
        else:
            config = _config_from_args(args)
            corpus = Path(args.corpus)
            truth = load_ground_truth(corpus / "gt.txt")
            samples = []
            images = sorted(p for p in corpus.iterdir()
                            if p.suffix in (".pgm", ".png"))
            for path in images:
                img = load_gray(path)
                gt = truth.get(path.name, [])
                for pol in polarities(config.polarity):
                    view = img if pol == "dark" else invert(img)
                    samples.extend(collect_ratio_samples(view, gt, config.mser))
        gamma = optimize_gamma(samples, args.grid_step)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{gamma:.4f}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        detections: dict[str, list[BBox]] = {}
        for line in Path(args.detections).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            box = BBox(rec["left"], rec["top"], rec["right"], rec["bottom"])
            detections.setdefault(rec["image"], []).append(box)
        truth = load_ground_truth(args.truth)
        metrics = match_and_score(detections, truth, args.iou)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"p={metrics.precision:.2f} r={metrics.recall:.2f} f={metrics.f_measure:.2f}")
    return 0


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--gamma", type=float, help="stability ratio for isolation")
    p.add_argument("--delta", type=int, help="gray-level half-window")
    p.add_argument("--min-area", dest="min_area", type=int)
    p.add_argument("--max-area-fraction", dest="max_area_fraction", type=float)
    p.add_argument("--max-variation", dest="max_variation", type=float)
    p.add_argument("--min-diversity", dest="min_diversity", type=float)
    p.add_argument("--max-holes", dest="max_holes", type=int)
    p.add_argument("--conf-threshold", dest="conf_threshold", type=float)
    p.add_argument("--weights", help="IMSR weight file for the cnn scorer")
    p.add_argument("--scorer", choices=["cnn", "heuristic"])
    p.add_argument("--polarity", choices=["both", "dark", "light"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textdet",
                                     description="Scene text detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect text lines in images")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", default="lines.jsonl")
    p.add_argument("--render", action="store_true",
                   help="write PNG overlays next to the output file")
    p.add_argument("--jobs", type=int, default=1)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("extract-regions", help="dump isolated regions of one image")
    p.add_argument("image")
    p.add_argument("--out", default="regions.jsonl")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_extract_regions)

    p = sub.add_parser("optimize-gamma",
                       help="estimate the stability ratio from labeled data")
    p.add_argument("corpus", nargs="?",
                   help="directory with images and a gt.txt ground-truth file")
    p.add_argument("--samples", help="precomputed 'ratio,label' sample file")
    p.add_argument("--grid-step", dest="grid_step", type=float, default=0.01)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_optimize_gamma)

    p = sub.add_parser("evaluate", help="score a detections file against truth")
    p.add_argument("detections")
    p.add_argument("truth")
    p.add_argument("--iou", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "optimize-gamma" and not args.corpus and not args.samples:
        parser.error("optimize-gamma needs a corpus directory or --samples")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
