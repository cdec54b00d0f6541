#!/usr/bin/env python3
"""Sweep the stability ratio around a base value and tabulate p/r/f.

Offsets are additive percentage points (base 0.15 with offset -5 runs at
0.10).  Uses the synthetic corpus and the heuristic scorer, so rows show
the qualitative precision/recall trade-off, not benchmark numbers.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from textdet.cli import main as cli_main
from textdet.evaluate import load_ground_truth, match_and_score
from textdet.geometry import BBox
from textdet.imgio import save_pgm
from textdet.synth import make_scene


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base-gamma", type=float, default=0.15)
    ap.add_argument("--offsets", type=float, nargs="*",
                    default=[-5, -2, 0, 2, 5], help="percentage points")
    ap.add_argument("--scenes", type=int, default=12)
    ap.add_argument("--seed", type=int, default=100)
    args = ap.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        truth_lines = []
        paths = []
        for i in range(args.scenes):
            scene = make_scene(args.seed + i)
            path = root / f"scene{i:02d}.pgm"
            save_pgm(scene.image, path)
            paths.append(str(path))
            for box in scene.truth:
                truth_lines.append(
                    f"{path.name},{box.left},{box.top},{box.right},{box.bottom}")
        (root / "gt.txt").write_text("\n".join(truth_lines) + "\n")
        truth = load_ground_truth(root / "gt.txt")

        print(f"{'gamma':>8} {'p':>6} {'r':>6} {'f':>6}")
        for offset in args.offsets:
            gamma = max(0.0, args.base_gamma + offset / 100.0)
            lines = root / f"lines_{offset}.jsonl"
            rc = cli_main(["detect", *paths, "--out", str(lines),
                           "--gamma", f"{gamma}"])
            if rc != 0:
                return rc
            detections: dict = {}
            for line in lines.read_text().splitlines():
                rec = json.loads(line)
                detections.setdefault(rec["image"], []).append(
                    BBox(rec["left"], rec["top"], rec["right"], rec["bottom"]))
            m = match_and_score(detections, truth, 0.5)
            print(f"{gamma:8.2f} {m.precision:6.2f} {m.recall:6.2f} {m.f_measure:6.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
