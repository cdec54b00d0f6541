#!/usr/bin/env python3
"""Generate a synthetic demo corpus, run detection, and report metrics.

Writes scene PGMs plus gt.txt into --out, then runs the detect command
with overlays and evaluates the resulting lines file.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from textdet.cli import main as cli_main
from textdet.imgio import save_pgm
from textdet.synth import make_scene


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo", help="output directory")
    ap.add_argument("--scenes", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scorer", choices=["heuristic", "cnn"], default="heuristic")
    ap.add_argument("--weights", help="IMSR weight file when --scorer cnn")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth_lines = []
    paths = []
    for i in range(args.scenes):
        scene = make_scene(args.seed + i)
        path = out / f"scene{i:02d}.pgm"
        save_pgm(scene.image, path)
        paths.append(str(path))
        print(f"{path.name}: {' '.join(scene.words)}")
        for box in scene.truth:
            truth_lines.append(f"{path.name},{box.left},{box.top},{box.right},{box.bottom}")
    gt = out / "gt.txt"
    gt.write_text("\n".join(truth_lines) + "\n")

    lines = out / "lines.jsonl"
    detect = ["detect", *paths, "--out", str(lines), "--render",
              "--scorer", args.scorer]
    if args.weights:
        detect += ["--weights", args.weights]
    rc = cli_main(detect)
    if rc != 0:
        return rc
    print(f"wrote {lines} and overlays to {out}/")
    return cli_main(["evaluate", str(lines), str(gt)])


if __name__ == "__main__":
    sys.exit(run())
