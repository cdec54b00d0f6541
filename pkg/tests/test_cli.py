import json

import numpy as np
import pytest

from textdet.cli import decode_rle, encode_rle, main, read_samples_file
from textdet.geometry import BBox, intersection_area
from textdet.imgio import GrayImage, save_pgm
from textdet.synth import make_scene


def write_scene(tmp_path, seed=3, **kwargs):
    scene = make_scene(seed, **kwargs)
    path = tmp_path / f"scene{seed}.pgm"
    save_pgm(scene.image, path)
    return scene, path


class TestRle:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pixels = frozenset((int(rng.integers(0, 30)), int(rng.integers(0, 30)))
                               for _ in range(rng.integers(1, 120)))
            assert decode_rle(encode_rle(pixels)) == pixels

    def test_runs_are_sorted_and_merged(self):
        pixels = frozenset({(3, 1), (4, 1), (5, 1), (9, 1), (0, 0)})
        assert encode_rle(pixels) == [[0, 0, 1], [1, 3, 3], [1, 9, 1]]


class TestDetect:
    def test_blank_image_empty_output(self, tmp_path):
        blank = tmp_path / "blank.pgm"
        save_pgm(GrayImage(np.full((40, 60), 180, dtype=np.uint8)), blank)
        out = tmp_path / "lines.jsonl"
        assert main(["detect", str(blank), "--out", str(out)]) == 0
        assert out.read_text() == ""

    def test_synthetic_word_detected(self, tmp_path):
        scene, path = write_scene(tmp_path, seed=3, n_words=1)
        out = tmp_path / "lines.jsonl"
        assert main(["detect", str(path), "--out", str(out),
                     "--scorer", "heuristic"]) == 0
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert records
        truth = scene.truth[0]
        best = max(records, key=lambda r: intersection_area(
            BBox(r["left"], r["top"], r["right"], r["bottom"]), truth))
        box = BBox(best["left"], best["top"], best["right"], best["bottom"])
        assert intersection_area(box, truth) >= 0.8 * truth.area

    def test_runs_are_byte_identical(self, tmp_path):
        _, path = write_scene(tmp_path, seed=5)
        out1 = tmp_path / "a.jsonl"
        out2 = tmp_path / "b.jsonl"
        assert main(["detect", str(path), "--out", str(out1)]) == 0
        assert main(["detect", str(path), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_file_continues_nonzero(self, tmp_path):
        _, path = write_scene(tmp_path, seed=4, n_words=1)
        out = tmp_path / "lines.jsonl"
        rc = main(["detect", str(tmp_path / "nope.pgm"), str(path),
                   "--out", str(out)])
        assert rc == 1
        assert out.exists() and out.read_text() != ""

    def test_render_writes_overlay(self, tmp_path):
        _, path = write_scene(tmp_path, seed=6, n_words=1)
        out = tmp_path / "lines.jsonl"
        assert main(["detect", str(path), "--out", str(out), "--render"]) == 0
        overlay = tmp_path / (path.stem + ".overlay.png")
        assert overlay.exists()

    def test_config_sidecar_and_flag_override(self, tmp_path):
        _, path = write_scene(tmp_path, seed=7, n_words=1)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"imser": {"gamma": 0.4, "min_emit_area": 10}}))
        out = tmp_path / "lines.jsonl"
        assert main(["detect", str(path), "--out", str(out),
                     "--config", str(cfg_path), "--gamma", "0.2"]) == 0
        sidecar = json.loads((tmp_path / "lines.jsonl.config.json").read_text())
        assert sidecar["imser"]["gamma"] == 0.2
        assert sidecar["imser"]["min_emit_area"] == 10

    def test_jobs_flag_keeps_order_and_bytes(self, tmp_path):
        paths = []
        for seed in (8, 9, 10):
            _, p = write_scene(tmp_path, seed=seed, n_words=1)
            paths.append(str(p))
        out1 = tmp_path / "seq.jsonl"
        out2 = tmp_path / "par.jsonl"
        assert main(["detect", *paths, "--out", str(out1), "--jobs", "1"]) == 0
        assert main(["detect", *paths, "--out", str(out2), "--jobs", "3"]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestExtractRegions:
    def test_flat_image_no_records(self, tmp_path):
        blank = tmp_path / "flat.pgm"
        save_pgm(GrayImage(np.full((30, 30), 120, dtype=np.uint8)), blank)
        out = tmp_path / "regions.jsonl"
        assert main(["extract-regions", str(blank), "--out", str(out)]) == 0
        assert out.read_text() == ""

    def test_black_square_record(self, tmp_path):
        arr = np.full((40, 40), 255, dtype=np.uint8)
        arr[10:20, 15:25] = 0
        img_path = tmp_path / "sq.pgm"
        save_pgm(GrayImage(arr), img_path)
        out = tmp_path / "regions.jsonl"
        assert main(["extract-regions", str(img_path), "--out", str(out),
                     "--polarity", "dark", "--min-area", "5"]) == 0
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(records) == 1
        rec = records[0]
        assert rec["area"] == 100
        assert (rec["left"], rec["top"], rec["right"], rec["bottom"]) == (15, 10, 24, 19)
        assert rec["polarity"] == "dark"
        assert rec["holes"] == 0
        assert decode_rle(rec["rle"]) == frozenset(
            (x, y) for x in range(15, 25) for y in range(10, 20))


class TestOptimizeGamma:
    def corpus(self, tmp_path):
        # image a: stable nested areas 240/400/500 inside truth give text
        # ratios {0.667, 0.25}; image b: stable areas 240/400 with no truth
        # give the lone background ratio 0.667
        d = tmp_path / "corpus"
        d.mkdir()
        a = np.full((40, 40), 255, dtype=np.uint8)
        a[5:25, 5:30] = 200
        a[5:25, 5:25] = 2
        a[5:25, 5:21] = 1
        a[5:25, 5:17] = 0
        save_pgm(GrayImage(a), d / "a.pgm")
        b = np.full((40, 50), 255, dtype=np.uint8)
        b[5:25, 5:45] = 200
        b[5:25, 5:25] = 2
        b[5:25, 5:21] = 1
        b[5:25, 5:17] = 0
        save_pgm(GrayImage(b), d / "b.pgm")
        (d / "gt.txt").write_text("a.pgm,5,5,29,24\n")
        return d

    def test_samples_file(self, tmp_path, capsys):
        f = tmp_path / "samples.csv"
        f.write_text("# ratio,label\n0.01,text\n0.02,text\n0.03,text\n"
                     "0.3,background\n0.4,background\n0.5,background\n")
        assert main(["optimize-gamma", "--samples", str(f),
                     "--grid-step", "0.05"]) == 0
        assert capsys.readouterr().out == "0.0500\n"

    def test_corpus_mode(self, tmp_path, capsys):
        d = self.corpus(tmp_path)
        rc = main(["optimize-gamma", str(d), "--grid-step", "0.05",
                   "--polarity", "dark", "--min-area", "5",
                   "--max-area-fraction", "1.0", "--delta", "1"])
        assert rc == 0
        out = capsys.readouterr().out
        # text {0.25, 0.667} vs background {0.667}: separation peaks at 0.25
        assert out == "0.2500\n"

    def test_single_class_errors(self, tmp_path, capsys):
        f = tmp_path / "samples.csv"
        f.write_text("0.01,text\n")
        assert main(["optimize-gamma", "--samples", str(f)]) == 1
        assert "error" in capsys.readouterr().err

    def test_duplicated_corpus_same_result(self, tmp_path, capsys):
        f = tmp_path / "samples.csv"
        rows = "0.01,text\n0.5,background\n"
        f.write_text(rows)
        assert main(["optimize-gamma", "--samples", str(f), "--grid-step", "0.05"]) == 0
        first = capsys.readouterr().out
        f.write_text(rows * 4)
        assert main(["optimize-gamma", "--samples", str(f), "--grid-step", "0.05"]) == 0
        assert capsys.readouterr().out == first

    def test_requires_input(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["optimize-gamma"])
        assert exc.value.code == 2


class TestEvaluate:
    def test_identical_files(self, tmp_path, capsys):
        det = tmp_path / "det.jsonl"
        det.write_text(json.dumps({"image": "a", "left": 0, "top": 0,
                                   "right": 9, "bottom": 9}) + "\n")
        gt = tmp_path / "gt.txt"
        gt.write_text("a,0,0,9,9\n")
        assert main(["evaluate", str(det), str(gt)]) == 0
        assert capsys.readouterr().out == "p=1.00 r=1.00 f=1.00\n"

    def test_rounding_of_table_values(self, tmp_path, capsys):
        # 100 detections vs 100+ truths crafted for p=0.82, r=0.71
        det_lines = []
        gt_lines = []
        for i in range(82):  # matching pairs
            det_lines.append({"image": f"m{i}", "left": 0, "top": 0,
                              "right": 9, "bottom": 9})
            gt_lines.append(f"m{i},0,0,9,9")
        for i in range(18):  # unmatched detections
            det_lines.append({"image": f"fp{i}", "left": 0, "top": 0,
                              "right": 9, "bottom": 9})
        total_gt = round(82 / 0.71)  # 115 truths -> recall 0.7130
        for i in range(total_gt - 82):
            gt_lines.append(f"fn{i},0,0,9,9")
        det = tmp_path / "det.jsonl"
        det.write_text("\n".join(json.dumps(r) for r in det_lines) + "\n")
        gt = tmp_path / "gt.txt"
        gt.write_text("\n".join(gt_lines) + "\n")
        assert main(["evaluate", str(det), str(gt)]) == 0
        assert capsys.readouterr().out == "p=0.82 r=0.71 f=0.76\n"

    def test_empty_detections_convention(self, tmp_path, capsys):
        det = tmp_path / "det.jsonl"
        det.write_text("")
        gt = tmp_path / "gt.txt"
        gt.write_text("a,0,0,9,9\n")
        assert main(["evaluate", str(det), str(gt)]) == 0
        assert capsys.readouterr().out == "p=1.00 r=0.00 f=0.00\n"

    def test_parse_error_exit_code(self, tmp_path, capsys):
        det = tmp_path / "det.jsonl"
        det.write_text("not json\n")
        gt = tmp_path / "gt.txt"
        gt.write_text("a,0,0,9,9\n")
        assert main(["evaluate", str(det), str(gt)]) == 1


class TestSamplesFile:
    def test_round_trip(self, tmp_path):
        f = tmp_path / "s.csv"
        f.write_text("0.25,text\n0.5,background\n")
        samples = read_samples_file(f)
        assert [(s.ratio, s.label) for s in samples] == [(0.25, "text"),
                                                         (0.5, "background")]

    def test_bad_label(self, tmp_path):
        f = tmp_path / "s.csv"
        f.write_text("0.25,maybe\n")
        with pytest.raises(ValueError):
            read_samples_file(f)
