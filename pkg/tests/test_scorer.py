import math
import struct

import numpy as np
import pytest

from textdet.candidates import DARK_ON_LIGHT, CandidateRegion
from textdet.comptree import Region
from textdet.geometry import BBox
from textdet.imgio import GrayImage
from textdet.scorer import (WeightSet, forward, forward_layers, heuristic_score,
                            load_weights, save_weights, score_regions)

from oracles import cnn_forward_ref


def random_patch(rng) -> np.ndarray:
    p = rng.normal(0.0, 1.0, size=(32, 32))
    return (p - p.mean()) / p.std()


class TestWeightFile:
    def test_zero_round_trip(self, tmp_path):
        path = tmp_path / "w.imsr"
        save_weights(WeightSet.zeros(), path)
        w = load_weights(path)
        assert all(np.all(t == 0) and np.all(b == 0) for t, b in w.tensors())

    def test_random_round_trip_is_f32_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        w = WeightSet.random(rng)
        path = tmp_path / "w.imsr"
        save_weights(w, path)
        again = load_weights(path)
        for (a, ab), (b, bb) in zip(w.tensors(), again.tensors()):
            assert np.array_equal(a.astype(np.float32), b.astype(np.float32))
            assert np.array_equal(ab.astype(np.float32), bb.astype(np.float32))

    def test_magic(self, tmp_path):
        path = tmp_path / "w.imsr"
        save_weights(WeightSet.zeros(), path)
        assert path.read_bytes()[:4] == b"IMSR"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.imsr"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_weights(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.imsr"
        good = tmp_path / "g.imsr"
        save_weights(WeightSet.zeros(), good)
        raw = bytearray(good.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="version"):
            load_weights(path)

    def test_truncated(self, tmp_path):
        good = tmp_path / "g.imsr"
        save_weights(WeightSet.zeros(), good)
        bad = tmp_path / "t.imsr"
        bad.write_bytes(good.read_bytes()[:2000])
        with pytest.raises(ValueError, match="truncated"):
            load_weights(bad)

    def test_nan_rejected(self, tmp_path):
        good = tmp_path / "g.imsr"
        save_weights(WeightSet.zeros(), good)
        raw = bytearray(good.read_bytes())
        # first conv weight starts after magic, version, tag, rank, 4 dims
        off = 4 + 4 + 1 + 1 + 16
        raw[off:off + 4] = struct.pack("<f", math.nan)
        bad = tmp_path / "n.imsr"
        bad.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="non-finite"):
            load_weights(bad)

    def test_trailing_bytes_rejected(self, tmp_path):
        good = tmp_path / "g.imsr"
        save_weights(WeightSet.zeros(), good)
        bad = tmp_path / "x.imsr"
        bad.write_bytes(good.read_bytes() + b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_weights(bad)


class TestForward:
    def test_zero_weights_give_half(self):
        rng = np.random.default_rng(0)
        assert forward(random_patch(rng), WeightSet.zeros()) == pytest.approx(0.5, abs=1e-9)

    def test_out_bias_closed_form(self):
        w = WeightSet.zeros()
        biased = WeightSet(*[t for pair in w.tensors()[:-1] for t in pair],
                           w.out_w, np.array([0.0, 10.0]))
        rng = np.random.default_rng(0)
        conf = forward(random_patch(rng), biased)
        assert conf == pytest.approx(1.0 / (1.0 + math.exp(-10.0)), abs=1e-12)

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            w = WeightSet.random(rng)
            patch = random_patch(rng)
            assert forward(patch, w) == pytest.approx(cnn_forward_ref(patch, w), abs=1e-5)

    def test_layer_shapes(self):
        rng = np.random.default_rng(2)
        acts = forward_layers(random_patch(rng), WeightSet.random(rng))
        assert acts["conv1"].shape == (64, 27, 27)
        assert acts["pool1"].shape == (64, 9, 9)
        assert acts["conv2"].shape == (96, 6, 6)
        assert acts["pool2"].shape == (96, 3, 3)
        assert acts["fc1"].shape == (200,)
        assert acts["fc2"].shape == (200,)
        assert acts["logits"].shape == (2,)

    def test_softmax_is_distribution(self):
        rng = np.random.default_rng(3)
        acts = forward_layers(random_patch(rng), WeightSet.random(rng))
        probs = acts["probs"]
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(probs > 0) and np.all(probs < 1)

    def test_bit_deterministic(self):
        rng = np.random.default_rng(4)
        w = WeightSet.random(rng)
        patch = random_patch(rng)
        assert forward(patch, w) == forward(patch, w)

    def test_bad_patch_shape(self):
        with pytest.raises(ValueError):
            forward(np.zeros((31, 32)), WeightSet.zeros())


def make_candidate_at(left, top, right, bottom) -> CandidateRegion:
    pixels = {(x, y) for x in range(left, right + 1) for y in range(top, bottom + 1)}
    region = Region.from_pixels(pixels, 10.0, 0)
    return CandidateRegion(region, 0, 10.0, DARK_ON_LIGHT)


class TestScoreRegions:
    def test_empty(self):
        img = GrayImage(np.zeros((40, 40), dtype=np.uint8))
        assert score_regions(img, [], WeightSet.zeros()) == []

    def test_zero_weights_half(self):
        img = GrayImage(np.random.default_rng(0).integers(0, 256, (40, 40), dtype=np.uint8))
        scored = score_regions(img, [make_candidate_at(5, 5, 20, 20)], WeightSet.zeros())
        assert scored[0].confidence == pytest.approx(0.5, abs=1e-9)

    def test_matches_forward_elementwise(self):
        from textdet.imgio import extract_patch

        rng = np.random.default_rng(5)
        img = GrayImage(rng.integers(0, 256, (50, 50), dtype=np.uint8))
        w = WeightSet.random(rng)
        cands = [make_candidate_at(0, 0, 15, 15), make_candidate_at(20, 8, 45, 30)]
        scored = score_regions(img, cands, w)
        for c, s in zip(cands, scored):
            assert s.candidate is c
            assert s.confidence == forward(extract_patch(img, c.region.bbox), w)


class TestHeuristicScore:
    def make(self, width, height, fill, holes):
        pixels = set()
        target = int(round(fill * width * height))
        for i in range(target):
            pixels.add((i % width, i // width))
        pixels.add((width - 1, height - 1))
        region = Region.from_pixels(pixels, 0.0, 0)
        return CandidateRegion(region, holes, 0.0, DARK_ON_LIGHT)

    def test_ideal_glyph_scores_one(self):
        cand = self.make(10, 20, 0.5, 0)
        assert heuristic_score(cand) == pytest.approx(1.0)

    def test_wide_filled_holey_scores_low(self):
        cand = self.make(50, 10, 0.95, 4)
        assert heuristic_score(cand) == pytest.approx(0.3)

    def test_always_in_unit_interval(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            w = int(rng.integers(1, 40))
            h = int(rng.integers(1, 40))
            cand = self.make(w, h, float(rng.uniform(0.05, 1.0)), int(rng.integers(0, 9)))
            assert 0.0 <= heuristic_score(cand) <= 1.0
