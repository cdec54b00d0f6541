"""Forward pass of the 6-layer text/background CNN and its weight format.

Architecture (valid convolutions, non-overlapping average pools):
32x32 -> conv 64@6x6 + ReLU -> 64x27x27 -> avgpool 3x3 -> 64x9x9
      -> conv 96@4x4 + ReLU -> 96x6x6  -> avgpool 2x2 -> 96x3x3
      -> flatten 864 -> fc 200 + ReLU -> fc 200 + ReLU -> fc 2 -> softmax.
Class index 1 is text; the text probability is the confidence.

Weight file ("IMSR" format, little-endian throughout): magic b"IMSR",
u32 version = 1, then five layer blocks in pipeline order.  Each block:
u8 tag (1 = conv, 2 = fc), u8 rank, rank u32 dims (conv [out, in, kh, kw],
fc [out, in]), the weights as f32 in row-major order of those dims, then
`out` f32 biases.  No padding anywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .candidates import CandidateRegion
from .imgio import GrayImage, extract_patch

MAGIC = b"IMSR"
VERSION = 1

_TAG_CONV = 1
_TAG_FC = 2

# (tag, shape) for the five layer blocks in file order
LAYER_SPECS = (
    (_TAG_CONV, (64, 1, 6, 6)),
    (_TAG_CONV, (96, 64, 4, 4)),
    (_TAG_FC, (200, 864)),
    (_TAG_FC, (200, 200)),
    (_TAG_FC, (2, 200)),
)


@dataclass(frozen=True)
class WeightSet:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def __post_init__(self) -> None:
        expect = [spec[1] for spec in LAYER_SPECS]
        tensors = self.tensors()
        for (w, b), shape in zip(tensors, expect):
            if w.shape != shape:
                raise ValueError(f"weight shape {w.shape} != {shape}")
            if b.shape != (shape[0],):
                raise ValueError(f"bias shape {b.shape} != ({shape[0]},)")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("non-finite value in weights")

    def tensors(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.conv1_w, self.conv1_b), (self.conv2_w, self.conv2_b),
                (self.fc1_w, self.fc1_b), (self.fc2_w, self.fc2_b),
                (self.out_w, self.out_b)]

    @classmethod
    def zeros(cls) -> "WeightSet":
        parts = []
        for _, shape in LAYER_SPECS:
            parts.append(np.zeros(shape))
            parts.append(np.zeros(shape[0]))
        return cls(*parts)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 0.1) -> "WeightSet":
        parts = []
        for _, shape in LAYER_SPECS:
            parts.append(rng.normal(0.0, scale, size=shape))
            parts.append(rng.normal(0.0, scale, size=shape[0]))
        return cls(*parts)


def load_weights(path: str | Path) -> WeightSet:
    """Read and validate an IMSR weight file."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated header")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    pos = 8
    parts: list[np.ndarray] = []
    for tag, shape in LAYER_SPECS:
        if pos + 2 > len(raw):
            raise ValueError(f"{path}: truncated layer header")
        ftag, rank = raw[pos], raw[pos + 1]
        pos += 2
        if ftag != tag:
            raise ValueError(f"{path}: layer tag {ftag} != expected {tag}")
        if rank != len(shape):
            raise ValueError(f"{path}: layer rank {rank} != expected {len(shape)}")
        if pos + 4 * rank > len(raw):
            raise ValueError(f"{path}: truncated dims")
        dims = struct.unpack_from(f"<{rank}I", raw, pos)
        pos += 4 * rank
        if dims != shape:
            raise ValueError(f"{path}: layer dims {dims} != expected {shape}")
        n_w = int(np.prod(shape))
        n_b = shape[0]
        need = 4 * (n_w + n_b)
        if pos + need > len(raw):
            raise ValueError(f"{path}: truncated layer data")
        w = np.frombuffer(raw, dtype="<f4", count=n_w, offset=pos).reshape(shape)
        pos += 4 * n_w
        b = np.frombuffer(raw, dtype="<f4", count=n_b, offset=pos)
        pos += 4 * n_b
        parts.append(w.astype(np.float64))
        parts.append(b.astype(np.float64))
    if pos != len(raw):
        raise ValueError(f"{path}: {len(raw) - pos} trailing bytes")
    return WeightSet(*parts)


def save_weights(w: WeightSet, path: str | Path) -> None:
    """Write an IMSR weight file (values stored as f32)."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    for (tag, shape), (wt, bt) in zip(LAYER_SPECS, w.tensors()):
        out += struct.pack("<BB", tag, len(shape))
        out += struct.pack(f"<{len(shape)}I", *shape)
        out += np.ascontiguousarray(wt, dtype="<f4").tobytes()
        out += np.ascontiguousarray(bt, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def _conv_valid(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid convolution (stride 1) of (C, H, W) with (F, C, kh, kw)."""
    kh, kw = w.shape[2], w.shape[3]
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    # win: (C, H-kh+1, W-kw+1, kh, kw); contract channel and kernel axes
    out = np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))
    return out + b[:, None, None]


def _avgpool(x: np.ndarray, size: int) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // size, size, w // size, size).mean(axis=(2, 4))


def forward_layers(patch: np.ndarray, w: WeightSet) -> dict[str, np.ndarray]:
    """Run the network, returning every intermediate activation.

    Keys in pipeline order: conv1, pool1, conv2, pool2, fc1, fc2, logits,
    probs.  The flatten order is channel-major, then rows, then columns.
    """
    x = np.asarray(patch, dtype=np.float64)
    if x.shape != (32, 32):
        raise ValueError(f"patch must be 32x32, got {x.shape}")
    a1 = np.maximum(_conv_valid(x[None, :, :], w.conv1_w, w.conv1_b), 0.0)
    p1 = _avgpool(a1, 3)
    a2 = np.maximum(_conv_valid(p1, w.conv2_w, w.conv2_b), 0.0)
    p2 = _avgpool(a2, 2)
    flat = p2.reshape(-1)
    f1 = np.maximum(w.fc1_w @ flat + w.fc1_b, 0.0)
    f2 = np.maximum(w.fc2_w @ f1 + w.fc2_b, 0.0)
    logits = w.out_w @ f2 + w.out_b
    shifted = np.exp(logits - logits.max())
    probs = shifted / shifted.sum()
    return {"conv1": a1, "pool1": p1, "conv2": a2, "pool2": p2,
            "fc1": f1, "fc2": f2, "logits": logits, "probs": probs}


def forward(patch: np.ndarray, w: WeightSet) -> float:
    """Text-class probability for one normalized 32x32 patch."""
    return float(forward_layers(patch, w)["probs"][1])


@dataclass(frozen=True)
class ScoredRegion:
    candidate: CandidateRegion
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


def score_regions(img: GrayImage, candidates: list[CandidateRegion],
                  w: WeightSet) -> list[ScoredRegion]:
    """Score each candidate on the patch extracted from its bbox."""
    return [ScoredRegion(c, forward(extract_patch(img, c.region.bbox), w))
            for c in candidates]


def heuristic_score(candidate: CandidateRegion) -> float:
    """Weights-free fallback score from aspect ratio, fill ratio, and holes.

    score = clamp(0, 1, 0.5 + 0.3*[aspect in [0.1, 1.2]]
                        + 0.2*[fill in [0.2, 0.9]] - 0.2*holes/4)
    with aspect = bbox width/height and fill = area / bbox area.
    """
    bbox = candidate.region.bbox
    aspect = bbox.width / bbox.height
    fill = candidate.region.area / bbox.area
    score = 0.5
    if 0.1 <= aspect <= 1.2:
        score += 0.3
    if 0.2 <= fill <= 0.9:
        score += 0.2
    score -= 0.2 * candidate.holes / 4.0
    return min(1.0, max(0.0, score))


def heuristic_score_regions(img: GrayImage,
                            candidates: list[CandidateRegion]) -> list[ScoredRegion]:
    return [ScoredRegion(c, heuristic_score(c)) for c in candidates]
