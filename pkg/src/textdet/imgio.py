"""Grayscale image loading, polarity inversion, and CNN patch extraction.

Supported inputs are binary PGM (P5, maxval 255) and 8-bit PNG (gray or
RGB).  Color pixels are reduced with integer Rec.601 luma, rounding half
up: luma = (299*R + 587*G + 114*B + 500) // 1000.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import BBox

PATCH_SIZE = 32

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class GrayImage:
    """8-bit single-channel raster; ``data`` is (height, width) uint8."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError("image data must be two-dimensional")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("zero-dimension image")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("gray levels must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def at(self, x: int, y: int) -> int:
        return int(self.data[y, x])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.all(self.data == other.data))


def _luma(rgb: np.ndarray) -> np.ndarray:
    r = rgb[..., 0].astype(np.int64)
    g = rgb[..., 1].astype(np.int64)
    b = rgb[..., 2].astype(np.int64)
    return ((299 * r + 587 * g + 114 * b + 500) // 1000).astype(np.uint8)


def _read_pgm(raw: bytes, path: Path) -> GrayImage:
    if raw[:2] != b"P5":
        raise ValueError(f"{path}: not a binary (P5) PGM file")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise ValueError(f"{path}: malformed PGM header")
        fields.append(int(token))
    pos += 1  # single whitespace byte separates header from raster data
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValueError(f"{path}: zero-dimension image")
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 PGM is supported")
    payload = raw[pos:pos + width * height]
    if len(payload) != width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(data.copy())


def load_gray(path: str | Path) -> GrayImage:
    """Load a PGM (P5) or PNG file as a grayscale image."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"P5":
        return _read_pgm(raw, path)
    if raw[:8] == _PNG_MAGIC:
        from PIL import Image

        with Image.open(path) as im:
            if im.mode == "P":
                im = im.convert("RGB")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
                if arr.size == 0:
                    raise ValueError(f"{path}: zero-dimension image")
                return GrayImage(arr)
            if im.mode == "RGB":
                rgb = np.asarray(im, dtype=np.uint8)
                if rgb.size == 0:
                    raise ValueError(f"{path}: zero-dimension image")
                return GrayImage(_luma(rgb))
            raise ValueError(f"{path}: unsupported PNG mode {im.mode!r}")
    raise ValueError(f"{path}: unsupported format")


def save_pgm(img: GrayImage, path: str | Path) -> None:
    """Write a binary P5 PGM; load_gray round-trips it bit-exactly."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.data.tobytes())


def invert(img: GrayImage) -> GrayImage:
    """Flip polarity: p -> 255 - p.  Involutive."""
    return GrayImage(255 - img.data)


def _bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resample with edge clamping."""
    in_h, in_w = src.shape
    ys = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = src[np.ix_(y0, x0)]
    b = src[np.ix_(y0, x1)]
    c = src[np.ix_(y1, x0)]
    d = src[np.ix_(y1, x1)]
    top = a * (1.0 - fx) + b * fx
    bot = c * (1.0 - fx) + d * fx
    return top * (1.0 - fy) + bot * fy


def extract_patch(img: GrayImage, bbox: BBox) -> np.ndarray:
    """Resize the bbox window to 32x32 and normalize it.

    Returns a float64 (32, 32) array with zero mean and unit population
    standard deviation; constant windows map to the all-zero patch.
    """
    if bbox.left < 0 or bbox.top < 0 or bbox.right >= img.width or bbox.bottom >= img.height:
        raise ValueError(f"bbox {bbox} outside image {img.width}x{img.height}")
    window = img.data[bbox.top:bbox.bottom + 1, bbox.left:bbox.right + 1].astype(np.float64)
    if window.min() == window.max():
        return np.zeros((PATCH_SIZE, PATCH_SIZE))
    resized = _bilinear_resize(window, PATCH_SIZE, PATCH_SIZE)
    std = resized.std()
    if std < 1e-12:
        return np.zeros((PATCH_SIZE, PATCH_SIZE))
    return (resized - resized.mean()) / std
