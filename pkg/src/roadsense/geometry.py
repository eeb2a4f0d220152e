"""Bounding-box arithmetic and raster frame operations.

Coordinate convention: integer pixel corners, origin top-left,
xmax/ymax exclusive, so area = (xmax - xmin) * (ymax - ymin) and a
degenerate box has zero area.  IoU is computed with exact integer
intersection/union areas before a single final division.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BoundsError, ParseError

CROP_SIZE = 100


@dataclass(frozen=True, order=True)
class BBox:
    xmin: int
    ymin: int
    xmax: int
    ymax: int

    def __post_init__(self):
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise BoundsError(
                f"degenerate box ({self.xmin},{self.ymin},{self.xmax},{self.ymax})")

    @property
    def width(self) -> int:
        return self.xmax - self.xmin

    @property
    def height(self) -> int:
        return self.ymax - self.ymin

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


def intersection_area(a: BBox, b: BBox) -> int:
    w = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    h = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    return inter / union


def horizontal_flip(b: BBox, image_width: int) -> BBox:
    """Mirror a box across the vertical centerline of an image."""
    if b.xmin < 0 or b.xmax > image_width:
        raise BoundsError(
            f"box ({b.xmin},{b.xmax}) exceeds image width {image_width}")
    return BBox(image_width - b.xmax, b.ymin, image_width - b.xmin, b.ymax)


def clamp_bbox(b: BBox, width: int, height: int) -> BBox:
    """Clamp a box to image bounds; raises if nothing remains."""
    xmin = max(0, min(b.xmin, width - 1))
    ymin = max(0, min(b.ymin, height - 1))
    xmax = min(width, max(b.xmax, xmin + 1))
    ymax = min(height, max(b.ymax, ymin + 1))
    return BBox(xmin, ymin, xmax, ymax)


@dataclass(frozen=True)
class Frame:
    """Row-major RGB raster."""

    width: int
    height: int
    data: bytes = field(repr=False)
    name: str | None = None

    def __post_init__(self):
        expected = self.width * self.height * 3
        if len(self.data) != expected:
            raise ValueError(
                f"frame buffer has {len(self.data)} bytes, expected {expected}")

    @classmethod
    def from_array(cls, arr: np.ndarray, name: str | None = None) -> "Frame":
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError("expected uint8 array of shape (h, w, 3)")
        h, w, _ = arr.shape
        return cls(w, h, arr.tobytes(), name)

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(
            self.height, self.width, 3)

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int],
               name: str | None = None) -> "Frame":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:] = color
        return cls.from_array(arr, name)


@dataclass(frozen=True)
class Crop:
    """Fixed-size 100x100 RGB raster cut from a frame."""

    data: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.data) != CROP_SIZE * CROP_SIZE * 3:
            raise ValueError("crop must be 100x100 RGB")

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(
            CROP_SIZE, CROP_SIZE, 3)


def _nearest_indices(n_out: int, n_in: int) -> np.ndarray:
    return (np.arange(n_out) * n_in // n_out).astype(np.intp)


def resize_frame(f: Frame, w: int, h: int) -> Frame:
    """Nearest-neighbor resize; same-size resize is the identity."""
    if w <= 0 or h <= 0:
        raise ValueError("target size must be positive")
    if (w, h) == (f.width, f.height):
        return f
    arr = f.to_array()
    out = arr[_nearest_indices(h, f.height)][:, _nearest_indices(w, f.width)]
    return Frame.from_array(np.ascontiguousarray(out), f.name)


def crop_region(f: Frame, b: BBox) -> Crop:
    """Extract box b and resample to the 100x100 classifier input."""
    if b.xmin < 0 or b.ymin < 0 or b.xmax > f.width or b.ymax > f.height:
        raise BoundsError(
            f"box {b.as_tuple()} outside frame {f.width}x{f.height}")
    arr = f.to_array()[b.ymin:b.ymax, b.xmin:b.xmax]
    out = arr[_nearest_indices(CROP_SIZE, b.height)][
        :, _nearest_indices(CROP_SIZE, b.width)]
    return Crop(np.ascontiguousarray(out).tobytes())


def draw_rect(arr: np.ndarray, b: BBox, color: tuple[int, int, int],
              thickness: int = 2) -> None:
    """Burn a rectangle outline into an image array, in place."""
    h, w = arr.shape[:2]
    x0, y0 = max(0, b.xmin), max(0, b.ymin)
    x1, y1 = min(w, b.xmax), min(h, b.ymax)
    t = thickness
    arr[y0:min(y0 + t, y1), x0:x1] = color
    arr[max(y1 - t, y0):y1, x0:x1] = color
    arr[y0:y1, x0:min(x0 + t, x1)] = color
    arr[y0:y1, max(x1 - t, x0):x1] = color


def write_ppm(f: Frame, path: str | Path) -> None:
    """Write an uncompressed binary PPM (P6, maxval 255)."""
    with open(path, "wb") as fh:
        fh.write(f"P6\n{f.width} {f.height}\n255\n".encode("ascii"))
        fh.write(f.data)


def read_ppm(path: str | Path) -> Frame:
    """Read a binary PPM (P6) file."""
    path = Path(path)
    raw = path.read_bytes()
    fields: list[bytes] = []
    pos = 0
    # Header: magic, width, height, maxval; '#' comments allowed.
    while len(fields) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PPM header", path=str(path), offset=pos)
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P6":
        raise ParseError(f"not a P6 PPM (magic {fields[0]!r})", path=str(path))
    try:
        width, height, maxval = (int(v) for v in fields[1:])
    except ValueError:
        raise ParseError("non-numeric PPM header field", path=str(path)) from None
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}", path=str(path))
    data = raw[pos:pos + width * height * 3]
    if len(data) != width * height * 3:
        raise ParseError("truncated PPM pixel data", path=str(path), offset=pos)
    return Frame(width, height, data, name=path.name)
