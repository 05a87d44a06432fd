"""Latent-grid algebra: rectangles, paste/crop, blending, masks, and file IO.

Latents are numpy float32 arrays of shape (H, W, 3). Every operation here is
pure: inputs are never mutated, outputs are fresh arrays.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CHANNELS = 3

MAGIC = b"RCLG"


class ShapeError(ValueError):
    """Raised when grid/rect dimensions do not line up."""


@dataclass(frozen=True)
class RegionRect:
    """Fractional rectangle: offsets and scales in [0, 1] per axis."""

    y_offset: float
    y_scale: float
    x_offset: float
    x_scale: float

    def validate(self):
        if not (0.0 <= self.y_offset and 0.0 <= self.x_offset):
            raise ValueError("rect offsets must be >= 0")
        if self.y_scale <= 0.0 or self.x_scale <= 0.0:
            raise ValueError("rect scales must be > 0")
        if self.y_offset + self.y_scale > 1.0 + 1e-12:
            raise ValueError("y_offset+y_scale exceeds 1")
        if self.x_offset + self.x_scale > 1.0 + 1e-12:
            raise ValueError("x_offset+x_scale exceeds 1")
        return self

    def centroid(self):
        return (self.x_offset + self.x_scale / 2.0, self.y_offset + self.y_scale / 2.0)

    def to_dict(self):
        return {
            "y_offset": self.y_offset,
            "y_scale": self.y_scale,
            "x_offset": self.x_offset,
            "x_scale": self.x_scale,
        }

    @classmethod
    def from_dict(cls, d) -> "RegionRect":
        return cls(d["y_offset"], d["y_scale"], d["x_offset"], d["x_scale"]).validate()


@dataclass(frozen=True)
class PixelRect:
    """Half-open integer pixel bounds."""

    row_start: int
    row_end: int
    col_start: int
    col_end: int

    @property
    def height(self):
        return self.row_end - self.row_start

    @property
    def width(self):
        return self.col_end - self.col_start


def rect_to_pixels(rect: RegionRect, height: int, width: int) -> PixelRect:
    """Floor both edges, clamped so the result is non-empty and in bounds."""
    row_start = int(np.floor(rect.y_offset * height))
    row_end = int(np.floor((rect.y_offset + rect.y_scale) * height))
    row_start = min(row_start, height - 1)
    row_end = min(max(row_end, row_start + 1), height)
    col_start = int(np.floor(rect.x_offset * width))
    col_end = int(np.floor((rect.x_offset + rect.x_scale) * width))
    col_start = min(col_start, width - 1)
    col_end = min(max(col_end, col_start + 1), width)
    return PixelRect(row_start, row_end, col_start, col_end)


def new_grid(height: int, width: int, fill: float = 0.0) -> np.ndarray:
    return np.full((height, width, CHANNELS), fill, dtype=np.float32)


def _check_grid(grid: np.ndarray):
    if grid.ndim != 3 or grid.shape[2] != CHANNELS:
        raise ShapeError(f"expected (H, W, {CHANNELS}) grid, got {grid.shape}")


def _check_rect_in(grid: np.ndarray, rect: PixelRect):
    h, w = grid.shape[:2]
    if not (0 <= rect.row_start < rect.row_end <= h and 0 <= rect.col_start < rect.col_end <= w):
        raise ShapeError(f"rect {rect} outside grid {grid.shape}")


def replace(base: np.ndarray, regional: np.ndarray, rect: PixelRect) -> np.ndarray:
    """Paste `regional` into `base` over `rect`; base untouched."""
    _check_grid(base)
    _check_rect_in(base, rect)
    if regional.shape[:2] != (rect.height, rect.width):
        raise ShapeError(
            f"regional shape {regional.shape[:2]} != rect dims {(rect.height, rect.width)}"
        )
    out = base.copy()
    out[rect.row_start : rect.row_end, rect.col_start : rect.col_end] = regional
    return out


def crop(grid: np.ndarray, rect: PixelRect) -> np.ndarray:
    _check_grid(grid)
    _check_rect_in(grid, rect)
    return grid[rect.row_start : rect.row_end, rect.col_start : rect.col_end].copy()


def blend(base: np.ndarray, refined: np.ndarray, delta: float) -> np.ndarray:
    """out = base*(1-delta) + refined*delta, elementwise."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"delta must be in [0,1], got {delta}")
    if base.shape != refined.shape:
        raise ShapeError(f"blend shape mismatch {base.shape} vs {refined.shape}")
    if delta == 0.0:
        return base.copy()
    if delta == 1.0:
        return refined.copy()
    d = np.float32(delta)
    return (base * (np.float32(1.0) - d) + refined * d).astype(np.float32)


def full_mask(height: int, width: int, value: bool = True) -> np.ndarray:
    return np.full((height, width), value, dtype=bool)


def rect_mask(height: int, width: int, rect: PixelRect) -> np.ndarray:
    m = np.zeros((height, width), dtype=bool)
    m[rect.row_start : rect.row_end, rect.col_start : rect.col_end] = True
    return m


def _check_mask(grid: np.ndarray, mask: np.ndarray):
    if mask.shape != grid.shape[:2]:
        raise ShapeError(f"mask shape {mask.shape} != grid {grid.shape[:2]}")


def reinit_masked(noise: np.ndarray, mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Redraw standard-normal values inside the mask, row-major pixel order."""
    _check_grid(noise)
    _check_mask(noise, mask)
    out = noise.copy()
    n = int(mask.sum())
    if n:
        fresh = rng.standard_normal((n, CHANNELS), dtype=np.float32)
        out[mask] = fresh
    return out


def repaint_merge(original: np.ndarray, edited: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Inside the mask take `edited`, outside keep `original`."""
    if original.shape != edited.shape:
        raise ShapeError(f"merge shape mismatch {original.shape} vs {edited.shape}")
    _check_mask(original, mask)
    out = original.copy()
    out[mask] = edited[mask]
    return out


# ---------------------------------------------------------------------------
# serialization

def save_latent(path, grid: np.ndarray):
    """Flat binary layout: 16-byte header then row-major float32 LE."""
    _check_grid(grid)
    h, w, c = grid.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", h, w, c))
        f.write(np.ascontiguousarray(grid, dtype="<f4").tobytes())


def load_latent(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise ValueError(f"{path}: not a latent snapshot")
        h, w, c = struct.unpack("<III", header[4:])
        data = np.frombuffer(f.read(), dtype="<f4")
    if data.size != h * w * c:
        raise ValueError(f"{path}: truncated latent payload")
    return data.reshape(h, w, c).astype(np.float32)


def to_uint8(grid: np.ndarray) -> np.ndarray:
    """clamp(latent, 0, 1) * 255 with round-half-to-even."""
    clamped = np.clip(grid, 0.0, 1.0).astype(np.float64)
    return np.rint(clamped * 255.0).astype(np.uint8)


def ppm_bytes(grid: np.ndarray) -> bytes:
    _check_grid(grid)
    h, w = grid.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + to_uint8(grid).tobytes()


def parse_ppm(data: bytes) -> np.ndarray:
    """Inverse of ppm_bytes, returning uint8 (H, W, 3)."""
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 PPM")
    parts = data.split(b"\n", 3)
    w, h = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8)
    return pixels[: h * w * 3].reshape(h, w, 3).copy()


def save_ppm(path, grid: np.ndarray):
    with open(path, "wb") as f:
        f.write(ppm_bytes(grid))


def save_png(path, grid: np.ndarray):
    from PIL import Image

    Image.fromarray(to_uint8(grid), mode="RGB").save(path, format="PNG")


def png_bytes(grid: np.ndarray) -> bytes:
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(to_uint8(grid), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
