"""Pixel rendering of levels and binary PPM (P6) image I/O."""

from __future__ import annotations

import numpy as np

from ..errors import FormatError
from . import objects as obj
from .level import Level


def render(level: Level, sprite_px: int = 16) -> np.ndarray:
    """Render to an (H*px, W*px, 3) uint8 image; equal grids render equal images."""
    if sprite_px < 1:
        raise ValueError("sprite_px must be >= 1")
    table = obj.sprite_table(level.kind, sprite_px)
    tiles = table[level.cells]  # (H, W, px, px, 3)
    h, w = level.cells.shape
    return np.ascontiguousarray(
        tiles.transpose(0, 2, 1, 3, 4).reshape(h * sprite_px, w * sprite_px, 3)
    )


def save_ppm(image: np.ndarray, path) -> None:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8 image")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def load_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise FormatError("not a binary PPM (P6) file")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}")
    body = data[pos : pos + w * h * 3]
    if len(body) != w * h * 3:
        raise FormatError("truncated pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy()
