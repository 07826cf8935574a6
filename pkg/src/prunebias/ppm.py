"""8-bit RGB images, read and written as binary PPM (P6, maxval 255)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError, LengthError


@dataclass(frozen=True)
class ImageRGB:
    """Row-major 8-bit RGB raster."""

    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width, 3)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ArgumentError("image dimensions must be positive")
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ArgumentError(
                f"pixel buffer must be uint8 of shape ({self.height}, {self.width}, 3), "
                f"got {self.pixels.dtype} {self.pixels.shape}"
            )
        self.pixels.setflags(write=False)


def _next_token(blob: bytes, off: int) -> tuple[bytes, int]:
    """PPM header token: whitespace separated, '#' starts a comment to end of line."""
    n = len(blob)
    while off < n:
        c = blob[off:off + 1]
        if c == b"#":
            while off < n and blob[off:off + 1] not in (b"\n", b"\r"):
                off += 1
        elif c.isspace():
            off += 1
        else:
            break
    start = off
    while off < n and not blob[off:off + 1].isspace() and blob[off:off + 1] != b"#":
        off += 1
    if start == off:
        raise FormatError("PPM header ended unexpectedly")
    return blob[start:off], off


def read_ppm(path: str | Path) -> ImageRGB:
    path = Path(path)
    blob = path.read_bytes()
    try:
        magic, off = _next_token(blob, 0)
        if magic != b"P6":
            raise FormatError(f"{path}: not a P6 PPM file (magic {magic!r})")
        w_tok, off = _next_token(blob, off)
        h_tok, off = _next_token(blob, off)
        max_tok, off = _next_token(blob, off)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PPM header fields") from None
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    off += 1  # single whitespace byte after maxval
    expected = 3 * width * height
    raster = blob[off:off + expected]
    if len(raster) < expected:
        raise LengthError(f"{path}: raster holds {len(raster)} bytes, expected {expected}")
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.uint8).reshape(height, width, 3)
    return ImageRGB(width=width, height=height, pixels=pixels)


def write_ppm(img: ImageRGB, path: str | Path) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())
