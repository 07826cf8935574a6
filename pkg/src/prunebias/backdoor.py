"""Backdoor data preparation: trigger transforms (grayscale, yellow square)
and deterministic backdoor-assignment splits.

Assignments shuffle each label class with a counter-based SplitMix64 hash of
(seed, index), so the same seed reproduces the same flags bit for bit in any
implementation of the format; the constants are documented in
docs/FORMATS.md.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError
from .ppm import ImageRGB

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class BackdoorAssignment:
    """Backdoor flags for one split plus the fractions and seed that made them."""

    split: str
    flags: np.ndarray  # uint8 column aligned to the split's sample order
    pos_fraction: float
    neg_fraction: float
    seed: int


def splitmix64(seed: int, index: int) -> int:
    """64-bit mix of (seed, index); the shuffle key for assignment permutations."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _seeded_permutation(indices: np.ndarray, seed: int) -> np.ndarray:
    """Order indices by their SplitMix64 key (ties, if any, by index)."""
    keys = [(splitmix64(seed, int(i)), int(i)) for i in indices]
    keys.sort()
    return np.array([i for _, i in keys], dtype=np.int64)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def grayscale(img: ImageRGB) -> ImageRGB:
    """Replace every pixel with its BT.601 luma, rounded half up."""
    rgb = img.pixels.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    gray = np.floor(luma + 0.5).astype(np.uint8)
    return ImageRGB(width=img.width, height=img.height,
                    pixels=np.repeat(gray[:, :, np.newaxis], 3, axis=2))


def yellow_square(img: ImageRGB, size: int = 20, offset: tuple[int, int] = (5, 5),
                  color: tuple[int, int, int] = (255, 255, 0)) -> ImageRGB:
    """Stamp a size x size square of the trigger color at (x, y) offset."""
    x, y = offset
    if size < 0:
        raise ArgumentError("square size must be nonnegative")
    if x < 0 or y < 0 or x + size > img.width or y + size > img.height:
        raise ArgumentError(
            f"square of size {size} at offset ({x}, {y}) exceeds {img.width}x{img.height} image"
        )
    pixels = img.pixels.copy()
    pixels[y:y + size, x:x + size] = np.array(color, dtype=np.uint8)
    return ImageRGB(width=img.width, height=img.height, pixels=pixels)


def assign_backdoor(labels, pos_fraction: float, neg_fraction: float, seed: int,
                    split: str = "train") -> BackdoorAssignment:
    """Flag round(fraction * class size) samples per label class, chosen by a
    seeded deterministic permutation within each class."""
    if not 0.0 <= pos_fraction <= 1.0 or not 0.0 <= neg_fraction <= 1.0:
        raise ArgumentError("backdoor fractions must lie in [0, 1]")
    labels = np.asarray(labels).astype(bool)
    flags = np.zeros(labels.size, dtype=np.uint8)
    for value, fraction in ((True, pos_fraction), (False, neg_fraction)):
        class_indices = np.nonzero(labels == value)[0]
        count = _round_half_up(fraction * class_indices.size)
        chosen = _seeded_permutation(class_indices, seed)[:count]
        flags[chosen] = 1
    return BackdoorAssignment(split=split, flags=flags, pos_fraction=pos_fraction,
                              neg_fraction=neg_fraction, seed=seed)


def assign_even_test(sample_count: int, seed: int) -> np.ndarray:
    """Flag exactly floor(n/2) of n samples, seeded-deterministically."""
    if sample_count < 0:
        raise ArgumentError("sample count must be nonnegative")
    flags = np.zeros(sample_count, dtype=np.uint8)
    chosen = _seeded_permutation(np.arange(sample_count), seed)[:sample_count // 2]
    flags[chosen] = 1
    return flags


def write_assignment_csv(sample_ids, flags: np.ndarray, path: str | Path) -> None:
    """Serialize flags as `sample_id,flag` rows in sample order."""
    if len(sample_ids) != len(flags):
        raise ArgumentError("sample ids and flags must align")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "flag"])
        for sid, flag in zip(sample_ids, flags):
            writer.writerow([sid, int(flag)])


def read_assignment_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    path = Path(path)
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    if not rows or rows[0] != ["sample_id", "flag"]:
        raise FormatError(f"{path}: expected header 'sample_id,flag'")
    sample_ids: list[str] = []
    flags: list[int] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2 or row[1] not in ("0", "1"):
            raise FormatError(f"{path}, line {lineno}: expected 'sample_id,0|1'")
        sample_ids.append(row[0])
        flags.append(int(row[1]))
    return tuple(sample_ids), np.array(flags, dtype=np.uint8)
