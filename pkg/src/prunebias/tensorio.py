"""TBND: a minimal little-endian binary container for named float32 tensors.

Layout (all integers little-endian):

    magic   4 bytes  b"TBND"
    version u32      1
    count   u32      number of tensors
    per tensor:
        name_len u16
        name     UTF-8 bytes
        dtype    u8   (0 = float32; the only defined code)
        ndim     u8
        dims     u64 * ndim
        data     float32 * prod(dims), row-major

Write then read is the identity on bundles; read then write reproduces the
file byte for byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError, LengthError, UniquenessError

MAGIC = b"TBND"
VERSION = 1
DTYPE_F32 = 0


@dataclass(frozen=True)
class TensorBundle:
    """Ordered collection of named row-major float32 tensors."""

    tensors: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for name, data in self.tensors:
            if name in seen:
                raise UniquenessError(f"duplicate tensor name {name!r}")
            seen.add(name)
            if data.dtype != np.float32:
                raise ArgumentError(f"tensor {name!r} must be float32, got {data.dtype}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.tensors)

    def tensor(self, name: str) -> np.ndarray:
        for n, data in self.tensors:
            if n == name:
                return data
        raise ArgumentError(f"no tensor named {name!r} in bundle")

    def total_elements(self) -> int:
        return sum(int(data.size) for _, data in self.tensors)


def read_tensor_bundle(path: str | Path) -> TensorBundle:
    path = Path(path)
    blob = path.read_bytes()
    off = 0

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise LengthError(f"{path}: truncated while reading {what}")
        chunk = blob[off:off + n]
        off += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise FormatError(f"{path}: bad magic, not a TBND file")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported TBND version {version}")
    (count,) = struct.unpack("<I", take(4, "tensor count"))

    tensors: list[tuple[str, np.ndarray]] = []
    for t in range(count):
        (name_len,) = struct.unpack("<H", take(2, f"tensor {t} name length"))
        name = take(name_len, f"tensor {t} name").decode("utf-8")
        (dtype,) = struct.unpack("<B", take(1, f"tensor {name!r} dtype"))
        if dtype != DTYPE_F32:
            raise FormatError(f"{path}: tensor {name!r} has unknown dtype code {dtype}")
        (ndim,) = struct.unpack("<B", take(1, f"tensor {name!r} ndim"))
        dims = struct.unpack(f"<{ndim}Q", take(8 * ndim, f"tensor {name!r} dims"))
        n_elem = 1
        for d in dims:
            n_elem *= d
        raw = take(4 * n_elem, f"tensor {name!r} data")
        data = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
        tensors.append((name, data))

    if off != len(blob):
        raise LengthError(f"{path}: {len(blob) - off} trailing byte(s) after last tensor")
    return TensorBundle(tensors=tuple(tensors))


def write_tensor_bundle(bundle: TensorBundle, path: str | Path) -> None:
    parts: list[bytes] = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(bundle.tensors))]
    for name, data in bundle.tensors:
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ArgumentError(f"tensor name {name!r} exceeds 65535 encoded bytes")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BB", DTYPE_F32, data.ndim))
        parts.append(struct.pack(f"<{data.ndim}Q", *data.shape))
        parts.append(np.ascontiguousarray(data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))
