"""Pruning math: global magnitude masks, the polynomial sparsity schedule,
N:M structured masks, and a multiply-accumulate FLOPs estimate.

Global magnitude masks prune an exact count, floor(target * total), choosing
the smallest magnitudes over the union of prunable tensors; ties at the cut
fall to the earlier (tensor order, flat index) position.  This keeps masks
deterministic and reproducible across platforms, unlike value-threshold
pruning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .tensorio import TensorBundle


@dataclass(frozen=True)
class SparsityMask:
    """Per-tensor keep arrays plus target and achieved global sparsity."""

    keep: tuple[tuple[str, np.ndarray], ...]  # bool arrays congruent with tensor dims
    target: float
    achieved: float

    def keep_for(self, name: str) -> np.ndarray:
        for n, arr in self.keep:
            if n == name:
                return arr
        raise ArgumentError(f"mask has no entry for tensor {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.keep)


@dataclass(frozen=True)
class ScheduleParams:
    """Polynomial pruning schedule: n steps of size dt starting at t0,
    ramping sparsity from s_i to s_f with the given exponent."""

    s_i: float
    s_f: float
    t0: int
    n: int
    dt: int
    exponent: int = 3

    def __post_init__(self) -> None:
        if not 0.0 <= self.s_i <= self.s_f <= 1.0:
            raise ArgumentError(f"need 0 <= s_i <= s_f <= 1, got {self.s_i}, {self.s_f}")
        if self.n < 1 or self.dt < 1:
            raise ArgumentError("need n >= 1 pruning steps and dt >= 1 step interval")
        if self.exponent < 1:
            raise ArgumentError("exponent must be a positive integer")


@dataclass(frozen=True)
class LayerDescriptor:
    """FLOPs-model view of one layer: weight tensor plus output positions
    (spatial H*W for conv, 1 for dense)."""

    name: str
    kind: str  # "conv" | "dense"
    output_positions: int
    weight_tensor: str

    def __post_init__(self) -> None:
        if self.kind not in ("conv", "dense"):
            raise ArgumentError(f"layer kind must be 'conv' or 'dense', got {self.kind!r}")
        if self.output_positions < 1:
            raise ArgumentError("output_positions must be positive")


def schedule_sparsity(step: int, p: ScheduleParams) -> float:
    """Target sparsity at a training step.

    The ramp is a staircase: sparsity changes only at interval boundaries,
    holding s_i before t0 and s_f from t0 + n*dt onward.
    """
    if step < p.t0:
        return p.s_i
    if step >= p.t0 + p.n * p.dt:
        return p.s_f
    q = ((step - p.t0) // p.dt) / p.n
    if q == 0.0:  # keep the start endpoint exact under float round-off
        return p.s_i
    return p.s_f + (p.s_i - p.s_f) * (1.0 - q) ** p.exponent


def global_magnitude_mask(bundle: TensorBundle, prunable: list[str], target: float) -> SparsityMask:
    """Keep mask pruning exactly floor(target * total) smallest-magnitude
    weights over the union of the named tensors."""
    if not prunable:
        raise ArgumentError("prunable tensor list is empty")
    if not 0.0 <= target <= 1.0:
        raise ArgumentError(f"target sparsity {target} outside [0, 1]")
    tensors = [(name, bundle.tensor(name)) for name in prunable]

    magnitudes = np.concatenate([np.abs(data.astype(np.float64)).ravel() for _, data in tensors])
    total = magnitudes.size
    if total == 0:
        raise ArgumentError("prunable tensors hold no weights")
    n_prune = int(target * total)

    flat_keep = np.ones(total, dtype=bool)
    if n_prune > 0:
        # stable sort: equal magnitudes keep (tensor order, flat index) order,
        # so earlier positions are pruned first
        order = np.argsort(magnitudes, kind="stable")
        flat_keep[order[:n_prune]] = False

    keep: list[tuple[str, np.ndarray]] = []
    offset = 0
    for name, data in tensors:
        size = data.size
        keep.append((name, flat_keep[offset:offset + size].reshape(data.shape)))
        offset += size
    return SparsityMask(keep=tuple(keep), target=target, achieved=n_prune / total)


def nm_mask(tensor: np.ndarray, n: int, m: int) -> np.ndarray:
    """Keep the N largest magnitudes in each contiguous group of M along the
    last dimension; ties keep the lower index."""
    if not 1 <= n <= m:
        raise ArgumentError(f"need 1 <= N <= M, got {n}:{m}")
    tensor = np.asarray(tensor)
    if tensor.ndim == 0 or tensor.shape[-1] % m != 0:
        raise ArgumentError(
            f"last dimension {tensor.shape[-1] if tensor.ndim else 0} is not divisible by M={m}"
        )
    groups = np.abs(tensor.astype(np.float64)).reshape(-1, m)
    # stable sort of negated magnitudes: descending by |w|, ties by lower index
    order = np.argsort(-groups, axis=1, kind="stable")
    keep = np.zeros(groups.shape, dtype=bool)
    np.put_along_axis(keep, order[:, :n], True, axis=1)
    return keep.reshape(tensor.shape)


def apply_mask(bundle: TensorBundle, mask: SparsityMask) -> TensorBundle:
    """Zero pruned weights; kept weights and unmasked tensors are bit-identical."""
    masked = dict(mask.keep)
    out: list[tuple[str, np.ndarray]] = []
    for name, data in bundle.tensors:
        if name in masked:
            keep = masked[name]
            if keep.shape != data.shape:
                raise ArgumentError(
                    f"mask for {name!r} has shape {keep.shape}, tensor has {data.shape}"
                )
            out.append((name, np.where(keep, data, np.float32(0.0)).astype(np.float32)))
        else:
            out.append((name, data))
    unknown = [name for name in masked if name not in bundle.names]
    if unknown:
        raise ArgumentError(f"mask names {unknown} not present in bundle")
    return TensorBundle(tensors=tuple(out))


def flops_estimate(layers: list[LayerDescriptor], bundle: TensorBundle,
                   mask: SparsityMask | None = None) -> int:
    """Inference FLOPs as 2 * kept-weight count * output positions, summed
    over layers; biases and normalization are ignored."""
    masked = dict(mask.keep) if mask is not None else {}
    total = 0
    for layer in layers:
        weights = bundle.tensor(layer.weight_tensor)  # raises on dangling reference
        if layer.weight_tensor in masked:
            nnz = int(np.count_nonzero(masked[layer.weight_tensor]))
        else:
            nnz = int(weights.size)
        total += 2 * nnz * layer.output_positions
    return total


def mask_to_bundle(mask: SparsityMask) -> TensorBundle:
    """Masks serialize as TBND bundles of 0/1 float tensors, same names as weights."""
    return TensorBundle(tensors=tuple(
        (name, keep.astype(np.float32)) for name, keep in mask.keep
    ))


def bundle_to_mask(bundle: TensorBundle, target: float) -> SparsityMask:
    keep = tuple((name, data != 0.0) for name, data in bundle.tensors)
    total = sum(arr.size for _, arr in keep)
    pruned = sum(int(arr.size - np.count_nonzero(arr)) for _, arr in keep)
    return SparsityMask(keep=keep, target=target, achieved=pruned / total if total else 0.0)
