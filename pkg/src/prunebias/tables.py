"""Label tables, prediction runs, and run manifests.

On-disk formats:

* Attribute tables are UTF-8 CSV with header ``sample_id,<attr1>,...`` and
  body cells that are literally ``0`` or ``1``.
* Prediction runs use the same header discipline with decimal real cells
  in [0, 1].  Rows and columns are aligned to the label table by
  ``sample_id`` and attribute name, never by position.
* Manifests are JSON with keys ``labels`` (split -> path), ``runs[]``
  (``run_id``, ``method``, ``sparsity``, ``seed``, ``split``,
  ``predictions_path``, optional ``nm``) and ``categories[]``.  Relative
  paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    ArgumentError,
    DataValueError,
    FormatError,
    UniquenessError,
)

SPLITS = ("train", "val", "test")
METHODS = ("dense", "gmp_ri", "gmp_pt", "nm")


@dataclass(frozen=True)
class AttributeTable:
    """Binary ground-truth labels for one split: rows are samples, columns attributes."""

    split: str
    sample_ids: tuple[str, ...]
    attributes: tuple[str, ...]
    values: np.ndarray  # uint8 matrix of {0,1}, len(sample_ids) x len(attributes)

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ArgumentError(f"unknown split {self.split!r}; expected one of {SPLITS}")
        _check_unique(self.sample_ids, "sample_id")
        _check_unique(self.attributes, "attribute")
        if self.values.shape != (len(self.sample_ids), len(self.attributes)):
            raise ArgumentError(
                f"value matrix shape {self.values.shape} does not match "
                f"{len(self.sample_ids)} samples x {len(self.attributes)} attributes"
            )
        if self.values.size and not np.isin(self.values, (0, 1)).all():
            raise DataValueError("attribute table cells must all be 0 or 1")
        self.values.setflags(write=False)

    def column(self, attribute: str) -> np.ndarray:
        return self.values[:, self.attribute_index(attribute)]

    def attribute_index(self, attribute: str) -> int:
        try:
            return self.attributes.index(attribute)
        except ValueError:
            raise ArgumentError(f"attribute {attribute!r} not in table") from None

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)


@dataclass(frozen=True)
class PredictionRun:
    """One model run's sigmoid scores, aligned to an AttributeTable's ordering."""

    run_id: str
    method: str
    sparsity: float
    seed: int
    split: str
    sample_ids: tuple[str, ...]
    attributes: tuple[str, ...]
    scores: np.ndarray  # float64 in [0,1], len(sample_ids) x len(attributes)
    nm_pattern: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ArgumentError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.split not in SPLITS:
            raise ArgumentError(f"unknown split {self.split!r}; expected one of {SPLITS}")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ArgumentError(f"sparsity {self.sparsity} outside [0, 1]")
        if (self.sparsity == 0.0) != (self.method == "dense"):
            raise ArgumentError(
                f"run {self.run_id!r}: sparsity must be 0 exactly for dense runs "
                f"and nonzero otherwise (method={self.method!r}, sparsity={self.sparsity})"
            )
        if (self.nm_pattern is not None) != (self.method == "nm"):
            raise ArgumentError(
                f"run {self.run_id!r}: nm pattern must be present iff method is 'nm'"
            )
        if self.nm_pattern is not None:
            n, m = self.nm_pattern
            if not 1 <= n <= m:
                raise ArgumentError(f"run {self.run_id!r}: nm pattern needs 1 <= N <= M, got {n}:{m}")
        if self.scores.shape != (len(self.sample_ids), len(self.attributes)):
            raise ArgumentError("score matrix shape does not match sample/attribute lists")
        if self.scores.size and (self.scores.min() < 0.0 or self.scores.max() > 1.0):
            bad = self.scores[(self.scores < 0.0) | (self.scores > 1.0)][0]
            raise DataValueError(f"score {bad!r} outside [0, 1] in run {self.run_id!r}")
        self.scores.setflags(write=False)

    def column(self, attribute: str) -> np.ndarray:
        try:
            idx = self.attributes.index(attribute)
        except ValueError:
            raise ArgumentError(f"attribute {attribute!r} not in run {self.run_id!r}") from None
        return self.scores[:, idx]


@dataclass(frozen=True)
class RunDescriptor:
    """One ``runs[]`` entry of a manifest."""

    run_id: str
    method: str
    sparsity: float
    seed: int
    split: str
    predictions_path: Path
    nm_pattern: tuple[int, int] | None = None


@dataclass(frozen=True)
class RunManifest:
    """Audit input set: label tables per split, run descriptors, identity categories."""

    labels: dict[str, Path]
    runs: tuple[RunDescriptor, ...]
    categories: tuple[str, ...]
    root: Path = field(default_factory=Path)


@dataclass(frozen=True)
class ContingencyCounts:
    """Cell counts of a binary column X against a binary identity column I."""

    n11: int
    n10: int
    n01: int
    n00: int

    def __post_init__(self) -> None:
        if min(self.n11, self.n10, self.n01, self.n00) < 0:
            raise ArgumentError("contingency counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.n11 + self.n10 + self.n01 + self.n00


def contingency(x: np.ndarray, i: np.ndarray) -> ContingencyCounts:
    """Count the four (X, I) cells over two equal-length binary columns."""
    x = np.asarray(x)
    i = np.asarray(i)
    if x.shape != i.shape or x.ndim != 1:
        raise AlignmentError(f"contingency needs two equal-length columns, got {x.shape} and {i.shape}")
    x = x.astype(bool)
    i = i.astype(bool)
    n11 = int(np.count_nonzero(x & i))
    n10 = int(np.count_nonzero(x & ~i))
    n01 = int(np.count_nonzero(~x & i))
    n00 = int(np.count_nonzero(~x & ~i))
    return ContingencyCounts(n11, n10, n01, n00)


def _check_unique(names: tuple[str, ...], what: str) -> None:
    seen: set[str] = set()
    for name in names:
        if name in seen:
            raise UniquenessError(f"duplicate {what} {name!r}")
        seen.add(name)


def _read_csv_grid(path: Path) -> tuple[list[str], list[str], list[list[str]]]:
    """Read a sample_id-keyed CSV into (attributes, sample_ids, raw cells)."""
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc})") from None

    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise FormatError(f"{path}: empty file, expected a header row")
    header = rows[0]
    if not header or header[0] != "sample_id":
        raise FormatError(f"{path}, line 1: header must start with 'sample_id'")
    attributes = header[1:]
    if not attributes:
        raise FormatError(f"{path}, line 1: header declares no attribute columns")

    sample_ids: list[str] = []
    cells: list[list[str]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(
                f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        sample_ids.append(row[0])
        cells.append(row[1:])
    return attributes, sample_ids, cells


def load_attribute_table(path: str | Path, split: str) -> AttributeTable:
    """Load and validate a binary label table, preserving file row/column order."""
    path = Path(path)
    attributes, sample_ids, cells = _read_csv_grid(path)

    seen: set[str] = set()
    for lineno, sid in enumerate(sample_ids, start=2):
        if sid in seen:
            raise UniquenessError(f"{path}, line {lineno}: duplicate sample_id {sid!r}")
        seen.add(sid)

    values = np.zeros((len(sample_ids), len(attributes)), dtype=np.uint8)
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            if cell == "0":
                continue
            if cell == "1":
                values[r, c] = 1
            else:
                raise DataValueError(
                    f"{path}, line {r + 2}, column {attributes[c]!r}: "
                    f"cell {cell!r} is not 0 or 1"
                )
    return AttributeTable(split=split, sample_ids=tuple(sample_ids),
                          attributes=tuple(attributes), values=values)


def load_prediction_run(path: str | Path, descriptor: RunDescriptor,
                        labels: AttributeTable) -> PredictionRun:
    """Load a score CSV and align it by (sample_id, attribute name) to ``labels``.

    Row and column order in the file is irrelevant; the returned matrix follows
    the label table's ordering exactly.
    """
    path = Path(path)
    if descriptor.split != labels.split:
        raise ArgumentError(
            f"run {descriptor.run_id!r} declares split {descriptor.split!r} but labels "
            f"are for {labels.split!r}"
        )
    attributes, sample_ids, cells = _read_csv_grid(path)
    _check_unique(tuple(sample_ids), "sample_id")
    _check_unique(tuple(attributes), "attribute")

    raw = np.empty((len(sample_ids), len(attributes)), dtype=np.float64)
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            try:
                score = float(cell)
            except ValueError:
                raise DataValueError(
                    f"{path}, line {r + 2}, column {attributes[c]!r}: "
                    f"cell {cell!r} is not a decimal score"
                ) from None
            if not 0.0 <= score <= 1.0:
                raise DataValueError(
                    f"{path}, line {r + 2}, column {attributes[c]!r}: "
                    f"score {cell} outside [0, 1]"
                )
            raw[r, c] = score

    row_of = {sid: r for r, sid in enumerate(sample_ids)}
    missing = [sid for sid in labels.sample_ids if sid not in row_of]
    if missing:
        raise AlignmentError(
            f"{path}: run is missing {len(missing)} labeled sample(s): "
            + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    unknown = sorted(set(sample_ids) - set(labels.sample_ids))
    if unknown:
        raise AlignmentError(
            f"{path}: run contains {len(unknown)} sample(s) absent from the label table: "
            + ", ".join(unknown[:10])
            + ("..." if len(unknown) > 10 else "")
        )

    col_of = {name: c for c, name in enumerate(attributes)}
    missing_attrs = [a for a in labels.attributes if a not in col_of]
    if missing_attrs:
        raise AlignmentError(f"{path}: run is missing attribute column(s): {missing_attrs}")
    extra_attrs = sorted(set(attributes) - set(labels.attributes))
    if extra_attrs:
        raise AlignmentError(f"{path}: run has attribute column(s) absent from labels: {extra_attrs}")

    row_order = np.array([row_of[sid] for sid in labels.sample_ids])
    col_order = np.array([col_of[a] for a in labels.attributes])
    scores = np.ascontiguousarray(raw[np.ix_(row_order, col_order)])

    return PredictionRun(
        run_id=descriptor.run_id,
        method=descriptor.method,
        sparsity=descriptor.sparsity,
        seed=descriptor.seed,
        split=descriptor.split,
        sample_ids=labels.sample_ids,
        attributes=labels.attributes,
        scores=scores,
        nm_pattern=descriptor.nm_pattern,
    )


def write_attribute_table(table: AttributeTable, path: str | Path) -> None:
    _write_grid(path, table.attributes, table.sample_ids,
                (("1" if v else "0" for v in row) for row in table.values))


def write_prediction_scores(sample_ids: tuple[str, ...], attributes: tuple[str, ...],
                            scores: np.ndarray, path: str | Path) -> None:
    """Write a score matrix in the prediction CSV format with full float precision."""
    _write_grid(path, attributes, sample_ids,
                ((repr(float(v)) for v in row) for row in scores))


def _write_grid(path: str | Path, attributes, sample_ids, rows) -> None:
    lines = ["sample_id," + ",".join(attributes)]
    for sid, row in zip(sample_ids, rows):
        lines.append(sid + "," + ",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_nm(value) -> tuple[int, int]:
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 2:
            raise FormatError(f"nm pattern {value!r} must look like 'N:M'")
        try:
            return int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"nm pattern {value!r} must hold two integers") from None
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return int(value[0]), int(value[1])
    raise FormatError(f"nm pattern {value!r} must be 'N:M' or [N, M]")


def load_manifest(path: str | Path) -> RunManifest:
    """Load and validate a JSON run manifest; referenced files must exist."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")
    for key in ("labels", "runs", "categories"):
        if key not in doc:
            raise FormatError(f"{path}: manifest is missing key {key!r}")

    root = path.parent
    labels: dict[str, Path] = {}
    for split, rel in doc["labels"].items():
        if split not in SPLITS:
            raise FormatError(f"{path}: unknown split {split!r} in labels")
        p = root / rel
        if not p.exists():
            raise FormatError(f"{path}: labels file {p} does not exist")
        labels[split] = p

    runs: list[RunDescriptor] = []
    seen_ids: set[str] = set()
    for entry in doc["runs"]:
        for key in ("run_id", "method", "sparsity", "seed", "split", "predictions_path"):
            if key not in entry:
                raise FormatError(f"{path}: run entry is missing key {key!r}")
        run_id = str(entry["run_id"])
        if run_id in seen_ids:
            raise UniquenessError(f"{path}: duplicate run_id {run_id!r}")
        seen_ids.add(run_id)
        pred_path = root / entry["predictions_path"]
        if not pred_path.exists():
            raise FormatError(f"{path}: predictions file {pred_path} does not exist")
        if entry["split"] not in labels:
            raise FormatError(
                f"{path}: run {run_id!r} uses split {entry['split']!r} "
                f"with no labels file in the manifest"
            )
        runs.append(RunDescriptor(
            run_id=run_id,
            method=str(entry["method"]),
            sparsity=float(entry["sparsity"]),
            seed=int(entry["seed"]),
            split=str(entry["split"]),
            predictions_path=pred_path,
            nm_pattern=_parse_nm(entry["nm"]) if "nm" in entry and entry["nm"] is not None else None,
        ))

    categories = tuple(str(c) for c in doc["categories"])
    for split, labels_path in labels.items():
        header = labels_path.read_text(encoding="utf-8").splitlines()[0:1]
        attrs = set(next(csv.reader(header), [])[1:]) if header else set()
        missing_cats = [c for c in categories if c not in attrs]
        if missing_cats:
            raise FormatError(
                f"{path}: categories {missing_cats} are not attributes of the "
                f"{split!r} labels file {labels_path}"
            )
    return RunManifest(labels=labels, runs=tuple(runs), categories=categories, root=root)
