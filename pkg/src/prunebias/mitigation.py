"""Bias mitigation: validation-split threshold calibration and
uncertainty-prioritized prediction overrides.

Calibration picks, per attribute, the rank k = round(base_rate * n) on the
validation split and realizes it as the k-th largest validation score; the
classification rule is ``score >= cut`` with all ties at the cut included.
Overrides replace a sparse run's hard labels for the most-uncertain samples
(judged by a dense model) with either the true label or the dense label,
only for attributes where the dense model already shows positive bias
amplification.  Calibration never sees identity-category columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bias import BAResult, bias_amplification_from_labels
from .errors import ArgumentError, EmptyInputError, FormatError
from .tables import AttributeTable, PredictionRun

# Cut score used when calibration selects zero positives: above any legal score.
SENTINEL_CUT = 2.0


@dataclass(frozen=True)
class ThresholdMap:
    """Per attribute: positive-count rank k and the realized cut score."""

    entries: dict[str, tuple[int, float]]  # attribute -> (k, cut)

    def cut(self, attribute: str) -> float:
        if attribute not in self.entries:
            raise ArgumentError(f"no calibrated threshold for attribute {attribute!r}")
        return self.entries[attribute][1]


@dataclass(frozen=True)
class OverridePlan:
    """Override schedule: label source, override fraction, and per attribute
    an eligibility flag plus the sample order (most uncertain first)."""

    source: str  # "truth" | "dense"
    fraction: float
    eligible: dict[str, bool]
    order: dict[str, np.ndarray]  # attribute -> permutation of sample indices

    def __post_init__(self) -> None:
        if self.source not in ("truth", "dense"):
            raise ArgumentError(f"override source must be 'truth' or 'dense', got {self.source!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ArgumentError(f"override fraction {self.fraction} outside [0, 1]")


def calibrate_threshold(val_scores, val_labels) -> tuple[int, float]:
    """Pick (k, cut) so the validation split predicts its own base rate.

    k = round(base_rate * n) equals the positive label count up to float
    noise; the cut is the k-th largest validation score, or a sentinel above
    1.0 when k = 0.
    """
    val_scores = np.asarray(val_scores, dtype=np.float64)
    val_labels = np.asarray(val_labels)
    if val_scores.shape != val_labels.shape or val_scores.ndim != 1:
        raise ArgumentError("validation scores and labels must be equal-length columns")
    n = val_scores.size
    if n == 0:
        raise EmptyInputError("cannot calibrate on an empty validation split")
    base_rate = float(val_labels.astype(np.float64).mean())
    k = int(round(base_rate * n))
    if k == 0:
        return 0, SENTINEL_CUT
    cut = float(np.sort(val_scores)[n - k])
    return k, cut


def calibrate_thresholds(val_run: PredictionRun, val_labels: AttributeTable) -> ThresholdMap:
    """Calibrate every attribute of a validation run against its label table."""
    if val_run.sample_ids != val_labels.sample_ids or val_run.attributes != val_labels.attributes:
        raise ArgumentError("validation run and labels cover different samples/attributes")
    entries = {
        attr: calibrate_threshold(val_run.column(attr), val_labels.column(attr))
        for attr in val_run.attributes
    }
    return ThresholdMap(entries=entries)


def apply_thresholds(run: PredictionRun, thresholds: ThresholdMap) -> np.ndarray:
    """Hard labels per attribute via each attribute's calibrated cut."""
    columns = [
        (run.column(attr) >= thresholds.cut(attr)).astype(np.uint8)
        for attr in run.attributes
    ]
    return np.column_stack(columns)


def rank_by_uncertainty(dense_scores) -> np.ndarray:
    """Sample indices ascending by distance from 0.5, ties by index."""
    dense_scores = np.asarray(dense_scores, dtype=np.float64)
    if dense_scores.size == 0:
        raise EmptyInputError("cannot rank an empty score column")
    return np.argsort(np.abs(dense_scores - 0.5), kind="stable")


def override_eligibility(dense_results: list[BAResult]) -> dict[str, bool]:
    """Attributes whose dense bias amplification is eligible and positive."""
    return {
        r.attribute: bool(r.eligible and r.ba is not None and r.ba > 0)
        for r in dense_results
    }


def make_override_plan(dense_run: PredictionRun, source: str, fraction: float,
                       eligible: dict[str, bool]) -> OverridePlan:
    """Build an override plan from a dense run's per-attribute uncertainty order."""
    missing = [a for a in dense_run.attributes if a not in eligible]
    if missing:
        raise ArgumentError(f"eligibility is missing attribute(s): {missing}")
    order = {
        attr: rank_by_uncertainty(dense_run.column(attr))
        for attr in dense_run.attributes
    }
    return OverridePlan(source=source, fraction=fraction,
                        eligible=dict(eligible), order=order)


def apply_overrides(sparse_labels: np.ndarray, plan: OverridePlan,
                    truth: AttributeTable, dense_labels: np.ndarray) -> np.ndarray:
    """Replace the first floor(fraction * n) labels in uncertainty order with
    the source label, per eligible attribute; inputs are never mutated."""
    sparse_labels = np.asarray(sparse_labels)
    dense_labels = np.asarray(dense_labels)
    expected = (truth.n_samples, len(truth.attributes))
    if sparse_labels.shape != expected or dense_labels.shape != expected:
        raise ArgumentError(
            f"label matrices must have shape {expected}, got "
            f"{sparse_labels.shape} and {dense_labels.shape}"
        )
    out = sparse_labels.copy()
    count = int(plan.fraction * truth.n_samples)
    source_matrix = truth.values if plan.source == "truth" else dense_labels
    for col, attr in enumerate(truth.attributes):
        if not plan.eligible.get(attr, False):
            continue
        if attr not in plan.order:
            raise ArgumentError(f"override plan has no sample order for attribute {attr!r}")
        rows = plan.order[attr][:count]
        out[rows, col] = source_matrix[rows, col]
    return out


def evaluate_mitigation(before: np.ndarray, after: np.ndarray, test: AttributeTable,
                        categories: list[str], train: AttributeTable,
                        ) -> tuple[list[BAResult], list[BAResult]]:
    """Bias amplification per (attribute, category) for two hard-label
    matrices, with identical direction and eligibility computation."""
    results_before: list[BAResult] = []
    results_after: list[BAResult] = []
    for col, attr in enumerate(test.attributes):
        for cat in categories:
            if attr == cat:
                continue
            results_before.append(
                bias_amplification_from_labels(train, test, np.asarray(before)[:, col], attr, cat))
            results_after.append(
                bias_amplification_from_labels(train, test, np.asarray(after)[:, col], attr, cat))
    return results_before, results_after


def threshold_map_to_json(thresholds: ThresholdMap, path: str | Path) -> None:
    doc = {attr: {"k": k, "cut": cut} for attr, (k, cut) in sorted(thresholds.entries.items())}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def threshold_map_from_json(path: str | Path) -> ThresholdMap:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    entries = {attr: (int(entry["k"]), float(entry["cut"])) for attr, entry in doc.items()}
    return ThresholdMap(entries=entries)


def override_plan_to_json(plan: OverridePlan, path: str | Path) -> None:
    doc = {
        "source": plan.source,
        "fraction": plan.fraction,
        "eligible": dict(sorted(plan.eligible.items())),
        "order": {attr: [int(i) for i in idx] for attr, idx in sorted(plan.order.items())},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def override_plan_from_json(path: str | Path) -> OverridePlan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    return OverridePlan(
        source=doc["source"],
        fraction=float(doc["fraction"]),
        eligible={k: bool(v) for k, v in doc["eligible"].items()},
        order={k: np.asarray(v, dtype=np.int64) for k, v in doc["order"].items()},
    )
