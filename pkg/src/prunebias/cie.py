"""Compression-identified exemplars: test samples whose majority-vote dense
label across seeds disagrees with the majority-vote sparse label."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, EmptyInputError
from .metrics import DEFAULT_THRESHOLD
from .tables import PredictionRun


@dataclass(frozen=True)
class CIESet:
    sparsity: float
    pairs: frozenset[tuple[str, str]]  # (sample_id, attribute)
    dense_run_ids: tuple[str, ...]
    sparse_run_ids: tuple[str, ...]


def _check_same_grid(runs: list[PredictionRun]) -> None:
    first = runs[0]
    for run in runs[1:]:
        if run.split != first.split:
            raise ArgumentError(
                f"runs {first.run_id!r} and {run.run_id!r} are on different splits"
            )
        if run.sample_ids != first.sample_ids or run.attributes != first.attributes:
            raise ArgumentError(
                f"runs {first.run_id!r} and {run.run_id!r} cover different samples/attributes"
            )


def _modal_matrix(runs: list[PredictionRun], threshold: float) -> np.ndarray:
    """Majority vote of thresholded labels per cell; even-count ties go to 1."""
    votes = np.zeros(runs[0].scores.shape, dtype=np.int64)
    for run in runs:
        votes += run.scores >= threshold
    return (2 * votes >= len(runs)).astype(np.uint8)


def modal_label(runs: list[PredictionRun], sample_id: str, attribute: str,
                threshold: float = DEFAULT_THRESHOLD) -> int:
    """Majority of thresholded labels across runs for one cell; ties resolve to 1."""
    if not runs:
        raise EmptyInputError("modal label over zero runs is undefined")
    _check_same_grid(runs)
    try:
        row = runs[0].sample_ids.index(sample_id)
    except ValueError:
        raise ArgumentError(f"sample {sample_id!r} not in runs") from None
    col = runs[0].attributes.index(attribute) if attribute in runs[0].attributes else None
    if col is None:
        raise ArgumentError(f"attribute {attribute!r} not in runs")
    return int(_modal_matrix(runs, threshold)[row, col])


def find_cies(dense_runs: list[PredictionRun], sparse_runs: list[PredictionRun],
              threshold: float = DEFAULT_THRESHOLD) -> CIESet:
    """All (sample, attribute) cells whose modal dense and modal sparse labels differ."""
    if not dense_runs or not sparse_runs:
        raise EmptyInputError("find_cies needs at least one run on each side")
    _check_same_grid(dense_runs + sparse_runs)
    sparsities = {run.sparsity for run in sparse_runs}
    if len(sparsities) > 1:
        raise ArgumentError(f"sparse runs mix sparsity levels {sorted(sparsities)}")

    dense_modal = _modal_matrix(dense_runs, threshold)
    sparse_modal = _modal_matrix(sparse_runs, threshold)
    rows, cols = np.nonzero(dense_modal != sparse_modal)
    template = dense_runs[0]
    pairs = frozenset(
        (template.sample_ids[r], template.attributes[c]) for r, c in zip(rows, cols)
    )
    return CIESet(
        sparsity=sparse_runs[0].sparsity,
        pairs=pairs,
        dense_run_ids=tuple(run.run_id for run in dense_runs),
        sparse_run_ids=tuple(run.run_id for run in sparse_runs),
    )


def cie_uncertainty_enrichment(cies: CIESet, dense_runs: list[PredictionRun],
                               low: float = 0.1, high: float = 0.9) -> tuple[float | None, float]:
    """Fraction of CIE cells vs all cells whose mean dense score is uncertain.

    Uncertainty of a cell is judged on the mean dense score across runs,
    strictly inside (low, high).
    """
    if not dense_runs:
        raise EmptyInputError("enrichment needs at least one dense run")
    _check_same_grid(dense_runs)
    template = dense_runs[0]
    mean_scores = np.mean([run.scores for run in dense_runs], axis=0)
    uncertain = (mean_scores > low) & (mean_scores < high)
    overall = float(uncertain.mean())

    if not cies.pairs:
        return None, overall
    row_of = {sid: r for r, sid in enumerate(template.sample_ids)}
    col_of = {a: c for c, a in enumerate(template.attributes)}
    hits = 0
    for sample_id, attribute in cies.pairs:
        if sample_id not in row_of or attribute not in col_of:
            raise ArgumentError(f"CIE pair ({sample_id!r}, {attribute!r}) not in dense runs")
        hits += bool(uncertain[row_of[sample_id], col_of[attribute]])
    return hits / len(cies.pairs), overall


def write_cie_csv(cies: CIESet, path: str | Path) -> None:
    """Serialize a CIE set as `sample_id,attribute` rows, sorted for determinism."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "attribute"])
        for sample_id, attribute in sorted(cies.pairs):
            writer.writerow([sample_id, attribute])
