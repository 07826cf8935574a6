"""Category bias engine: correlation direction, eligibility, bias, and
bias amplification per (attribute, identity-category) pair.

The bias of a binary attribute with respect to a binary identity column is
the identity-conditional share of the attribute's positive value, with the
numerator picked by the training-data correlation direction.  Bias
amplification is the predicted-label bias minus the true-label bias on the
evaluation split.  Pairs are skipped when the training correlation is not
significant or when any predicted/identity cell on the evaluation split is
too sparse to trust.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError
from .metrics import DEFAULT_THRESHOLD
from .tables import AttributeTable, ContingencyCounts, PredictionRun, contingency

# Chi-square critical value at p < 0.05 with one degree of freedom.
CHI2_CRITICAL_P05 = 3.841
# Minimum count for every (predicted, identity) cell on the evaluation split.
MIN_CELL_COUNT = 10

REASON_OK = "ok"
REASON_NO_CORRELATION = "no_significant_correlation"
REASON_SPARSE_CELL = "sparse_cell"


@dataclass(frozen=True)
class CorrelationSign:
    """Direction and significance of a binary-binary association."""

    sign: str  # "positive" | "negative" | "none"
    phi: float
    significant: bool


@dataclass(frozen=True)
class BAResult:
    """Bias amplification verdict for one (attribute, category) pair."""

    attribute: str
    category: str
    eligible: bool
    reason: str
    direction: CorrelationSign
    b_pred: float | None = None
    b_true: float | None = None
    ba: float | None = None


def correlation_sign(train_counts: ContingencyCounts,
                     chi2_critical: float = CHI2_CRITICAL_P05) -> CorrelationSign:
    """Phi coefficient of the training contingency table plus a chi-square
    significance verdict; any zero marginal makes the association undefined
    and hence not significant."""
    n = train_counts.total
    if n <= 0:
        raise ArgumentError("correlation_sign needs a nonempty contingency table")
    n11, n10, n01, n00 = train_counts.n11, train_counts.n10, train_counts.n01, train_counts.n00
    row1 = n11 + n10
    row0 = n01 + n00
    col1 = n11 + n01
    col0 = n10 + n00
    denom_sq = float(row1) * row0 * col1 * col0
    if denom_sq == 0.0:
        return CorrelationSign(sign="none", phi=0.0, significant=False)
    phi = (float(n11) * n00 - float(n10) * n01) / np.sqrt(denom_sq)
    if not n * phi * phi > chi2_critical:  # phi == 0 is never significant
        return CorrelationSign(sign="none", phi=float(phi), significant=False)
    return CorrelationSign(sign="positive" if phi > 0 else "negative", phi=float(phi), significant=True)


def bias(counts: ContingencyCounts, direction: CorrelationSign) -> float:
    """Identity-conditional share of the attribute's positive value, with the
    identity value picked by the correlation direction."""
    if direction.sign == "none":
        raise ArgumentError("bias is undefined without a correlation direction")
    denom = counts.n11 + counts.n10
    if denom == 0:
        raise DegenerateInputError("bias denominator N(X=1) is zero")
    numer = counts.n11 if direction.sign == "positive" else counts.n10
    return numer / denom


def _ba_from_columns(train_attr: np.ndarray, train_ident: np.ndarray,
                     test_attr: np.ndarray, test_ident: np.ndarray,
                     test_pred: np.ndarray, attribute: str, category: str) -> BAResult:
    direction = correlation_sign(contingency(train_attr, train_ident))
    if direction.sign == "none":
        return BAResult(attribute=attribute, category=category, eligible=False,
                        reason=REASON_NO_CORRELATION, direction=direction)

    pred_counts = contingency(test_pred, test_ident)
    cells = (pred_counts.n11, pred_counts.n10, pred_counts.n01, pred_counts.n00)
    if min(cells) < MIN_CELL_COUNT:
        return BAResult(attribute=attribute, category=category, eligible=False,
                        reason=REASON_SPARSE_CELL, direction=direction)

    true_counts = contingency(test_attr, test_ident)
    b_pred = bias(pred_counts, direction)
    b_true = bias(true_counts, direction)
    return BAResult(attribute=attribute, category=category, eligible=True,
                    reason=REASON_OK, direction=direction,
                    b_pred=b_pred, b_true=b_true, ba=b_pred - b_true)


def bias_amplification(train: AttributeTable, test: AttributeTable, run: PredictionRun,
                       attribute: str, category: str,
                       threshold: float = DEFAULT_THRESHOLD) -> BAResult:
    """Bias amplification of ``run``'s thresholded predictions for one
    attribute against one identity category.

    The correlation direction comes from the training ground truth so that
    dense and sparse runs over the same data are judged on the same branch.
    """
    if attribute == category:
        raise ArgumentError("attribute and category must differ")
    predicted = (run.column(attribute) >= threshold).astype(np.uint8)
    return _ba_from_columns(
        train.column(attribute), train.column(category),
        test.column(attribute), test.column(category),
        predicted, attribute, category,
    )


def bias_amplification_from_labels(train: AttributeTable, test: AttributeTable,
                                   predicted: np.ndarray, attribute: str,
                                   category: str) -> BAResult:
    """Same verdict as :func:`bias_amplification` but over an already
    thresholded binary prediction column (used to score mitigation outputs)."""
    if attribute == category:
        raise ArgumentError("attribute and category must differ")
    return _ba_from_columns(
        train.column(attribute), train.column(category),
        test.column(attribute), test.column(category),
        np.asarray(predicted).astype(np.uint8), attribute, category,
    )


def ba_with_backdoor_identity(run: PredictionRun, test: AttributeTable,
                              test_flags: np.ndarray, attribute: str,
                              train_labels: np.ndarray, train_flags: np.ndarray,
                              threshold: float = DEFAULT_THRESHOLD) -> BAResult:
    """Bias amplification with the backdoor flag standing in for the identity
    column; the direction is computed on the backdoored training assignment."""
    test_flags = np.asarray(test_flags)
    if test_flags.shape != (test.n_samples,):
        raise ArgumentError("backdoor flags must align with the test split")
    train_labels = np.asarray(train_labels)
    train_flags = np.asarray(train_flags)
    if train_labels.shape != train_flags.shape:
        raise ArgumentError("training labels and flags must align")
    predicted = (run.column(attribute) >= threshold).astype(np.uint8)
    return _ba_from_columns(
        train_labels, train_flags,
        test.column(attribute), test_flags,
        predicted, attribute, category="backdoor",
    )


def worst_case_ba(results: list[BAResult]) -> float | None:
    """Maximum bias amplification over the eligible results, or None if none are."""
    eligible = [r.ba for r in results if r.eligible and r.ba is not None]
    if not eligible:
        return None
    return max(eligible)
