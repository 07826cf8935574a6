"""Per-attribute scalar metrics over one prediction run.

Binary-attribute metrics (accuracy, AUC, ECE, uncertainty fraction, threshold
calibration bias) operate on one score column against one binary label column.
Multiclass macro metrics (precision/recall/F1 and class-balanced softmax
entropy) operate on a logit matrix with integer labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError, EmptyInputError

DEFAULT_THRESHOLD = 0.5

# Ten equal-width buckets over [0, 1]. A score equal to an interior edge
# belongs to the higher bucket; 1.0 belongs to the top bucket.
BUCKET_EDGES = np.array([i / 10 for i in range(11)])


@dataclass(frozen=True)
class CalibrationBuckets:
    """Reliability-diagram data: per-bucket count, mean score, and positive rate."""

    edges: np.ndarray        # 11 edges
    counts: np.ndarray       # 10 ints, summing to the sample count
    mean_score: np.ndarray   # 10 floats, NaN where the bucket is empty
    positive_rate: np.ndarray  # 10 floats, NaN where the bucket is empty


@dataclass(frozen=True)
class MulticlassRun:
    """Logit matrix with integer ground-truth labels for K classes."""

    sample_ids: tuple[str, ...]
    n_classes: int
    logits: np.ndarray  # (n_samples, n_classes)
    labels: np.ndarray  # ints in [0, n_classes)

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ArgumentError("multiclass run needs at least 2 classes")
        n = len(self.sample_ids)
        if self.logits.shape != (n, self.n_classes):
            raise ArgumentError(
                f"logits shape {self.logits.shape} does not match "
                f"{n} samples x {self.n_classes} classes"
            )
        if self.labels.shape != (n,):
            raise ArgumentError("labels must be one integer per sample")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ArgumentError(f"labels must lie in [0, {self.n_classes})")


def _columns(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ArgumentError(f"scores and labels must be equal-length columns, got {scores.shape} and {labels.shape}")
    return scores, labels.astype(bool)


def accuracy(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Fraction of samples where (score >= threshold) equals the label."""
    scores, labels = _columns(scores, labels)
    if scores.size == 0:
        raise EmptyInputError("accuracy of an empty column is undefined")
    if not 0.0 <= threshold <= 1.0:
        raise ArgumentError(f"threshold {threshold} outside [0, 1]")
    return float(np.mean((scores >= threshold) == labels))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their run."""
    sorter = np.argsort(values, kind="mergesort")
    ordered = values[sorter]
    run_starts = np.r_[True, ordered[1:] != ordered[:-1]]
    group = np.cumsum(run_starts) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    avg = ends - (counts - 1) / 2.0  # mean of [end-count+1 .. end]
    ranks = np.empty(values.size, dtype=np.float64)
    ranks[sorter] = avg[group]
    return ranks


def auc(scores, labels) -> float:
    """Rank-based ROC AUC: P(score_pos > score_neg) + half the tie probability."""
    scores, labels = _columns(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("AUC needs at least one positive and one negative label")
    ranks = _average_ranks(scores)
    pos_rank_sum = float(ranks[labels].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def bucket_indices(scores: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(BUCKET_EDGES, scores, side="right") - 1
    return np.minimum(idx, 9)


def calibration_buckets(scores, labels) -> CalibrationBuckets:
    """Bucket scores into ten equal-width bins with per-bucket confidence and positive rate."""
    scores, labels = _columns(scores, labels)
    if scores.size == 0:
        raise EmptyInputError("calibration of an empty column is undefined")
    idx = bucket_indices(scores)
    counts = np.bincount(idx, minlength=10)
    score_sums = np.bincount(idx, weights=scores, minlength=10)
    pos_sums = np.bincount(idx, weights=labels.astype(np.float64), minlength=10)
    with np.errstate(invalid="ignore"):
        mean_score = np.where(counts > 0, score_sums / np.maximum(counts, 1), np.nan)
        positive_rate = np.where(counts > 0, pos_sums / np.maximum(counts, 1), np.nan)
    return CalibrationBuckets(edges=BUCKET_EDGES.copy(), counts=counts,
                              mean_score=mean_score, positive_rate=positive_rate)


def ece(scores, labels) -> float:
    """Expected calibration error over ten equal-width buckets.

    Per nonempty bucket, confidence is the mean score and accuracy the
    empirical positive-label rate; buckets are weighted by size and empty
    buckets contribute nothing.
    """
    buckets = calibration_buckets(scores, labels)
    n = int(buckets.counts.sum())
    nonempty = buckets.counts > 0
    gaps = np.abs(buckets.positive_rate[nonempty] - buckets.mean_score[nonempty])
    return float(np.sum(buckets.counts[nonempty] / n * gaps))


def uncertainty_fraction(scores, low: float = 0.1, high: float = 0.9) -> float:
    """Fraction of scores strictly inside (low, high); boundary values count as certain."""
    if not low < high:
        raise ArgumentError(f"need low < high, got {low} and {high}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyInputError("uncertainty fraction of an empty column is undefined")
    return float(np.mean((scores > low) & (scores < high)))


def tcb(scores, test_labels, train_mean: float, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Threshold calibration bias: predicted/true count ratio for the rarer
    attribute value, rarity judged by the training-split mean."""
    scores, labels = _columns(scores, test_labels)
    if not 0.0 <= train_mean <= 1.0:
        raise ArgumentError(f"train_mean {train_mean} outside [0, 1]")
    predicted = scores >= threshold
    if train_mean < 0.5:
        num = int(np.count_nonzero(predicted))
        den = int(np.count_nonzero(labels))
    else:
        num = int(np.count_nonzero(~predicted))
        den = int(np.count_nonzero(~labels))
    if den == 0:
        raise DegenerateInputError("TCB denominator count is zero on the test split")
    return num / den


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def macro_prf(run: MulticlassRun) -> tuple[float, float, float]:
    """Macro precision/recall/F1 from argmax predictions, averaged with equal
    weight over the classes present in the ground truth.

    A class never predicted gets precision 0; per-class F1 is the harmonic
    mean, 0 when precision and recall are both 0.
    """
    predictions = run.logits.argmax(axis=1)
    classes = np.unique(run.labels)
    precisions, recalls, f1s = [], [], []
    for c in classes:
        tp = int(np.count_nonzero((predictions == c) & (run.labels == c)))
        fp = int(np.count_nonzero((predictions == c) & (run.labels != c)))
        fn = int(np.count_nonzero((predictions != c) & (run.labels == c)))
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn)
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(f1)
    return float(np.mean(precisions)), float(np.mean(recalls)), float(np.mean(f1s))


def macro_entropy(run: MulticlassRun) -> float:
    """Mean softmax entropy (natural log), averaging per-class means so every
    ground-truth class carries equal weight regardless of its size."""
    probs = _softmax(run.logits.astype(np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    per_sample = -terms.sum(axis=1)
    class_means = [float(per_sample[run.labels == c].mean()) for c in np.unique(run.labels)]
    return float(np.mean(class_means))
