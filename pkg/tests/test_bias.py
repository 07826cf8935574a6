from __future__ import annotations

import math

import numpy as np
import pytest

from prunebias.bias import (
    ba_with_backdoor_identity,
    bias,
    bias_amplification,
    correlation_sign,
    worst_case_ba,
)
from prunebias.errors import ArgumentError, DegenerateInputError
from prunebias.tables import ContingencyCounts, contingency

from conftest import make_run, make_table


def oracle_ba(train_a, train_i, test_a, test_i, pred):
    """Independent recount: pure-Python cell counting and from-scratch formulas.

    Returns (eligible, reason, ba) with reason 'degenerate' when a bias
    denominator is zero.
    """

    def count(xs, ys, x, y):
        c = 0
        for a, b in zip(xs, ys):
            if a == x and b == y:
                c += 1
        return c

    n11 = count(train_a, train_i, 1, 1)
    n10 = count(train_a, train_i, 1, 0)
    n01 = count(train_a, train_i, 0, 1)
    n00 = count(train_a, train_i, 0, 0)
    n = n11 + n10 + n01 + n00
    denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if denom == 0:
        return False, "no_significant_correlation", None
    phi = (n11 * n00 - n10 * n01) / math.sqrt(denom)
    if not n * phi * phi > 3.841:
        return False, "no_significant_correlation", None
    positive = phi > 0

    p11 = count(pred, test_i, 1, 1)
    p10 = count(pred, test_i, 1, 0)
    p01 = count(pred, test_i, 0, 1)
    p00 = count(pred, test_i, 0, 0)
    if min(p11, p10, p01, p00) < 10:
        return False, "sparse_cell", None

    t11 = count(test_a, test_i, 1, 1)
    t10 = count(test_a, test_i, 1, 0)
    if p11 + p10 == 0 or t11 + t10 == 0:
        return False, "degenerate", None
    b_pred = (p11 if positive else p10) / (p11 + p10)
    b_true = (t11 if positive else t10) / (t11 + t10)
    return True, "ok", b_pred - b_true


def columns_from_counts(n11, n10, n01, n00):
    """Two binary columns realizing the given (X, I) cell counts."""
    x = [1] * n11 + [1] * n10 + [0] * n01 + [0] * n00
    i = [1] * n11 + [0] * n10 + [1] * n01 + [0] * n00
    return np.array(x, dtype=np.uint8), np.array(i, dtype=np.uint8)


def planted_ba_fixture():
    """Train/test tables and a sparse run with bias amplification exactly +0.10.

    Test groups: 60 (A=1,I=1), 40 (A=1,I=0), 120 (A=0,I=1), 180 (A=0,I=0).
    The run predicts positive for every true positive plus 38 of the
    (A=0,I=1) group and 2 of the (A=0,I=0) group, so the predicted cells are
    (98, 42, 82, 178) and ba = 98/140 - 60/100 = 0.10.
    """
    train_a, train_i = columns_from_counts(80, 20, 400, 500)
    train = make_table(np.column_stack([train_a, train_i]),
                       attributes=["attr", "ident"], split="train")

    test_a, test_i = columns_from_counts(60, 40, 120, 180)
    test = make_table(np.column_stack([test_a, test_i]),
                      attributes=["attr", "ident"], split="test")

    pred = test_a.copy()
    false_pos_i1 = np.nonzero((test_a == 0) & (test_i == 1))[0][:38]
    false_pos_i0 = np.nonzero((test_a == 0) & (test_i == 0))[0][:2]
    pred[false_pos_i1] = 1
    pred[false_pos_i0] = 1

    scores = np.column_stack([np.where(pred, 0.9, 0.1), test_i.astype(float)])
    run = make_run(scores, attributes=["attr", "ident"], split="test",
                   method="gmp_ri", sparsity=0.95, run_id="sparse")
    return train, test, run


class TestCorrelationSign:
    def test_positive_significant(self):
        result = correlation_sign(ContingencyCounts(8, 2, 40, 50))
        phi = (8 * 50 - 2 * 40) / math.sqrt(10 * 90 * 48 * 52)
        assert result.sign == "positive"
        assert result.significant
        assert result.phi == pytest.approx(phi)
        assert 100 * phi * phi > 3.841

    def test_independence_is_none(self):
        result = correlation_sign(ContingencyCounts(5, 5, 5, 5))
        assert result.sign == "none"
        assert result.phi == 0.0
        assert not result.significant

    def test_perfect_association(self):
        result = correlation_sign(ContingencyCounts(10, 0, 0, 10))
        assert result.sign == "positive"
        assert result.phi == 1.0
        assert result.significant

    def test_zero_marginal_is_none(self):
        result = correlation_sign(ContingencyCounts(0, 0, 5, 5))
        assert result.sign == "none"
        assert not result.significant

    def test_weak_association_not_significant(self):
        # phi small: chi2 = n*phi^2 below 3.841
        result = correlation_sign(ContingencyCounts(26, 25, 25, 24))
        assert result.sign == "none"


class TestBias:
    def test_positive_direction(self):
        direction = correlation_sign(ContingencyCounts(10, 0, 0, 10))
        assert bias(ContingencyCounts(60, 40, 7, 13), direction) == 0.6

    def test_negative_direction_uses_complement(self):
        direction = correlation_sign(ContingencyCounts(0, 10, 10, 0))
        assert direction.sign == "negative"
        assert bias(ContingencyCounts(60, 40, 7, 13), direction) == 0.4

    def test_all_in_identity(self):
        direction = correlation_sign(ContingencyCounts(10, 0, 0, 10))
        assert bias(ContingencyCounts(5, 0, 1, 1), direction) == 1.0

    def test_zero_denominator(self):
        direction = correlation_sign(ContingencyCounts(10, 0, 0, 10))
        with pytest.raises(DegenerateInputError):
            bias(ContingencyCounts(0, 0, 5, 5), direction)


class TestBiasAmplification:
    def test_planted_fixture_is_exactly_point_one(self):
        train, test, run = planted_ba_fixture()
        result = bias_amplification(train, test, run, "attr", "ident")
        assert result.eligible
        assert result.direction.sign == "positive"
        assert result.b_pred == pytest.approx(0.70)
        assert result.b_true == pytest.approx(0.60)
        assert result.ba == pytest.approx(0.10)

    def test_perfect_predictor_has_zero_ba(self):
        train, test, _ = planted_ba_fixture()
        perfect = make_run(test.values.astype(float), attributes=test.attributes,
                           split="test")
        result = bias_amplification(train, test, perfect, "attr", "ident")
        assert result.eligible
        assert result.ba == 0.0

    def test_sparse_cell_rule(self):
        train, test, _ = planted_ba_fixture()
        # push predictions so the (pred=1, I=0) cell drops below 10
        test_i = test.column("ident")
        pred = ((test_i == 1) | (np.arange(test.n_samples) < 7)).astype(np.uint8)
        pred_cells = contingency(pred, test_i)
        assert min(pred_cells.n11, pred_cells.n10, pred_cells.n01, pred_cells.n00) < 10
        scores = np.column_stack([np.where(pred, 0.9, 0.1), test_i.astype(float)])
        run = make_run(scores, attributes=test.attributes, split="test")
        result = bias_amplification(train, test, run, "attr", "ident")
        assert not result.eligible
        assert result.reason == "sparse_cell"

    def test_no_correlation_is_ineligible(self):
        train_a, train_i = columns_from_counts(25, 25, 25, 25)
        train = make_table(np.column_stack([train_a, train_i]),
                           attributes=["attr", "ident"], split="train")
        _, test, run = planted_ba_fixture()
        result = bias_amplification(train, test, run, "attr", "ident")
        assert not result.eligible
        assert result.reason == "no_significant_correlation"

    def test_attribute_equals_category_rejected(self):
        train, test, run = planted_ba_fixture()
        with pytest.raises(ArgumentError):
            bias_amplification(train, test, run, "attr", "attr")

    def test_antisymmetric_under_identity_flip(self):
        train, test, run = planted_ba_fixture()
        base = bias_amplification(train, test, run, "attr", "ident")

        flipped_train = make_table(
            np.column_stack([train.column("attr"), 1 - train.column("ident")]),
            attributes=["attr", "ident"], split="train")
        flipped_test = make_table(
            np.column_stack([test.column("attr"), 1 - test.column("ident")]),
            attributes=["attr", "ident"], split="test")
        flipped = bias_amplification(flipped_train, flipped_test, run, "attr", "ident")

        assert flipped.direction.sign == "negative"
        assert flipped.eligible == base.eligible
        assert flipped.ba == pytest.approx(base.ba, abs=1e-15)

    def test_cell_eligibility_monotone_under_scaling(self):
        # duplicating every sample scales all four predicted cells up, so an
        # eligible pair can never become cell-sparse
        train, test, run = planted_ba_fixture()
        assert bias_amplification(train, test, run, "attr", "ident").eligible
        doubled_test = make_table(np.repeat(test.values, 2, axis=0),
                                  attributes=test.attributes, split="test")
        doubled_run = make_run(np.repeat(run.scores, 2, axis=0),
                               attributes=run.attributes, split="test")
        doubled = bias_amplification(train, doubled_test, doubled_run, "attr", "ident")
        assert doubled.eligible
        assert doubled.ba == pytest.approx(0.10)

    def test_invariant_under_row_permutation(self, rng):
        train, test, run = planted_ba_fixture()
        base = bias_amplification(train, test, run, "attr", "ident")
        perm = rng.permutation(test.n_samples)
        test_p = make_table(test.values[perm], attributes=test.attributes,
                            split="test", ids=[test.sample_ids[i] for i in perm])
        run_p = make_run(run.scores[perm], attributes=run.attributes, split="test",
                         ids=[run.sample_ids[i] for i in perm])
        permuted = bias_amplification(train, test_p, run_p, "attr", "ident")
        assert permuted.ba == base.ba

    def test_matches_oracle_on_random_instances(self, rng):
        agreements = {"ok": 0, "no_significant_correlation": 0, "sparse_cell": 0,
                      "degenerate": 0}
        for _ in range(300):
            n_train = int(rng.integers(20, 400))
            n_test = int(rng.integers(20, 400))
            p_attr = rng.uniform(0.05, 0.95)
            p_ident = rng.uniform(0.05, 0.95)
            coupling = rng.uniform(-0.4, 0.4)

            def sample(n):
                ident = (rng.random(n) < p_ident).astype(np.uint8)
                base = p_attr + coupling * (ident - 0.5)
                attr = (rng.random(n) < np.clip(base, 0, 1)).astype(np.uint8)
                return attr, ident

            train_a, train_i = sample(n_train)
            test_a, test_i = sample(n_test)
            pred = np.where(rng.random(n_test) < 0.85, test_a,
                            rng.integers(0, 2, n_test)).astype(np.uint8)

            train = make_table(np.column_stack([train_a, train_i]),
                               attributes=["attr", "ident"], split="train")
            test = make_table(np.column_stack([test_a, test_i]),
                              attributes=["attr", "ident"], split="test")
            scores = np.column_stack([np.where(pred, 1.0, 0.0), test_i.astype(float)])
            run = make_run(scores, attributes=["attr", "ident"], split="test")

            expected = oracle_ba(train_a, train_i, test_a, test_i, pred)
            try:
                result = bias_amplification(train, test, run, "attr", "ident")
            except DegenerateInputError:
                assert expected[1] == "degenerate"
                agreements["degenerate"] += 1
                continue
            assert result.eligible == expected[0]
            assert result.reason == expected[1]
            if result.eligible:
                assert result.ba == expected[2]
            agreements[result.reason] += 1
        assert agreements["ok"] > 0
        assert agreements["sparse_cell"] + agreements["no_significant_correlation"] > 0


class TestWorstCase:
    @staticmethod
    def _result(ba):
        from prunebias.bias import BAResult, CorrelationSign

        direction = CorrelationSign(sign="positive", phi=0.5, significant=True)
        return BAResult(attribute="a", category="c", eligible=True, reason="ok",
                        direction=direction, b_pred=0.5, b_true=0.5 - ba, ba=ba)

    def test_max_of_eligible(self):
        results = [self._result(v) for v in (0.01, 0.05, -0.02)]
        assert worst_case_ba(results) == 0.05

    def test_absent_when_all_ineligible(self):
        from prunebias.bias import BAResult, CorrelationSign

        direction = CorrelationSign(sign="positive", phi=0.5, significant=True)
        ineligible = BAResult(attribute="a", category="c", eligible=False,
                              reason="sparse_cell", direction=direction)
        assert worst_case_ba([ineligible]) is None

    def test_single_result(self):
        assert worst_case_ba([self._result(0.03)]) == 0.03


class TestBackdoorIdentity:
    def test_independent_flags_ineligible(self, rng):
        train_labels = rng.integers(0, 2, 500).astype(np.uint8)
        train_flags = rng.integers(0, 2, 500).astype(np.uint8)
        # enforce exact independence: flags shuffled within each label class
        test = make_table(np.column_stack([np.ones(40, dtype=np.uint8)]),
                          attributes=["attr"], split="test")
        run = make_run(np.ones((40, 1)), attributes=["attr"], split="test")
        flags = np.zeros(40, dtype=np.uint8)
        result = ba_with_backdoor_identity(
            run, test, flags, "attr",
            train_labels=train_labels,
            train_flags=(train_labels * 0))
        assert not result.eligible
        assert result.reason == "no_significant_correlation"

    def test_95_5_split_is_positive_direction(self):
        # 100 positives with 95 flagged, 100 negatives with 5 flagged
        labels = np.array([1] * 100 + [0] * 100, dtype=np.uint8)
        flags = np.array([1] * 95 + [0] * 5 + [1] * 5 + [0] * 95, dtype=np.uint8)
        test_a, test_i = columns_from_counts(30, 30, 30, 30)
        test = make_table(test_a[:, None], attributes=["attr"], split="test")
        run = make_run(test_a[:, None].astype(float), attributes=["attr"], split="test")
        result = ba_with_backdoor_identity(run, test, test_i, "attr",
                                           train_labels=labels, train_flags=flags)
        assert result.direction.sign == "positive"
        assert result.eligible
        assert result.ba == 0.0
