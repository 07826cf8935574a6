"""Acceptance suite: one test per criterion, each at its stated tolerance and
runtime bound.  conftest prints a PASS/FAIL line per criterion."""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from prunebias.backdoor import assign_backdoor, grayscale, yellow_square
from prunebias.bias import bias_amplification
from prunebias.cie import find_cies
from prunebias.errors import DegenerateInputError
from prunebias.interdependence import fit_ols
from prunebias.metrics import accuracy, auc, ece, tcb
from prunebias.mitigation import (
    apply_overrides,
    apply_thresholds,
    calibrate_thresholds,
    make_override_plan,
    override_eligibility,
)
from prunebias.ppm import ImageRGB
from prunebias.report import audit_to_files
from prunebias.sparsity import ScheduleParams, global_magnitude_mask, nm_mask, schedule_sparsity
from prunebias.tables import load_manifest

from conftest import make_run, make_table
from synth import build_audit_dir, truth_columns
from test_bias import oracle_ba
from test_cie import runs_from_labels
from test_interdependence import qr_r_squared
from test_metrics import brute_force_auc
from test_sparsity import bundle_of, threshold_oracle_mask


@contextmanager
def deadline(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"criterion exceeded its {seconds}s budget ({elapsed:.2f}s)"


def test_ba_oracle_equivalence_1000_instances():
    """bias_amplification equals a brute-force four-cell recount exactly."""
    rng = np.random.default_rng(1001)
    with deadline(5.0):
        checked = 0
        for _ in range(1000):
            n_train = int(rng.integers(20, 401))
            n_test = int(rng.integers(20, 401))
            p_attr = rng.uniform(0.05, 0.95)
            p_ident = rng.uniform(0.05, 0.95)
            coupling = rng.uniform(-0.4, 0.4)

            def sample(n):
                ident = (rng.random(n) < p_ident).astype(np.uint8)
                base = np.clip(p_attr + coupling * (ident.astype(float) - 0.5), 0, 1)
                attr = (rng.random(n) < base).astype(np.uint8)
                return attr, ident

            train_a, train_i = sample(n_train)
            test_a, test_i = sample(n_test)
            pred = np.where(rng.random(n_test) < 0.85, test_a,
                            rng.integers(0, 2, n_test)).astype(np.uint8)

            train = make_table(np.column_stack([train_a, train_i]),
                               attributes=["attr", "ident"], split="train")
            test = make_table(np.column_stack([test_a, test_i]),
                              attributes=["attr", "ident"], split="test")
            run = make_run(np.column_stack([pred.astype(float), test_i.astype(float)]),
                           attributes=["attr", "ident"], split="test")

            expected = oracle_ba(train_a, train_i, test_a, test_i, pred)
            try:
                result = bias_amplification(train, test, run, "attr", "ident")
            except DegenerateInputError:
                assert expected[1] == "degenerate"
                continue
            assert result.eligible == expected[0]
            assert result.reason == expected[1]
            if result.eligible:
                assert result.ba == expected[2]  # zero tolerance
            checked += 1
        assert checked > 900


def test_perfect_predictor_suite():
    """predictions = labels: accuracy 1, TCB 1, eligible BA 0, mitigation no-ops."""
    with deadline(1.0):
        test_attr, test_ident = truth_columns()
        train = make_table(
            np.column_stack([np.repeat(test_attr, 2), np.repeat(test_ident, 2)]),
            attributes=["attr", "ident"], split="train")
        test = make_table(np.column_stack([test_attr, test_ident]),
                          attributes=["attr", "ident"], split="test")
        perfect = make_run(test.values.astype(float), attributes=test.attributes,
                           split="test")

        for attr in test.attributes:
            scores = perfect.column(attr)
            labels = test.column(attr)
            assert accuracy(scores, labels) == 1.0
            train_mean = float(train.column(attr).mean())
            assert tcb(scores, labels, train_mean) == 1.0

        result = bias_amplification(train, test, perfect, "attr", "ident")
        assert result.eligible
        assert result.ba == 0.0

        # calibration is a no-op on a perfect run
        thresholds = calibrate_thresholds(perfect, test)
        hard = apply_thresholds(perfect, thresholds)
        assert np.array_equal(hard, test.values)

        # overrides are a no-op: dense BA of 0 is not positive, so nothing is eligible
        eligible = override_eligibility([result])
        assert eligible == {"attr": False}
        eligible["ident"] = False
        plan = make_override_plan(perfect, "truth", 1.0, eligible)
        sparse_hard = (perfect.scores >= 0.5).astype(np.uint8)
        out = apply_overrides(sparse_hard, plan, test, sparse_hard)
        assert np.array_equal(out, sparse_hard)


def test_auc_brute_force_equivalence():
    """Rank-based AUC equals O(n^2) pair counting within 1e-12, ties included."""
    rng = np.random.default_rng(1003)
    with deadline(5.0):
        for trial in range(400):
            n = int(rng.integers(2, 201))
            if trial % 2 == 0:
                scores = rng.choice([0.0, 0.2, 0.5, 0.5, 0.8, 1.0], size=n)
            else:
                scores = rng.random(n)
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert abs(auc(scores, labels) - brute_force_auc(scores, labels)) <= 1e-12


def test_ece_analytic_fixtures_and_calibrated_bound():
    """Worked ECE examples exact; calibrated fixture stays under 2/sqrt(n)."""
    with deadline(2.0):
        assert ece([0.5] * 8, [1, 1, 1, 1, 0, 0, 0, 0]) == 0.0
        assert ece([0.95] * 4, [1, 1, 1, 1]) == pytest.approx(0.05, abs=1e-15)
        assert ece([0.05] * 4 + [0.95] * 4,
                   [1, 0, 0, 0, 1, 1, 1, 1]) == pytest.approx(0.125, abs=1e-15)

        n = 10_000
        rng = np.random.default_rng(1004)
        scores = rng.random(n)
        labels = (rng.random(n) < scores).astype(int)
        assert ece(scores, labels) <= 2.0 / math.sqrt(n)


def test_interdependence_exact_and_qr_oracle():
    """Exact-linear R^2 = 1 within 1e-9; normal equations track QR within 1e-8."""
    rng = np.random.default_rng(1005)
    with deadline(10.0):
        x = rng.random((100, 3))
        y = x @ np.array([0.5, -1.0, 2.0]) + 0.2
        assert fit_ols(x, y).r_squared == pytest.approx(1.0, abs=1e-9)

        for _ in range(100):
            p = int(rng.integers(1, 41))
            n = int(rng.integers(p + 10, 501))
            features = rng.normal(size=(n, p))
            target = features @ rng.normal(size=p) + rng.normal(size=n)
            fit = fit_ols(features, target)
            assert abs(fit.r_squared - qr_r_squared(features, target)) <= 1e-8


def test_global_magnitude_mask_oracle():
    """Achieved sparsity within 1/total; magnitude separation; sort-oracle equal."""
    rng = np.random.default_rng(1006)
    with deadline(10.0):
        for trial in range(100):
            n_tensors = int(rng.integers(1, 4))
            sizes = [int(rng.integers(1, 100_000 // n_tensors)) for _ in range(n_tensors)]
            tensors = []
            for k, size in enumerate(sizes):
                data = rng.normal(size=size).astype(np.float32)
                if trial % 3 == 0:  # force ties
                    data = np.round(data, 1)
                tensors.append((f"t{k}", data))
            bundle = bundle_of(*tensors)
            names = [name for name, _ in tensors]
            target = float(rng.random())

            mask = global_magnitude_mask(bundle, names, target)
            total = sum(sizes)
            assert abs(mask.achieved - target) <= 1.0 / total

            kept_mags, pruned_mags = [], []
            for name, data in tensors:
                keep = mask.keep_for(name)
                mags = np.abs(data.astype(np.float64))
                kept_mags.append(mags[keep])
                pruned_mags.append(mags[~keep])
            kept = np.concatenate(kept_mags)
            pruned = np.concatenate(pruned_mags)
            if kept.size and pruned.size:
                assert kept.min() >= pruned.max()

            for name, expected in threshold_oracle_mask(bundle, names, target):
                assert np.array_equal(mask.keep_for(name), expected)


def test_nm_masks_exact_keeps():
    """Every group keeps exactly N for 2:4, 1:4, 1:8; sparsity exactly 1 - N/M."""
    rng = np.random.default_rng(1007)
    with deadline(1.0):
        for n, m in ((2, 4), (1, 4), (1, 8)):
            tensor = rng.normal(size=(32, 8 * m)).astype(np.float32)
            keep = nm_mask(tensor, n, m)
            assert (keep.reshape(-1, m).sum(axis=1) == n).all()
            assert 1.0 - keep.sum() / keep.size == pytest.approx(1.0 - n / m, abs=0)


def test_schedule_endpoints_and_midpoint():
    """s(t0) = s_i and s(end) = s_f exactly; cubic midpoint 0.7; monotone sweep."""
    with deadline(1.0):
        params = ScheduleParams(s_i=0.0, s_f=0.8, t0=10, n=8, dt=10, exponent=3)
        assert schedule_sparsity(10, params) == 0.0
        assert schedule_sparsity(90, params) == 0.8
        assert schedule_sparsity(50, params) == pytest.approx(0.7, abs=1e-15)
        sweep = [schedule_sparsity(t, params) for t in range(0, 200)]
        assert sweep == sorted(sweep)

        nonzero = ScheduleParams(s_i=0.2, s_f=0.9, t0=5, n=7, dt=3, exponent=3)
        assert schedule_sparsity(5, nonzero) == 0.2
        assert schedule_sparsity(5 + 21, nonzero) == 0.9


def test_mitigation_end_to_end_on_planted_population(tmp_path):
    """Planted +0.10 BA; calibration cuts it and restores the base rate;
    truth overrides drive it to zero, monotonically in the fraction."""
    with deadline(5.0):
        from prunebias.tables import load_attribute_table, load_prediction_run

        manifest = load_manifest(build_audit_dir(tmp_path / "synth"))
        tables = {split: load_attribute_table(path, split)
                  for split, path in manifest.labels.items()}
        train, test, val = tables["train"], tables["test"], tables["val"]

        by_id = {d.run_id: d for d in manifest.runs}
        sparse = load_prediction_run(by_id["sparse_s1"].predictions_path,
                                     by_id["sparse_s1"], test)
        dense = load_prediction_run(by_id["dense_s1"].predictions_path,
                                    by_id["dense_s1"], test)
        sparse_val = load_prediction_run(by_id["sparse_val"].predictions_path,
                                         by_id["sparse_val"], val)

        planted = bias_amplification(train, test, sparse, "attr", "ident")
        assert planted.eligible
        assert planted.ba == 98 / 140 - 60 / 100  # +0.10 by construction

        # threshold calibration on the validation split
        thresholds = calibrate_thresholds(sparse_val, val)
        hard = apply_thresholds(sparse, thresholds)
        n = test.n_samples
        base_rate = float(test.column("attr").mean())
        predicted_rate = float(hard[:, 0].mean())
        assert abs(predicted_rate - base_rate) <= 1.0 / n

        from prunebias.bias import bias_amplification_from_labels

        calibrated = bias_amplification_from_labels(train, test, hard[:, 0],
                                                    "attr", "ident")
        assert calibrated.eligible
        assert abs(calibrated.ba) < abs(planted.ba)
        assert calibrated.ba == 65 / 100 - 60 / 100  # +0.05 by construction

        # truth-source overrides, monotone in the override fraction
        dense_results = [bias_amplification(train, test, dense, "attr", "ident")]
        assert dense_results[0].ba is not None and dense_results[0].ba > 0
        eligible = override_eligibility(dense_results)
        eligible["ident"] = False
        sparse_hard = (sparse.scores >= 0.5).astype(np.uint8)
        dense_hard = (dense.scores >= 0.5).astype(np.uint8)

        ba_at = {}
        for fraction in (0.0, 0.05, 0.1, 1.0):
            plan = make_override_plan(dense, "truth", fraction, eligible)
            out = apply_overrides(sparse_hard, plan, test, dense_hard)
            ba_at[fraction] = bias_amplification_from_labels(
                train, test, out[:, 0], "attr", "ident").ba

        assert ba_at[0.0] == planted.ba
        assert ba_at[0.05] == 78 / 120 - 60 / 100  # exactly +0.05
        assert ba_at[0.1] == 0.0
        assert ba_at[1.0] == 0.0
        ordered = [ba_at[f] for f in (0.0, 0.05, 0.1, 1.0)]
        assert all(a >= b for a, b in zip(ordered, ordered[1:]))


def test_cie_reduction_oracle():
    """Single-run CIEs equal the disagreement set; 5-vs-5 modal fixture by hand."""
    rng = np.random.default_rng(1010)
    with deadline(2.0):
        for _ in range(100):
            d = rng.integers(0, 2, (10, 3))
            s = rng.integers(0, 2, (10, 3))
            dense = runs_from_labels([d])
            sparse = runs_from_labels([s], method="gmp_ri", sparsity=0.9, prefix="s")
            expected = {(f"s{i}", f"a{j}") for i in range(10) for j in range(3)
                        if d[i, j] != s[i, j]}
            assert find_cies(dense, sparse).pairs == frozenset(expected)

        # 5 vs 5: cell (s0,a0) flips in 3 of 5 sparse runs (modal flips);
        # cell (s1,a1) flips in 2 of 5 (modal unchanged)
        base = np.array([[1, 0], [0, 1]])
        dense = runs_from_labels([base] * 5)
        sparse_matrices = []
        for k in range(5):
            m = base.copy()
            if k < 3:
                m[0, 0] = 0
            if k < 2:
                m[1, 1] = 0
            sparse_matrices.append(m)
        sparse = runs_from_labels(sparse_matrices, method="gmp_ri", sparsity=0.9,
                                  prefix="s")
        assert find_cies(dense, sparse).pairs == frozenset({("s0", "a0")})


def test_backdoor_determinism_and_counts():
    """95/5 and 65/35 class-conditional counts exact; pixel fixtures exact;
    same seed reproduces bit for bit."""
    with deadline(1.0):
        labels = np.array([1] * 100 + [0] * 100)
        a = assign_backdoor(labels, 0.95, 0.05, seed=11)
        assert int(a.flags[:100].sum()) == 95
        assert int(a.flags[100:].sum()) == 5

        labels2 = np.array([1] * 200 + [0] * 400)
        b = assign_backdoor(labels2, 0.65, 0.35, seed=11)
        assert int(b.flags[:200].sum()) == 130
        assert int(b.flags[200:].sum()) == 140

        assert np.array_equal(a.flags, assign_backdoor(labels, 0.95, 0.05, seed=11).flags)

        red = ImageRGB(width=1, height=1,
                       pixels=np.array([[[255, 0, 0]]], dtype=np.uint8))
        assert grayscale(red).pixels[0, 0].tolist() == [76, 76, 76]
        white = ImageRGB(width=2, height=2,
                         pixels=np.full((2, 2, 3), 255, dtype=np.uint8))
        assert np.array_equal(grayscale(white).pixels, white.pixels)

        canvas = ImageRGB(width=30, height=30,
                          pixels=np.zeros((30, 30, 3), dtype=np.uint8))
        stamped = yellow_square(canvas)
        changed = (stamped.pixels != canvas.pixels).any(axis=2)
        assert int(changed.sum()) == 400
        assert (stamped.pixels[5:25, 5:25] == np.array([255, 255, 0])).all()


def test_report_determinism(tmp_path):
    """Two audits of the same manifest produce byte-identical JSON."""
    with deadline(5.0):
        manifest_path = build_audit_dir(tmp_path / "synth")
        audit_to_files(manifest_path, tmp_path / "first")
        audit_to_files(manifest_path, tmp_path / "second")
        first = (tmp_path / "first/report.json").read_bytes()
        second = (tmp_path / "second/report.json").read_bytes()
        assert first == second
        assert (tmp_path / "first/report.csv").read_bytes() == \
            (tmp_path / "second/report.csv").read_bytes()
