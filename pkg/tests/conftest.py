from __future__ import annotations

import numpy as np
import pytest

from prunebias.tables import AttributeTable, PredictionRun


def make_table(values, attributes=None, split="test", ids=None) -> AttributeTable:
    values = np.asarray(values, dtype=np.uint8)
    n, p = values.shape
    return AttributeTable(
        split=split,
        sample_ids=tuple(ids) if ids else tuple(f"s{i}" for i in range(n)),
        attributes=tuple(attributes) if attributes else tuple(f"a{j}" for j in range(p)),
        values=values,
    )


def make_run(scores, attributes=None, split="test", run_id="run", method="dense",
             sparsity=0.0, seed=0, ids=None, nm=None) -> PredictionRun:
    scores = np.asarray(scores, dtype=np.float64)
    n, p = scores.shape
    return PredictionRun(
        run_id=run_id,
        method=method,
        sparsity=sparsity,
        seed=seed,
        split=split,
        sample_ids=tuple(ids) if ids else tuple(f"s{i}" for i in range(n)),
        attributes=tuple(attributes) if attributes else tuple(f"a{j}" for j in range(p)),
        scores=scores,
        nm_pattern=nm,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\n[ACCEPTANCE] {name}: {report.outcome.upper()}")
