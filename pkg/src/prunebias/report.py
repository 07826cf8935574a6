"""Audit orchestration and report generation.

``run_audit`` evaluates every run in a manifest (accuracy, AUC, ECE,
uncertainty fraction, TCB, interdependence per attribute; bias amplification
per attribute/category pair), aggregates across seeds per (method, sparsity)
group, and writes a JSON report plus a flat CSV holding the same numbers.

Reports are deterministic: keys are sorted and every float is rounded to 10
significant digits before serialization, so identical inputs produce
byte-identical files.  Bias amplification is reported as a percentage in the
report layer only; the engine itself returns signed fractions.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .bias import BAResult, bias_amplification, worst_case_ba
from .errors import ArgumentError, DegenerateInputError, EmptyInputError
from .interdependence import interdependence
from .tables import AttributeTable, PredictionRun, RunManifest, load_attribute_table, load_prediction_run

SCALAR_METRICS = ("accuracy", "auc", "ece", "uncertainty", "tcb", "interdependence")


@dataclass(frozen=True)
class BoxplotSummary:
    """Quartiles, mean, and the points outside the 2.5x quartile-distance whiskers."""

    median: float
    q25: float
    q75: float
    mean: float
    outliers: tuple[float, ...]


def boxplot_stats(values) -> BoxplotSummary:
    """Quartiles by linear interpolation; a value is an outlier when it lies
    more than 2.5 times the mean-to-quartile distance from the mean."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("boxplot of an empty value list is undefined")
    q25, median, q75 = np.percentile(values, [25.0, 50.0, 75.0])
    mean = float(values.mean())
    upper = mean + 2.5 * (q75 - mean)
    lower = mean - 2.5 * (mean - q25)
    outliers = tuple(float(v) for v in values[(values > upper) | (values < lower)])
    return BoxplotSummary(median=float(median), q25=float(q25), q75=float(q75),
                          mean=mean, outliers=outliers)


def aggregate(values) -> tuple[float, float | None]:
    """Mean plus sample standard deviation (n-1), absent for a single value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("cannot aggregate zero values")
    if values.min() == values.max():  # exact, avoids summation round-off
        return float(values[0]), 0.0 if values.size >= 2 else None
    return float(values.mean()), float(values.std(ddof=1)) if values.size >= 2 else None


def canonical_float(x: float) -> float:
    """Round to 10 significant digits so serialized reports diff cleanly."""
    return float(f"{x:.10g}")


def _canonicalize(obj):
    if isinstance(obj, float):
        return canonical_float(obj)
    if isinstance(obj, dict):
        return {k: _canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonicalize(v) for v in obj]
    return obj


@dataclass(frozen=True)
class MetricReport:
    """Assembled audit output, serializable to JSON and flat CSV."""

    document: dict


def _run_metrics(run: PredictionRun, labels: AttributeTable,
                 train: AttributeTable | None, categories: tuple[str, ...],
                 threshold: float) -> dict:
    """All metrics for one run; degeneracies become reasoned skips, never raise."""
    per_attr: dict[str, dict] = {}
    skips: dict[str, dict[str, str]] = {}

    def record(attr: str, name: str, compute) -> None:
        try:
            per_attr[attr][name] = float(compute())
        except (DegenerateInputError, EmptyInputError, ArgumentError) as exc:
            skips.setdefault(attr, {})[name] = str(exc)

    for attr in labels.attributes:
        per_attr[attr] = {}
        scores = run.column(attr)
        truth = labels.column(attr)
        record(attr, "accuracy", lambda: metrics_mod.accuracy(scores, truth, threshold))
        record(attr, "auc", lambda: metrics_mod.auc(scores, truth))
        record(attr, "ece", lambda: metrics_mod.ece(scores, truth))
        record(attr, "uncertainty", lambda: metrics_mod.uncertainty_fraction(scores))
        if train is None:
            skips.setdefault(attr, {})["tcb"] = "no train labels in manifest"
        else:
            train_mean = float(train.column(attr).mean())
            record(attr, "tcb", lambda: metrics_mod.tcb(scores, truth, train_mean, threshold))
        record(attr, "interdependence", lambda: interdependence(run, attr))

    ba_cells: list[dict] = []
    worst: dict[str, float | None] = {}
    for attr in labels.attributes:
        results: list[BAResult] = []
        for cat in categories:
            if attr == cat:
                ba_cells.append({
                    "attribute": attr, "category": cat, "eligible": False,
                    "reason": "attribute_is_category",
                })
                continue
            if train is None:
                ba_cells.append({
                    "attribute": attr, "category": cat, "eligible": False,
                    "reason": "no train labels in manifest",
                })
                continue
            result = bias_amplification(train, labels, run, attr, cat, threshold)
            results.append(result)
            cell = {
                "attribute": attr,
                "category": cat,
                "eligible": result.eligible,
                "reason": result.reason,
                "direction": result.direction.sign,
                "phi": result.direction.phi,
            }
            if result.eligible:
                cell["b_pred"] = result.b_pred
                cell["b_true"] = result.b_true
                cell["ba_percent"] = 100.0 * result.ba
            ba_cells.append(cell)
        wc = worst_case_ba(results)
        worst[attr] = None if wc is None else 100.0 * wc

    return {
        "run_id": run.run_id,
        "method": run.method,
        "sparsity": run.sparsity,
        "nm": list(run.nm_pattern) if run.nm_pattern else None,
        "seed": run.seed,
        "split": run.split,
        "metrics": per_attr,
        "skips": skips,
        "ba": ba_cells,
        "worst_case_ba_percent": worst,
    }


def _group_key(run_doc: dict) -> tuple:
    nm = tuple(run_doc["nm"]) if run_doc["nm"] else None
    return (run_doc["method"], run_doc["sparsity"], nm, run_doc["split"])


def _aggregate_groups(run_docs: list[dict], attributes: tuple[str, ...],
                      categories: tuple[str, ...]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for doc in run_docs:
        groups.setdefault(_group_key(doc), []).append(doc)

    out: list[dict] = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2] or (), k[3])):
        members = groups[key]
        method, sparsity, nm, split = key
        entry: dict = {
            "method": method,
            "sparsity": sparsity,
            "nm": list(nm) if nm else None,
            "split": split,
            "run_ids": [d["run_id"] for d in members],
            "seeds": [d["seed"] for d in members],
            "metrics": {},
            "ba_percent": [],
        }
        for attr in attributes:
            attr_agg: dict[str, dict] = {}
            for metric in SCALAR_METRICS:
                values = [d["metrics"][attr][metric] for d in members
                          if metric in d["metrics"][attr]]
                if not values:
                    continue
                mean, std = aggregate(values)
                attr_agg[metric] = {"mean": mean, "std": std, "values": values}
            entry["metrics"][attr] = attr_agg

        for attr in attributes:
            for cat in categories:
                cells = [c for d in members for c in d["ba"]
                         if c["attribute"] == attr and c["category"] == cat]
                values = [c["ba_percent"] for c in cells if c["eligible"]]
                skip_reasons = {d["run_id"]: c["reason"]
                                for d, c in zip(members, cells) if not c["eligible"]}
                cell: dict = {"attribute": attr, "category": cat,
                              "n_eligible": len(values)}
                if values:
                    mean, std = aggregate(values)
                    cell.update({"mean": mean, "std": std, "values": values})
                if skip_reasons:
                    cell["skips"] = skip_reasons
                entry["ba_percent"].append(cell)
        out.append(entry)
    return out


def run_audit(manifest: RunManifest, threshold: float = metrics_mod.DEFAULT_THRESHOLD,
              categories: tuple[str, ...] | None = None,
              workers: int = 4) -> MetricReport:
    """Evaluate every run in the manifest and assemble the report document."""
    categories = tuple(categories) if categories is not None else manifest.categories
    tables = {split: load_attribute_table(path, split)
              for split, path in manifest.labels.items()}
    train = tables.get("train")
    for split, table in tables.items():
        missing = [c for c in categories if c not in table.attributes]
        if missing:
            raise ArgumentError(f"categories {missing} not in {split!r} label table")

    def evaluate(descriptor):
        labels = tables[descriptor.split]
        run = load_prediction_run(descriptor.predictions_path, descriptor, labels)
        return _run_metrics(run, labels, train, categories, threshold)

    # independent run tasks; assembly below is single-threaded in manifest order
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        run_docs = list(pool.map(evaluate, manifest.runs))

    attributes = tables[manifest.runs[0].split].attributes if manifest.runs else ()
    document = {
        "categories": list(categories),
        "threshold": threshold,
        "runs": run_docs,
        "aggregates": _aggregate_groups(run_docs, attributes, categories),
    }
    return MetricReport(document=_canonicalize(document))


def write_report_json(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.document, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{canonical_float(value):.10g}"
    return str(value)


def write_report_csv(report: MetricReport, path: str | Path) -> None:
    """Flat CSV with the same numbers as the JSON form."""
    doc = report.document
    rows: list[list[str]] = []
    header = ["scope", "run_id", "method", "sparsity", "nm", "seed", "split",
              "attribute", "category", "metric", "value", "std", "skip_reason"]

    for run in doc["runs"]:
        base = [run["run_id"], run["method"], _fmt(run["sparsity"]),
                "%d:%d" % tuple(run["nm"]) if run["nm"] else "",
                str(run["seed"]), run["split"]]
        for attr in sorted(run["metrics"]):
            for metric in SCALAR_METRICS:
                if metric in run["metrics"][attr]:
                    rows.append(["run", *base, attr, "", metric,
                                 _fmt(run["metrics"][attr][metric]), "", ""])
                elif metric in run.get("skips", {}).get(attr, {}):
                    rows.append(["run", *base, attr, "", metric, "", "",
                                 run["skips"][attr][metric]])
        for cell in run["ba"]:
            if cell["eligible"]:
                rows.append(["run", *base, cell["attribute"], cell["category"],
                             "ba_percent", _fmt(cell["ba_percent"]), "", ""])
            else:
                rows.append(["run", *base, cell["attribute"], cell["category"],
                             "ba_percent", "", "", cell["reason"]])
        for attr in sorted(run["worst_case_ba_percent"]):
            value = run["worst_case_ba_percent"][attr]
            rows.append(["run", *base, attr, "", "worst_case_ba_percent",
                         _fmt(value), "", "" if value is not None else "no eligible pair"])

    for agg in doc["aggregates"]:
        base = ["", agg["method"], _fmt(agg["sparsity"]),
                "%d:%d" % tuple(agg["nm"]) if agg["nm"] else "",
                "", agg["split"]]
        for attr in sorted(agg["metrics"]):
            for metric, stats in sorted(agg["metrics"][attr].items()):
                rows.append(["aggregate", *base, attr, "", metric,
                             _fmt(stats["mean"]), _fmt(stats["std"]), ""])
        for cell in agg["ba_percent"]:
            if "mean" in cell:
                rows.append(["aggregate", *base, cell["attribute"], cell["category"],
                             "ba_percent", _fmt(cell["mean"]), _fmt(cell.get("std")), ""])

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def boxplot_report(report: MetricReport) -> dict:
    """Boxplot-ready summaries: for each aggregate group, the distribution of
    per-attribute means for every scalar metric, of per-attribute BA means per
    category, and of worst-case BA across categories."""
    doc = report.document
    out: list[dict] = []
    for agg in doc["aggregates"]:
        entry: dict = {
            "method": agg["method"],
            "sparsity": agg["sparsity"],
            "nm": agg["nm"],
            "split": agg["split"],
            "metrics": {},
            "ba_percent": {},
        }
        for metric in SCALAR_METRICS:
            values = [stats[metric]["mean"] for stats in agg["metrics"].values()
                      if metric in stats]
            if values:
                entry["metrics"][metric] = _boxplot_dict(values)
        for cat in doc["categories"]:
            values = [cell["mean"] for cell in agg["ba_percent"]
                      if cell["category"] == cat and "mean" in cell]
            if values:
                entry["ba_percent"][cat] = _boxplot_dict(values)
        worst: dict[str, list[float]] = {}
        for cell in agg["ba_percent"]:
            if "mean" in cell:
                worst.setdefault(cell["attribute"], []).append(cell["mean"])
        worst_values = [max(v) for v in worst.values()]
        if worst_values:
            entry["worst_case_ba_percent"] = _boxplot_dict(worst_values)
        out.append(entry)
    return _canonicalize({"groups": out})


def _boxplot_dict(values: list[float]) -> dict:
    stats = boxplot_stats(values)
    return {
        "median": stats.median, "q25": stats.q25, "q75": stats.q75,
        "mean": stats.mean, "outliers": list(stats.outliers), "n": len(values),
    }


def load_audit_inputs(manifest_path: str | Path) -> RunManifest:
    from .tables import load_manifest

    return load_manifest(manifest_path)


def audit_to_files(manifest_path: str | Path, out_dir: str | Path,
                   threshold: float = metrics_mod.DEFAULT_THRESHOLD,
                   categories: tuple[str, ...] | None = None,
                   workers: int = 4) -> MetricReport:
    """Run the audit and write report.json plus report.csv under ``out_dir``."""
    manifest = load_audit_inputs(manifest_path)
    report = run_audit(manifest, threshold=threshold, categories=categories, workers=workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report_json(report, out / "report.json")
    write_report_csv(report, out / "report.csv")
    return report
