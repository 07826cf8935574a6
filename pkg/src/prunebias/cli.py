"""Command-line interface.

Subcommands: audit, calibrate, override, cie, mask, schedule, backdoor,
report.  Every subcommand reads and writes only the paths named by its flags.
Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import backdoor as backdoor_mod
from . import mitigation, report as report_mod, sparsity as sparsity_mod
from .bias import bias_amplification
from .cie import cie_uncertainty_enrichment, find_cies, write_cie_csv
from .errors import ArgumentError, InputError
from .metrics import DEFAULT_THRESHOLD
from .ppm import read_ppm, write_ppm
from .tables import (
    AttributeTable,
    load_attribute_table,
    load_manifest,
    load_prediction_run,
    write_attribute_table,
)
from .tensorio import read_tensor_bundle, write_tensor_bundle


def _parse_nm_flag(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ArgumentError(f"--nm expects N:M, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ArgumentError(f"--nm expects integers N:M, got {text!r}") from None


def _load_run(manifest, run_id: str, tables: dict):
    for descriptor in manifest.runs:
        if descriptor.run_id == run_id:
            labels = tables[descriptor.split]
            return load_prediction_run(descriptor.predictions_path, descriptor, labels), labels
    raise ArgumentError(f"run id {run_id!r} not in manifest")


def _tables_for(manifest) -> dict:
    return {split: load_attribute_table(path, split) for split, path in manifest.labels.items()}


def _cmd_audit(args) -> int:
    categories = tuple(args.categories.split(",")) if args.categories else None
    report_mod.audit_to_files(args.manifest, args.out, threshold=args.threshold,
                              categories=categories, workers=args.workers)
    return 0


def _cmd_calibrate(args) -> int:
    manifest = load_manifest(args.manifest)
    tables = _tables_for(manifest)
    run, labels = _load_run(manifest, args.run_id, tables)
    thresholds = mitigation.calibrate_thresholds(run, labels)
    mitigation.threshold_map_to_json(thresholds, args.out)
    if args.apply and not args.apply_out:
        raise ArgumentError("--apply needs --apply-out")
    if args.apply:
        target_run, target_labels = _load_run(manifest, args.apply, tables)
        hard = mitigation.apply_thresholds(target_run, thresholds)
        write_attribute_table(
            AttributeTable(split=target_labels.split, sample_ids=target_run.sample_ids,
                           attributes=target_run.attributes, values=hard.astype(np.uint8)),
            args.apply_out)
    return 0


def _cmd_override(args) -> int:
    manifest = load_manifest(args.manifest)
    tables = _tables_for(manifest)
    sparse_run, test_labels = _load_run(manifest, args.sparse_run, tables)
    dense_run, dense_labels_table = _load_run(manifest, args.dense_run, tables)
    if dense_run.split != sparse_run.split:
        raise ArgumentError("dense and sparse runs must share a split")
    train = tables.get("train")
    if train is None:
        raise ArgumentError("override eligibility needs train labels in the manifest")
    category = args.categories
    if category is None or "," in category:
        raise ArgumentError("override needs exactly one --categories value")

    dense_results = [
        bias_amplification(train, test_labels, dense_run, attr, category, args.threshold)
        for attr in test_labels.attributes if attr != category
    ]
    eligible = mitigation.override_eligibility(dense_results)
    eligible.setdefault(category, False)
    plan = mitigation.make_override_plan(dense_run, args.source, args.fraction, eligible)

    sparse_hard = (sparse_run.scores >= args.threshold).astype(np.uint8)
    dense_hard = (dense_run.scores >= DEFAULT_THRESHOLD).astype(np.uint8)
    after = mitigation.apply_overrides(sparse_hard, plan, test_labels, dense_hard)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mitigation.override_plan_to_json(plan, out / "override_plan.json")
    write_attribute_table(
        AttributeTable(split=test_labels.split, sample_ids=test_labels.sample_ids,
                       attributes=test_labels.attributes, values=after.astype(np.uint8)),
        out / "overridden_labels.csv")

    before_results, after_results = mitigation.evaluate_mitigation(
        sparse_hard, after, test_labels, [category], train)
    doc = {
        "category": category,
        "source": args.source,
        "fraction": args.fraction,
        "pairs": [
            {
                "attribute": b.attribute,
                "eligible_before": b.eligible,
                "ba_percent_before": None if b.ba is None else 100.0 * b.ba,
                "eligible_after": a.eligible,
                "ba_percent_after": None if a.ba is None else 100.0 * a.ba,
            }
            for b, a in zip(before_results, after_results)
        ],
    }
    (out / "ba_before_after.json").write_text(
        json.dumps(report_mod._canonicalize(doc), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    return 0


def _cmd_cie(args) -> int:
    manifest = load_manifest(args.manifest)
    tables = _tables_for(manifest)
    dense_runs = [_load_run(manifest, rid, tables)[0] for rid in args.dense_runs.split(",")]
    sparse_runs = [_load_run(manifest, rid, tables)[0] for rid in args.sparse_runs.split(",")]
    cies = find_cies(dense_runs, sparse_runs, args.threshold)
    write_cie_csv(cies, args.out)
    cie_fraction, overall = cie_uncertainty_enrichment(cies, dense_runs)
    summary = {
        "sparsity": cies.sparsity,
        "n_cies": len(cies.pairs),
        "cie_uncertain_fraction": cie_fraction,
        "overall_uncertain_fraction": overall,
    }
    print(json.dumps(report_mod._canonicalize(summary), sort_keys=True))
    return 0


def _cmd_mask(args) -> int:
    bundle = read_tensor_bundle(args.weights)
    prunable = args.tensors.split(",") if args.tensors else list(bundle.names)
    if not prunable:
        raise ArgumentError("the weight bundle holds no tensors to mask")
    if args.nm:
        n, m = _parse_nm_flag(args.nm)
        keep = tuple((name, sparsity_mod.nm_mask(bundle.tensor(name), n, m))
                     for name in prunable)
        total = sum(arr.size for _, arr in keep)
        pruned = sum(int(arr.size - np.count_nonzero(arr)) for _, arr in keep)
        mask = sparsity_mod.SparsityMask(keep=keep, target=1.0 - n / m,
                                         achieved=pruned / total)
    else:
        if args.sparsity is None:
            raise ArgumentError("mask needs either --sparsity or --nm")
        mask = sparsity_mod.global_magnitude_mask(bundle, prunable, args.sparsity)
    write_tensor_bundle(sparsity_mod.mask_to_bundle(mask), args.out)
    if args.apply_out:
        write_tensor_bundle(sparsity_mod.apply_mask(bundle, mask), args.apply_out)
    print(json.dumps({"target": report_mod.canonical_float(mask.target),
                      "achieved": report_mod.canonical_float(mask.achieved)}, sort_keys=True))
    return 0


def _cmd_schedule(args) -> int:
    params = sparsity_mod.ScheduleParams(s_i=args.si, s_f=args.sf, t0=args.t0,
                                         n=args.n, dt=args.dt, exponent=args.exponent)
    parts = args.steps.split(":")
    if len(parts) not in (2, 3):
        raise ArgumentError(f"--steps expects START:END[:STRIDE], got {args.steps!r}")
    start, end = int(parts[0]), int(parts[1])
    stride = int(parts[2]) if len(parts) == 3 else 1
    lines = ["step,sparsity"]
    for step in range(start, end, stride):
        value = sparsity_mod.schedule_sparsity(step, params)
        lines.append(f"{step},{report_mod.canonical_float(value):.10g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_backdoor(args) -> int:
    if args.action in ("assign", "even") and not args.labels:
        raise ArgumentError(f"backdoor {args.action} needs --labels")
    if args.action in ("grayscale", "square") and not args.image:
        raise ArgumentError(f"backdoor {args.action} needs --image")
    if args.action == "assign":
        if not args.attribute:
            raise ArgumentError("backdoor assign needs --attribute")
        labels = load_attribute_table(args.labels, args.split)
        assignment = backdoor_mod.assign_backdoor(
            labels.column(args.attribute), args.pos_fraction, args.neg_fraction,
            args.seed, split=args.split)
        backdoor_mod.write_assignment_csv(labels.sample_ids, assignment.flags, args.out)
    elif args.action == "even":
        labels = load_attribute_table(args.labels, args.split)
        flags = backdoor_mod.assign_even_test(labels.n_samples, args.seed)
        backdoor_mod.write_assignment_csv(labels.sample_ids, flags, args.out)
    elif args.action == "grayscale":
        write_ppm(backdoor_mod.grayscale(read_ppm(args.image)), args.out)
    elif args.action == "square":
        offset = tuple(int(v) for v in args.offset.split(","))
        if len(offset) != 2:
            raise ArgumentError(f"--offset expects X,Y, got {args.offset!r}")
        write_ppm(backdoor_mod.yellow_square(read_ppm(args.image), size=args.size,
                                             offset=offset), args.out)
    return 0


def _cmd_report(args) -> int:
    doc = json.loads(Path(args.audit).read_text(encoding="utf-8"))
    boxplots = report_mod.boxplot_report(report_mod.MetricReport(document=doc))
    Path(args.out).write_text(json.dumps(boxplots, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prunebias",
        description="Audit pruned classifiers for compression-induced bias from prediction/weight dumps.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("audit", help="run the full metric/BA grid over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory for report.json and report.csv")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--categories", help="comma-separated identity categories (default: manifest)")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(fn=_cmd_audit)

    p = sub.add_parser("calibrate", help="per-attribute threshold calibration on one run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-id", required=True, help="run to calibrate on (typically the val split)")
    p.add_argument("--out", required=True, help="threshold map JSON")
    p.add_argument("--apply", help="run id to re-threshold with the calibrated cuts")
    p.add_argument("--apply-out", help="hard-label CSV for --apply")
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("override", help="uncertainty-prioritized label overrides")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sparse-run", required=True)
    p.add_argument("--dense-run", required=True)
    p.add_argument("--source", choices=("truth", "dense"), required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--categories", required=True, help="single identity category gating eligibility")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_override)

    p = sub.add_parser("cie", help="compression-identified exemplars")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dense-runs", required=True, help="comma-separated run ids")
    p.add_argument("--sparse-runs", required=True, help="comma-separated run ids")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True, help="CIE CSV path")
    p.set_defaults(fn=_cmd_cie)

    p = sub.add_parser("mask", help="global magnitude or N:M sparsity mask")
    p.add_argument("--weights", required=True, help="TBND weight bundle")
    p.add_argument("--sparsity", type=float)
    p.add_argument("--nm", help="N:M pattern, e.g. 2:4")
    p.add_argument("--tensors", help="comma-separated prunable tensor names (default: all)")
    p.add_argument("--out", required=True, help="mask TBND path")
    p.add_argument("--apply-out", help="optionally write the pruned bundle here")
    p.set_defaults(fn=_cmd_mask)

    p = sub.add_parser("schedule", help="polynomial sparsity schedule values")
    p.add_argument("--si", type=float, required=True)
    p.add_argument("--sf", type=float, required=True)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dt", type=int, required=True)
    p.add_argument("--exponent", type=int, default=3)
    p.add_argument("--steps", required=True, help="START:END[:STRIDE]")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(fn=_cmd_schedule)

    p = sub.add_parser("backdoor", help="backdoor assignment and trigger transforms")
    p.add_argument("action", choices=("assign", "even", "grayscale", "square"))
    p.add_argument("--labels", help="attribute table CSV (assign/even)")
    p.add_argument("--split", default="train")
    p.add_argument("--attribute", help="label column driving the assignment")
    p.add_argument("--pos-fraction", type=float, default=0.95)
    p.add_argument("--neg-fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image", help="input PPM (grayscale/square)")
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--offset", default="5,5")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_backdoor)

    p = sub.add_parser("report", help="boxplot summaries from an audit report")
    p.add_argument("--audit", required=True, help="report.json from the audit subcommand")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
