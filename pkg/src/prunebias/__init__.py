"""Bias audit toolkit for pruned classifiers.

Loads prediction/weight dumps, computes systematic- and category-bias
metrics, finds compression-identified exemplars, applies threshold
calibration and label-override mitigation, and generates pruning masks and
schedules.
"""

from .backdoor import (
    BackdoorAssignment,
    assign_backdoor,
    assign_even_test,
    grayscale,
    yellow_square,
)
from .bias import (
    BAResult,
    CorrelationSign,
    ba_with_backdoor_identity,
    bias,
    bias_amplification,
    bias_amplification_from_labels,
    correlation_sign,
    worst_case_ba,
)
from .cie import CIESet, cie_uncertainty_enrichment, find_cies, modal_label
from .interdependence import OLSFit, fit_ols, interdependence
from .metrics import (
    CalibrationBuckets,
    MulticlassRun,
    accuracy,
    auc,
    calibration_buckets,
    ece,
    macro_entropy,
    macro_prf,
    tcb,
    uncertainty_fraction,
)
from .mitigation import (
    OverridePlan,
    ThresholdMap,
    apply_overrides,
    apply_thresholds,
    calibrate_threshold,
    calibrate_thresholds,
    evaluate_mitigation,
    make_override_plan,
    override_eligibility,
    rank_by_uncertainty,
)
from .ppm import ImageRGB, read_ppm, write_ppm
from .report import BoxplotSummary, MetricReport, aggregate, boxplot_stats, run_audit
from .sparsity import (
    LayerDescriptor,
    ScheduleParams,
    SparsityMask,
    apply_mask,
    flops_estimate,
    global_magnitude_mask,
    nm_mask,
    schedule_sparsity,
)
from .tables import (
    AttributeTable,
    ContingencyCounts,
    PredictionRun,
    RunDescriptor,
    RunManifest,
    contingency,
    load_attribute_table,
    load_manifest,
    load_prediction_run,
)
from .tensorio import TensorBundle, read_tensor_bundle, write_tensor_bundle

__version__ = "0.1.0"
