"""Ground truth, error statistics, and comparison against published results."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from functools import lru_cache

import numpy as np
from scipy import stats

from hsumhr.core.config_loader import load_reference_document
from hsumhr.core.errors import EvaluationError
from hsumhr.core.model import (
    BlandAltman,
    ComparisonRow,
    EvalReport,
    HrSeries,
    PooledReport,
    ReferenceSummary,
    ReferenceTable,
)

LOGGER = logging.getLogger(__name__)

LOA_Z = 1.96
TABLE_KINDS = ("mae", "std")


def ground_truth_hr(beat_count: float, duration_s: float) -> float:
    """Heart rate in BPM from a beat count over a duration."""
    if not duration_s > 0:
        raise EvaluationError(f"Duration must be positive, got {duration_s}")
    if beat_count < 0:
        raise EvaluationError(f"Beat count must be non-negative, got {beat_count}")
    return 60.0 * beat_count / duration_s


def _as_bpm(values: HrSeries | Sequence[float] | np.ndarray, *, label: str) -> np.ndarray:
    array = values.hr_bpm if isinstance(values, HrSeries) else np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise EvaluationError(f"{label} must be one-dimensional")
    bad = np.flatnonzero(~np.isfinite(array))
    if bad.size:
        raise EvaluationError(f"{label} has a non-finite value at window {int(bad[0])}")
    return array


def _paired(
    estimates: HrSeries | Sequence[float] | np.ndarray,
    truth: HrSeries | Sequence[float] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    est = _as_bpm(estimates, label="estimates")
    ref = _as_bpm(truth, label="truth")
    if est.shape != ref.shape:
        raise EvaluationError(f"Window count mismatch: {est.shape[0]} estimates vs {ref.shape[0]} truth values")
    if est.shape[0] < 2:
        raise EvaluationError(f"Need at least 2 windows to evaluate (n < 2, got {est.shape[0]})")
    return est, ref


def _correlation(kind: str, x: np.ndarray, y: np.ndarray) -> float:
    # undefined for a constant series
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return math.nan
    if kind == "pearson":
        value = stats.pearsonr(x, y)[0]
    else:
        value = stats.spearmanr(x, y)[0]
    return float(np.clip(value, -1.0, 1.0))


def _bland_altman(diff: np.ndarray) -> BlandAltman:
    mean_diff = float(np.mean(diff))
    sd_diff = float(np.std(diff, ddof=1))
    half_width = LOA_Z * sd_diff
    slack = 1e-12 * max(1.0, abs(mean_diff))
    within = np.abs(diff - mean_diff) <= half_width + slack
    return BlandAltman(
        mean_diff=mean_diff,
        sd_diff=sd_diff,
        loa_low=mean_diff - half_width,
        loa_high=mean_diff + half_width,
        fraction_within_loa=float(np.mean(within)),
    )


def evaluate(
    estimates: HrSeries | Sequence[float] | np.ndarray,
    truth: HrSeries | Sequence[float] | np.ndarray,
) -> EvalReport:
    """Compare per-window estimates with ground truth.

    Errors are ``estimate - truth``. Standard deviations use ``ddof=1``.
    Correlations are NaN when either series is constant.
    """
    est, ref = _paired(estimates, truth)
    diff = est - ref
    abs_err = np.abs(diff)
    report = EvalReport(
        n=int(est.shape[0]),
        mae_bpm=float(np.mean(abs_err)),
        std_abs_err_bpm=float(np.std(abs_err, ddof=1)),
        std_signed_err_bpm=float(np.std(diff, ddof=1)),
        rmse_bpm=float(np.sqrt(np.mean(np.square(diff)))),
        bland_altman=_bland_altman(diff),
        pearson_r=_correlation("pearson", est, ref),
        spearman_rho=_correlation("spearman", est, ref),
        per_window_errors=diff,
    )
    LOGGER.info("evaluated %d windows: mae=%.4f bpm", report.n, report.mae_bpm)
    return report


def evaluate_pooled(
    pairs: Sequence[tuple[HrSeries | Sequence[float] | np.ndarray, HrSeries | Sequence[float] | np.ndarray]],
) -> PooledReport:
    """Evaluate each recording on its own and all windows pooled together."""
    if not pairs:
        raise EvaluationError("Pooled evaluation needs at least one recording")
    per_recording: list[EvalReport] = []
    pooled_est: list[np.ndarray] = []
    pooled_ref: list[np.ndarray] = []
    for index, (estimates, truth) in enumerate(pairs):
        try:
            est, ref = _paired(estimates, truth)
        except EvaluationError as exc:
            raise EvaluationError(f"recording {index}: {exc}") from exc
        per_recording.append(evaluate(est, ref))
        pooled_est.append(est)
        pooled_ref.append(ref)
    pooled = evaluate(np.concatenate(pooled_est), np.concatenate(pooled_ref))
    return PooledReport(per_recording=tuple(per_recording), pooled=pooled)


def bland_altman_pairs(
    estimates: HrSeries | Sequence[float] | np.ndarray,
    truth: HrSeries | Sequence[float] | np.ndarray,
) -> tuple[tuple[float, float], ...]:
    """``(mean, diff)`` per window, with mean = (estimate + truth) / 2 and diff = estimate - truth."""
    est, ref = _paired(estimates, truth)
    return tuple((float(m), float(d)) for m, d in zip((est + ref) / 2.0, est - ref))


@lru_cache(maxsize=1)
def _reference_document() -> dict:
    return load_reference_document()


def reference_table(kind: str = "mae") -> ReferenceTable:
    if kind not in TABLE_KINDS:
        raise EvaluationError(f"Unknown reference table '{kind}'. Use one of: {', '.join(TABLE_KINDS)}")
    doc = _reference_document()
    rows = {
        ReferenceTable.method_key(method): tuple(float(v) for v in values)
        for method, values in doc["tables"][kind].items()
    }
    return ReferenceTable(kind=kind, subjects=tuple(doc["subjects"]), rows=rows)


def reference_summary() -> ReferenceSummary:
    doc = _reference_document()
    agreement = doc["agreement"]
    single = agreement.get("single_recording_mae")
    return ReferenceSummary(
        corpus={
            ReferenceTable.method_key(method): (float(values["mae_bpm"]), float(values["std_bpm"]))
            for method, values in doc["corpus"].items()
        },
        loa_low=float(agreement["loa_low"]),
        loa_high=float(agreement["loa_high"]),
        pearson_r=float(agreement["pearson_r"]),
        spearman_rho=float(agreement["spearman_rho"]),
        single_recording=(single["recording"], float(single["mae_bpm"])) if single else None,
    )


def compare_to_reference(reports: Mapping[str, EvalReport], kind: str = "mae") -> tuple[ComparisonRow, ...]:
    """Pair each subject's computed error with every published row for that subject.

    ``kind="std"`` compares the standard deviation of absolute errors.
    """
    table = reference_table(kind)
    rows: list[ComparisonRow] = []
    for subject, report in reports.items():
        if subject not in table.subjects:
            raise EvaluationError(f"Unknown subject '{subject}'; expected one of {', '.join(table.subjects)}")
        computed = report.mae_bpm if kind == "mae" else report.std_abs_err_bpm
        published = {method: table.lookup(method, subject) for method in table.rows}
        rows.append(ComparisonRow(subject=subject, computed=computed, published=published))
    return tuple(rows)
