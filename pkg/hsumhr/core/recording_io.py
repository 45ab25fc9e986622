"""CSV, JSON and text file formats: recordings, truth, HR series, reports, plot exports."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pandas as pd

from hsumhr.core.errors import RecordingFormatError
from hsumhr.core.model import (
    ComparisonRow,
    Decomposition,
    EvalReport,
    HrSeries,
    HrWindow,
    MultiAxisSignal,
    PooledReport,
    Recording,
    ReferenceSummary,
    SampledSignal,
    Spectrogram,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE_HZ = 125.0
SPACING_TOL_S = 1e-6
FLOAT_FORMAT = "%.17g"

RECORDING_COLUMNS = ("ppg1", "ppg2", "acc_x", "acc_y", "acc_z")
TRUTH_COLUMNS = ("window_index", "bpm")
HR_COLUMNS = (
    "window_index",
    "start_s",
    "hr_bpm",
    "f_oa_hz",
    "se_p",
    "rel_err_energy",
    "collision",
    "weak_heart",
)


def _read_csv(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, float_precision="round_trip", skipinitialspace=True)
    except FileNotFoundError as exc:
        raise RecordingFormatError(f"{path}: file not found") from exc
    except OSError as exc:
        raise RecordingFormatError(f"Could not read {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise RecordingFormatError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise RecordingFormatError(f"{path}: malformed CSV: {exc}") from exc
    frame.columns = [str(column).strip() for column in frame.columns]
    return frame


def _require_columns(frame: pd.DataFrame, columns: Sequence[str], path: Path) -> None:
    for column in columns:
        if column not in frame.columns:
            raise RecordingFormatError(f"{path}: missing column '{column}' (header has {', '.join(frame.columns)})")


def _numeric_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        # header is line 1
        raise RecordingFormatError(
            f"{path}:{row + 2}: column '{column}' has a non-numeric or non-finite value {frame[column].iloc[row]!r}"
        )
    return values


def _sample_rate_from_time(t: np.ndarray, fs: float | None, path: Path) -> float:
    if t.shape[0] < 2:
        raise RecordingFormatError(f"{path}: need at least 2 rows to derive the sample rate from 't'")
    steps = np.diff(t)
    dt = float((t[-1] - t[0]) / (t.shape[0] - 1))
    if dt <= 0:
        raise RecordingFormatError(f"{path}: column 't' must be increasing")
    bad = np.flatnonzero(np.abs(steps - dt) > SPACING_TOL_S)
    if bad.size:
        row = int(bad[0]) + 1
        raise RecordingFormatError(
            f"{path}:{row + 2}: sample spacing {steps[row - 1]:.9g} s differs from {dt:.9g} s"
        )
    if fs is not None and abs(1.0 / fs - dt) > SPACING_TOL_S:
        raise RecordingFormatError(
            f"{path}: --fs {fs:g} Hz conflicts with the sample spacing of column 't' ({1.0 / dt:.6g} Hz)"
        )
    # t is usually written with limited precision; snap to a micro-hertz
    return round(1.0 / dt, 6)


def read_recording(path: Path, fs: float | None = None) -> Recording:
    """Read a ``t,ppg1,ppg2,acc_x,acc_y,acc_z`` CSV file.

    ``t`` is optional; without it the sample rate is ``fs`` (125 Hz when not given).
    Extra columns, such as an ECG trace, are ignored.
    """
    if fs is not None and not (math.isfinite(fs) and fs > 0):
        raise RecordingFormatError(f"Sample rate must be positive, got {fs}")
    frame = _read_csv(path)
    _require_columns(frame, RECORDING_COLUMNS, path)
    if frame.shape[0] == 0:
        raise RecordingFormatError(f"{path}: no samples")

    channels = {column: _numeric_column(frame, column, path) for column in RECORDING_COLUMNS}
    if "t" in frame.columns:
        rate = _sample_rate_from_time(_numeric_column(frame, "t", path), fs, path)
    else:
        rate = fs if fs is not None else DEFAULT_SAMPLE_RATE_HZ

    LOGGER.info("read %s: %d samples at %.6g Hz", path, frame.shape[0], rate)
    return Recording(
        ppg=(
            SampledSignal(channels["ppg1"], rate),
            SampledSignal(channels["ppg2"], rate),
        ),
        acc=MultiAxisSignal(
            (
                SampledSignal(channels["acc_x"], rate),
                SampledSignal(channels["acc_y"], rate),
                SampledSignal(channels["acc_z"], rate),
            )
        ),
    )


def write_recording(recording: Recording, target: Path | TextIO, *, include_time: bool = True) -> None:
    rate = recording.sample_rate_hz
    columns: dict[str, np.ndarray] = {}
    if include_time:
        columns["t"] = np.arange(len(recording.acc)) / rate
    columns["ppg1"] = recording.ppg[0].samples
    columns["ppg2"] = recording.ppg[1].samples
    for name, axis in zip(("acc_x", "acc_y", "acc_z"), recording.acc.axes):
        columns[name] = axis.samples
    pd.DataFrame(columns).to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_truth(path: Path) -> np.ndarray:
    """Read ``window_index,bpm``; indices must run 0, 1, 2, ... and every bpm must be positive."""
    frame = _read_csv(path)
    _require_columns(frame, TRUTH_COLUMNS, path)
    index = _numeric_column(frame, "window_index", path)
    bpm = _numeric_column(frame, "bpm", path)
    expected = np.arange(index.shape[0])
    bad = np.flatnonzero(index != expected)
    if bad.size:
        row = int(bad[0])
        raise RecordingFormatError(f"{path}:{row + 2}: window_index must be {row}, got {index[row]:g}")
    bad = np.flatnonzero(bpm <= 0)
    if bad.size:
        row = int(bad[0])
        raise RecordingFormatError(f"{path}:{row + 2}: bpm must be positive, got {bpm[row]:g}")
    return bpm


def write_truth(bpm: Sequence[float] | np.ndarray, target: Path | TextIO) -> None:
    values = np.asarray(bpm, dtype=np.float64)
    frame = pd.DataFrame({"window_index": np.arange(values.shape[0]), "bpm": values})
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def hr_series_frame(series: HrSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "window_index": [w.index for w in series.windows],
            "start_s": [w.start_time_s for w in series.windows],
            "hr_bpm": [w.hr_bpm for w in series.windows],
            "f_oa_hz": [w.f_oa_hz for w in series.windows],
            "se_p": [w.se_p for w in series.windows],
            "rel_err_energy": [w.relative_error_energy for w in series.windows],
            "collision": [int(w.collision_flag) for w in series.windows],
            "weak_heart": [int(w.weak_heart) for w in series.windows],
        },
        columns=list(HR_COLUMNS),
    )


def write_hr_series(series: HrSeries, target: Path | TextIO) -> None:
    hr_series_frame(series).to_csv(
        target, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n"
    )


def _flag_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    if column not in frame.columns:
        return np.zeros(frame.shape[0], dtype=bool)
    values = _numeric_column(frame, column, path)
    bad = np.flatnonzero((values != 0) & (values != 1))
    if bad.size:
        raise RecordingFormatError(f"{path}:{int(bad[0]) + 2}: column '{column}' must be 0 or 1")
    return values.astype(bool)


def _float_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    if column not in frame.columns:
        return np.full(frame.shape[0], math.nan)
    return pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)


def read_hr_series(path: Path, *, method: str = "hsum") -> HrSeries:
    """Read an HR CSV written by ``write_hr_series``; only ``window_index`` and ``hr_bpm`` are required."""
    frame = _read_csv(path)
    _require_columns(frame, ("window_index", "hr_bpm"), path)
    index = _numeric_column(frame, "window_index", path)
    hr = _float_column(frame, "hr_bpm")
    start = _float_column(frame, "start_s")
    f_oa = _float_column(frame, "f_oa_hz")
    se_p = _float_column(frame, "se_p")
    rel = _float_column(frame, "rel_err_energy")
    collision = _flag_column(frame, "collision", path)
    weak = _flag_column(frame, "weak_heart", path)
    windows = tuple(
        HrWindow(
            index=int(index[i]),
            start_time_s=float(start[i]),
            hr_bpm=float(hr[i]),
            f_oa_hz=float(f_oa[i]),
            se_p=float(se_p[i]),
            relative_error_energy=float(rel[i]),
            collision_flag=bool(collision[i]),
            weak_heart=bool(weak[i]),
        )
        for i in range(frame.shape[0])
    )
    return HrSeries(windows=windows, method=method)


def write_spectrogram(spec: Spectrogram, target: Path | TextIO) -> None:
    """Long format: one ``window_index,bin_hz,magnitude`` row per window and bin."""
    n_windows, n_bins = spec.magnitudes.shape
    frame = pd.DataFrame(
        {
            "window_index": np.repeat(np.arange(n_windows), n_bins),
            "bin_hz": np.tile(spec.freqs_hz, n_windows),
            "magnitude": spec.magnitudes.reshape(-1),
        }
    )
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_bland_altman(pairs: Sequence[tuple[float, float]], target: Path | TextIO) -> None:
    frame = pd.DataFrame(list(pairs), columns=["mean", "diff"])
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_components(
    decomposition: Decomposition,
    ppg: np.ndarray,
    acc: np.ndarray,
    acc_fit: np.ndarray,
    start: int,
    sample_rate_hz: float,
    target: Path | TextIO,
) -> None:
    n = start + np.arange(ppg.shape[0])
    frame = pd.DataFrame(
        {
            "n": n,
            "t_s": n / sample_rate_hz,
            "ppg": ppg,
            "fit": decomposition.fit,
            "heartbeat": decomposition.heartbeat,
            "artifact": decomposition.artifact,
            "dc": np.full(ppg.shape[0], decomposition.dc),
            "acc": acc,
            "acc_fit": acc_fit,
        }
    )
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _json_number(value: float) -> float | None:
    return value if math.isfinite(value) else None


def report_to_dict(report: EvalReport) -> dict[str, Any]:
    return {
        "n": report.n,
        "mae_bpm": report.mae_bpm,
        "std_abs_err_bpm": report.std_abs_err_bpm,
        "std_signed_err_bpm": report.std_signed_err_bpm,
        "rmse_bpm": report.rmse_bpm,
        "bland_altman": {key: _json_number(value) for key, value in asdict(report.bland_altman).items()},
        "pearson_r": _json_number(report.pearson_r),
        "spearman_rho": _json_number(report.spearman_rho),
        "per_window_errors": [float(v) for v in report.per_window_errors],
    }


def report_document(
    report: EvalReport | PooledReport,
    *,
    labels: Sequence[str] = (),
    comparison: Sequence[ComparisonRow] = (),
    published: ReferenceSummary | None = None,
) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if isinstance(report, PooledReport):
        names = list(labels) or [str(i) for i in range(len(report.per_recording))]
        doc["recordings"] = [
            {"label": name, **report_to_dict(item)} for name, item in zip(names, report.per_recording)
        ]
        doc["pooled"] = report_to_dict(report.pooled)
    else:
        doc["report"] = report_to_dict(report)
    if comparison:
        doc["comparison"] = [
            {"subject": row.subject, "computed": row.computed, "published": row.published} for row in comparison
        ]
    if published is not None:
        doc["published"] = {
            "corpus": {method: {"mae_bpm": m, "std_bpm": s} for method, (m, s) in published.corpus.items()},
            "loa_low": published.loa_low,
            "loa_high": published.loa_high,
            "pearson_r": published.pearson_r,
            "spearman_rho": published.spearman_rho,
        }
    return doc


def _fmt(value: float) -> str:
    return "nan" if math.isnan(value) else f"{value:.4f}"


def _render_block(report: EvalReport, indent: str = "") -> list[str]:
    ba = report.bland_altman
    return [
        f"{indent}windows: {report.n}",
        f"{indent}mae_bpm: {_fmt(report.mae_bpm)}",
        f"{indent}std_abs_err_bpm: {_fmt(report.std_abs_err_bpm)}",
        f"{indent}std_signed_err_bpm: {_fmt(report.std_signed_err_bpm)}",
        f"{indent}rmse_bpm: {_fmt(report.rmse_bpm)}",
        f"{indent}bland_altman: mean_diff={_fmt(ba.mean_diff)} sd_diff={_fmt(ba.sd_diff)} "
        f"loa=[{_fmt(ba.loa_low)}, {_fmt(ba.loa_high)}] within_loa={_fmt(ba.fraction_within_loa)}",
        f"{indent}pearson_r: {_fmt(report.pearson_r)}",
        f"{indent}spearman_rho: {_fmt(report.spearman_rho)}",
    ]


def render_report_text(
    report: EvalReport | PooledReport,
    *,
    labels: Sequence[str] = (),
    comparison: Sequence[ComparisonRow] = (),
    published: ReferenceSummary | None = None,
) -> str:
    lines: list[str] = []
    if isinstance(report, PooledReport):
        names = list(labels) or [str(i) for i in range(len(report.per_recording))]
        for name, item in zip(names, report.per_recording):
            lines.append(
                f"[{name}] mae_bpm={_fmt(item.mae_bpm)} std_abs_err_bpm={_fmt(item.std_abs_err_bpm)} n={item.n}"
            )
        lines.append("pooled:")
        lines.extend(_render_block(report.pooled, indent="  "))
        summary = report.pooled
    else:
        lines.extend(_render_block(report))
        summary = report

    if comparison:
        methods = list(comparison[0].published)
        lines.append("")
        lines.append("subject  computed  " + "  ".join(methods))
        for row in comparison:
            values = "  ".join(_fmt(row.published[m]) for m in methods)
            lines.append(f"{row.subject}  {_fmt(row.computed)}  {values}")

    if published is not None:
        lines.append("")
        lines.append(
            f"published: loa=[{_fmt(published.loa_low)}, {_fmt(published.loa_high)}] "
            f"pearson_r={_fmt(published.pearson_r)} spearman_rho={_fmt(published.spearman_rho)}"
        )
        ba = summary.bland_altman
        lines.append(
            f"computed:  loa=[{_fmt(ba.loa_low)}, {_fmt(ba.loa_high)}] "
            f"pearson_r={_fmt(summary.pearson_r)} spearman_rho={_fmt(summary.spearman_rho)}"
        )
    return "\n".join(lines) + "\n"


def write_report(
    path: Path,
    report: EvalReport | PooledReport,
    *,
    labels: Sequence[str] = (),
    comparison: Sequence[ComparisonRow] = (),
    published: ReferenceSummary | None = None,
) -> None:
    """Write a report as JSON or text, chosen by the ``.json`` / ``.txt`` suffix."""
    suffix = path.suffix.lower()
    if suffix == ".json":
        doc = report_document(report, labels=labels, comparison=comparison, published=published)
        content = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    elif suffix == ".txt":
        content = render_report_text(report, labels=labels, comparison=comparison, published=published)
    else:
        raise RecordingFormatError(f"Report path {path} must end with .json or .txt")
    try:
        path.write_text(content, encoding="utf-8")
    except OSError as exc:
        raise RecordingFormatError(f"Could not write {path}: {exc}") from exc
