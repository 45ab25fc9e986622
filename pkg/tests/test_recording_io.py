from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from hsumhr.core.errors import RecordingFormatError
from hsumhr.core.metrics import compare_to_reference, evaluate, evaluate_pooled, reference_summary
from hsumhr.core.model import HrSeries, HrWindow, MultiAxisSignal, Recording, SampledSignal, Spectrogram
from hsumhr.core.recording_io import (
    HR_COLUMNS,
    read_hr_series,
    read_recording,
    read_truth,
    render_report_text,
    write_bland_altman,
    write_hr_series,
    write_recording,
    write_report,
    write_spectrogram,
    write_truth,
)

HEADER = "t,ppg1,ppg2,acc_x,acc_y,acc_z\n"


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _recording(n: int = 40, fs: float = 125.0) -> Recording:
    rng = np.random.default_rng(1)
    columns = [SampledSignal(rng.normal(size=n), fs) for _ in range(5)]
    return Recording(ppg=(columns[0], columns[1]), acc=MultiAxisSignal(tuple(columns[2:])))


def test_recording_survives_write_and_read(tmp_path: Path) -> None:
    original = _recording()
    path = tmp_path / "rec.csv"
    write_recording(original, path)
    loaded = read_recording(path)
    assert loaded.sample_rate_hz == pytest.approx(125.0, rel=1e-9)
    np.testing.assert_array_equal(loaded.ppg[1].samples, original.ppg[1].samples)
    np.testing.assert_array_equal(loaded.acc.axes[2].samples, original.acc.axes[2].samples)


def test_recording_without_time_column_uses_rate_option(tmp_path: Path) -> None:
    path = tmp_path / "rec.csv"
    write_recording(_recording(), path, include_time=False)
    assert path.read_text(encoding="utf-8").startswith("ppg1,ppg2,acc_x")
    assert read_recording(path).sample_rate_hz == 125.0
    assert read_recording(path, fs=50.0).sample_rate_hz == 50.0


def test_extra_columns_are_ignored(tmp_path: Path) -> None:
    path = _write(tmp_path / "rec.csv", "ppg1,ppg2,acc_x,acc_y,acc_z,ecg\n1,2,3,4,5,9\n1,2,3,4,5,9\n")
    recording = read_recording(path)
    assert len(recording.acc) == 2


def test_missing_column_is_named(tmp_path: Path) -> None:
    path = _write(tmp_path / "rec.csv", "t,ppg1,ppg2,acc_x,acc_z\n0,1,2,3,4\n")
    with pytest.raises(RecordingFormatError, match="missing column 'acc_y'"):
        read_recording(path)


def test_non_numeric_value_reports_line(tmp_path: Path) -> None:
    path = _write(tmp_path / "rec.csv", HEADER + "0,1,2,3,4,5\n0.008,1,x,3,4,5\n")
    with pytest.raises(RecordingFormatError, match=r"rec\.csv:3: column 'ppg2'"):
        read_recording(path)


def test_empty_and_missing_files(tmp_path: Path) -> None:
    with pytest.raises(RecordingFormatError, match="not found"):
        read_recording(tmp_path / "absent.csv")
    with pytest.raises(RecordingFormatError, match="empty"):
        read_recording(_write(tmp_path / "empty.csv", ""))
    with pytest.raises(RecordingFormatError, match="no samples"):
        read_recording(_write(tmp_path / "header.csv", HEADER))


def test_irregular_time_spacing_rejected(tmp_path: Path) -> None:
    rows = "".join(f"{t},1,2,3,4,5\n" for t in (0.0, 0.008, 0.016, 0.030, 0.032))
    path = _write(tmp_path / "rec.csv", HEADER + rows)
    with pytest.raises(RecordingFormatError, match="spacing"):
        read_recording(path)


def test_rate_option_must_agree_with_time_column(tmp_path: Path) -> None:
    path = tmp_path / "rec.csv"
    write_recording(_recording(), path)
    assert read_recording(path, fs=125.0).sample_rate_hz == pytest.approx(125.0)
    with pytest.raises(RecordingFormatError, match="conflicts"):
        read_recording(path, fs=100.0)
    with pytest.raises(RecordingFormatError, match="positive"):
        read_recording(path, fs=0.0)


def test_truth_file(tmp_path: Path) -> None:
    path = tmp_path / "truth.csv"
    write_truth([80.0, 82.5, 85.0], path)
    np.testing.assert_array_equal(read_truth(path), [80.0, 82.5, 85.0])

    with pytest.raises(RecordingFormatError, match=r":3: window_index must be 1"):
        read_truth(_write(tmp_path / "gap.csv", "window_index,bpm\n0,80\n2,81\n"))
    with pytest.raises(RecordingFormatError, match="positive"):
        read_truth(_write(tmp_path / "zero.csv", "window_index,bpm\n0,80\n1,0\n"))
    with pytest.raises(RecordingFormatError, match="missing column 'bpm'"):
        read_truth(_write(tmp_path / "cols.csv", "window_index,hr\n0,80\n"))


def _hr_series() -> HrSeries:
    return HrSeries(
        windows=(
            HrWindow(0, 0.0, 126.0, 1.2, 0.25, 0.01, collision_flag=True),
            HrWindow(1, 2.0, 90.0, 1.0, 1e-20, math.inf, weak_heart=True),
            HrWindow(2, 4.0, math.nan, math.nan, math.nan, math.nan),
        )
    )


def test_hr_series_file_keeps_every_field(tmp_path: Path) -> None:
    path = tmp_path / "hr.csv"
    write_hr_series(_hr_series(), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(HR_COLUMNS)
    assert lines[1].endswith(",1,0")

    loaded = read_hr_series(path)
    assert loaded.windows[:2] == _hr_series().windows[:2]
    assert math.isnan(loaded.windows[2].hr_bpm)


def test_minimal_hr_series_file(tmp_path: Path) -> None:
    loaded = read_hr_series(_write(tmp_path / "hr.csv", "window_index,hr_bpm\n0,70\n1,71\n"), method="stft")
    np.testing.assert_array_equal(loaded.hr_bpm, [70.0, 71.0])
    assert loaded.method == "stft"
    assert not loaded.windows[0].collision_flag

    with pytest.raises(RecordingFormatError, match="0 or 1"):
        read_hr_series(_write(tmp_path / "flags.csv", "window_index,hr_bpm,collision\n0,70,2\n"))


def test_plot_exports() -> None:
    out = io.StringIO()
    spec = Spectrogram(
        magnitudes=np.array([[1.0, 2.0], [3.0, 4.0]]),
        freqs_hz=np.array([0.0, 0.5]),
        window_starts_s=np.array([0.0, 2.0]),
    )
    write_spectrogram(spec, out)
    assert out.getvalue().splitlines() == [
        "window_index,bin_hz,magnitude",
        "0,0,1",
        "0,0.5,2",
        "1,0,3",
        "1,0.5,4",
    ]

    out = io.StringIO()
    write_bland_altman([(101.0, 2.0), (99.0, -2.0)], out)
    assert out.getvalue() == "mean,diff\n101,2\n99,-2\n"


def test_json_report(tmp_path: Path) -> None:
    report = evaluate([101.0, 99.0, 104.0], [100.0, 100.0, 100.0])
    path = tmp_path / "report.json"
    write_report(path, report, published=reference_summary())
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["report"]["n"] == 3
    assert doc["report"]["mae_bpm"] == pytest.approx(2.0)
    assert doc["report"]["pearson_r"] is None
    assert doc["report"]["per_window_errors"] == [1.0, -1.0, 4.0]
    assert doc["published"]["corpus"]["hsum-median"] == {"mae_bpm": 0.7359, "std_bpm": 0.8328}


def test_text_report_with_comparison(tmp_path: Path) -> None:
    pooled = evaluate_pooled([([70.0, 81.0], [70.0, 80.0]), ([90.0, 91.0], [90.0, 90.0])])
    comparison = compare_to_reference({"S1": pooled.per_recording[0], "S2": pooled.per_recording[1]})
    text = render_report_text(pooled, labels=["S1", "S2"], comparison=comparison, published=reference_summary())
    assert "[S1] mae_bpm=0.5000" in text
    assert "pooled:" in text
    assert "  mae_bpm: 0.5000" in text
    assert "subject  computed  hsum-median" in text
    assert "published: loa=[-6.7086, 6.7086]" in text

    path = tmp_path / "report.txt"
    write_report(path, pooled, labels=["S1", "S2"])
    assert path.read_text(encoding="utf-8").startswith("[S1]")
    with pytest.raises(RecordingFormatError, match=".json or .txt"):
        write_report(tmp_path / "report.csv", pooled)
