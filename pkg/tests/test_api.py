from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hsumhr.api import Client, EvaluationError, HrSeries, PipelineConfig, WindowComponents
from hsumhr.core.recording_io import write_recording

MOTION = "1.3,0.6,0.2,0.1,0.0"
HEART = "2.0,1.0,0.4,0.2,0.1"


@pytest.fixture
def client(isolated_home: Path) -> Client:
    return Client()


def test_public_client_lists_packaged_presets(client: Client) -> None:
    ids = [preset.id for preset in client.list_presets()]
    assert "default" in ids
    assert client.preset("offline").config.median
    assert client.load_warnings == ()


def test_public_client_estimate_and_evaluate(client: Client) -> None:
    recording = client.synthesize(MOTION, HEART, duration_s=12.0)
    config = PipelineConfig(motion_order=2, heart_order=2)
    series = client.estimate(recording.ppg[1], recording.acc, config)
    assert isinstance(series, HrSeries)
    np.testing.assert_allclose(series.hr_bpm, 120.0)

    report = client.evaluate(series, [121.0, 119.0, 120.0])
    assert report.mae_bpm == pytest.approx(2.0 / 3.0)
    with pytest.raises(EvaluationError):
        client.evaluate(series, [120.0])


def test_public_client_estimate_file(client: Client, tmp_path: Path) -> None:
    path = tmp_path / "rec.csv"
    write_recording(client.synthesize(MOTION, HEART, duration_s=10.0), path)
    series = client.estimate_file(path, PipelineConfig(motion_order=2, heart_order=2))
    assert len(series) == 2
    np.testing.assert_allclose(series.hr_bpm, 120.0)


def test_public_client_baseline_and_components(client: Client) -> None:
    recording = client.synthesize(MOTION, HEART, duration_s=12.0)
    baseline = client.baseline(recording)
    assert baseline.method == "stft"
    assert len(baseline) == 3

    spec = client.spectrogram(recording)
    assert spec.magnitudes.shape == (3, 1025)

    view = client.components(recording, 1, PipelineConfig(motion_order=2, heart_order=2))
    assert isinstance(view, WindowComponents)
    assert view.start == 250
    assert view.joint.f_oh_hz == 2.0


def test_public_client_reference_data(client: Client) -> None:
    assert client.reference_table("mae").lookup("TROIKA", "S10") == pytest.approx(4.00)
    assert client.reference_summary().corpus["hsum-median"] == (0.7359, 0.8328)
