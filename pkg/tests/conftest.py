from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from hsumhr.core.model import MultiAxisSignal, Recording, SampledSignal
from hsumhr.core.signal import synth_harmonic

FS = 125.0


@pytest.fixture
def isolated_home(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> Path:
    """Point XDG config/data at an empty temp tree so user presets never leak in."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "cfg"))
    monkeypatch.setenv("XDG_DATA_HOME", str(tmp_path / "data"))
    return tmp_path


@pytest.fixture
def qr_se() -> Callable[[np.ndarray, np.ndarray], float]:
    """Residual energy through an explicit orthonormal basis of the design columns."""

    def _se(matrix: np.ndarray, x: np.ndarray) -> float:
        q, r = np.linalg.qr(matrix)
        keep = np.abs(np.diag(r)) > 1e-10 * np.abs(np.diag(r)).max()
        q = q[:, keep]
        residual = x - q @ (q.T @ x)
        return float(residual @ residual)

    return _se


@pytest.fixture
def make_recording() -> Callable[..., Recording]:
    """Two-series recording: PPG = heart + motion, acc_x = motion, acc_y/acc_z = silent."""

    def _make(
        motion: tuple[float, list[float], list[float]],
        heart: tuple[float, list[float], list[float]],
        duration_s: float = 16.0,
        noise_rms: float = 0.0,
        seed: int = 7,
    ) -> Recording:
        n = int(round(duration_s * FS))
        m = synth_harmonic(motion[0], motion[1], motion[2], 0.0, n, FS).samples
        h = synth_harmonic(heart[0], heart[1], heart[2], 0.0, n, FS).samples
        rng = np.random.default_rng(seed)
        ppg = h + m + rng.normal(0.0, noise_rms, n) if noise_rms else h + m
        acc_x = m + rng.normal(0.0, noise_rms, n) if noise_rms else m
        zeros = np.zeros(n)
        return Recording(
            ppg=(SampledSignal(ppg, FS), SampledSignal(ppg, FS)),
            acc=MultiAxisSignal((SampledSignal(acc_x, FS), SampledSignal(zeros, FS), SampledSignal(zeros, FS))),
        )

    return _make
