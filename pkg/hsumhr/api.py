"""Stable public API for building tooling on top of hsumhr.

This module is the supported integration surface for third-party callers.
Avoid importing from ``hsumhr.core`` unless intentionally depending on
non-stable internals.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from hsumhr.core.errors import (
    EvaluationError,
    GridError,
    HsumhrError,
    ModelError,
    NyquistError,
    OptionError,
    PresetLoadError,
    PresetValidationError,
    RecordingFormatError,
    SignalError,
    WindowError,
)
from hsumhr.core.metrics import reference_summary, reference_table
from hsumhr.core.model import (
    BlandAltman,
    CombineMode,
    ComparisonRow,
    Decomposition,
    EvalReport,
    GridSpec,
    HrSeries,
    HrWindow,
    JointFit,
    MultiAxisSignal,
    PipelineConfig,
    PooledReport,
    Preset,
    Recording,
    ReferenceSummary,
    ReferenceTable,
    SampledSignal,
    Spectrogram,
    StftConfig,
    WindowComponents,
    WindowPlan,
)
from hsumhr.core.service import HrService, parse_series_spec

__all__ = [
    "HsumhrError",
    "SignalError",
    "WindowError",
    "NyquistError",
    "GridError",
    "ModelError",
    "EvaluationError",
    "OptionError",
    "PresetLoadError",
    "PresetValidationError",
    "RecordingFormatError",
    "BlandAltman",
    "CombineMode",
    "ComparisonRow",
    "Decomposition",
    "EvalReport",
    "GridSpec",
    "HrSeries",
    "HrWindow",
    "JointFit",
    "MultiAxisSignal",
    "PipelineConfig",
    "PooledReport",
    "Preset",
    "Recording",
    "ReferenceSummary",
    "ReferenceTable",
    "SampledSignal",
    "Spectrogram",
    "StftConfig",
    "WindowComponents",
    "WindowPlan",
    "Client",
]


class Client:
    """Public client for hsumhr's estimation, baseline and evaluation capabilities.

    A `Client` loads the packaged and user presets once and resolves every
    call's configuration from a preset (``default`` unless named) or from an
    explicit `PipelineConfig` / `StftConfig`.
    """

    def __init__(self) -> None:
        self._service = HrService()

    @property
    def load_warnings(self) -> tuple[str, ...]:
        return self._service.load_warnings

    def list_presets(self) -> list[Preset]:
        return self._service.list_presets()

    def preset(self, preset_id: str) -> Preset:
        return self._service.preset(preset_id)

    def estimate(
        self,
        ppg: SampledSignal,
        acc: MultiAxisSignal,
        config: PipelineConfig | None = None,
        *,
        preset: str | None = None,
    ) -> HrSeries:
        cfg = config or self._service.config_for(preset)
        return self._service.estimate(ppg, acc, cfg)

    def estimate_file(
        self,
        path: Path,
        config: PipelineConfig | None = None,
        *,
        preset: str | None = None,
        fs: float | None = None,
    ) -> HrSeries:
        cfg = config or self._service.config_for(preset)
        return self._service.estimate_file(Path(path), cfg, fs=fs)

    def baseline(
        self,
        recording: Recording,
        config: StftConfig | None = None,
        *,
        preset: str | None = None,
        signal: str = "ppg",
        channel: int = 2,
        combine: CombineMode | None = None,
        median: bool = False,
    ) -> HrSeries:
        cfg = config or self._service.stft_config_for(preset)
        return self._service.baseline(
            recording, cfg, signal=signal, channel=channel, combine=combine, median=median
        )

    def spectrogram(
        self,
        recording: Recording,
        config: StftConfig | None = None,
        *,
        preset: str | None = None,
        signal: str = "ppg",
        channel: int = 2,
        combine: CombineMode | None = None,
    ) -> Spectrogram:
        cfg = config or self._service.stft_config_for(preset)
        return self._service.spectrogram(recording, cfg, signal=signal, channel=channel, combine=combine)

    def components(
        self,
        recording: Recording,
        window_index: int,
        config: PipelineConfig | None = None,
        *,
        preset: str | None = None,
    ) -> WindowComponents:
        cfg = config or self._service.config_for(preset)
        return self._service.components(recording, cfg, window_index)

    def evaluate(
        self,
        estimates: HrSeries | Sequence[float] | np.ndarray,
        truth: HrSeries | Sequence[float] | np.ndarray,
    ) -> EvalReport:
        return self._service.evaluate(estimates, truth)

    def synthesize(
        self,
        motion: str | tuple[float, Sequence[float], Sequence[float]],
        heart: str | tuple[float, Sequence[float], Sequence[float]],
        *,
        duration_s: float,
        sample_rate_hz: float = 125.0,
        noise_rms: float = 0.0,
        seed: int = 0,
        artifact_gain: float = 1.0,
    ) -> Recording:
        """Synthetic recording; series are ``(f0, cos_amplitudes, sin_amplitudes)`` or ``"f0,a1,..,b1,.."``."""
        return self._service.synthesize(
            parse_series_spec(motion) if isinstance(motion, str) else motion,
            parse_series_spec(heart) if isinstance(heart, str) else heart,
            duration_s=duration_s,
            sample_rate_hz=sample_rate_hz,
            noise_rms=noise_rms,
            seed=seed,
            artifact_gain=artifact_gain,
        )

    def reference_table(self, kind: str = "mae") -> ReferenceTable:
        return reference_table(kind)

    def reference_summary(self) -> ReferenceSummary:
        return reference_summary()
