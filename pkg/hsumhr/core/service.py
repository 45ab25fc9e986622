"""Service layer used by the CLI and the public API."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path

import numpy as np

from hsumhr.core import baseline as stft
from hsumhr.core.config_loader import load_presets, validate_config
from hsumhr.core.errors import EvaluationError, PresetValidationError, SignalError, WindowError
from hsumhr.core.harmonic_fit import reconstruct
from hsumhr.core.joint_model import decompose
from hsumhr.core.metrics import evaluate, evaluate_pooled
from hsumhr.core.model import (
    CombineMode,
    EvalReport,
    GridSpec,
    HrSeries,
    MultiAxisSignal,
    PipelineConfig,
    PooledReport,
    Preset,
    Recording,
    SampledSignal,
    Spectrogram,
    StftConfig,
    WindowComponents,
    WindowPlan,
)
from hsumhr.core.pipeline import estimate_hr, fit_window, median3, prepare_windows
from hsumhr.core.recording_io import read_hr_series, read_recording, read_truth
from hsumhr.core.signal import add_white_noise, magnitude, segment, synth_harmonic

LOGGER = logging.getLogger(__name__)

DEFAULT_PRESET = "default"


def parse_series_spec(text: str) -> tuple[float, tuple[float, ...], tuple[float, ...]]:
    """Parse ``f0,a1,...,aM,b1,...,bM`` into the fundamental, cosine and sine amplitudes."""
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise SignalError(f"Harmonic series '{text}' contains a non-numeric value") from exc
    if len(values) < 3 or len(values) % 2 == 0:
        raise SignalError(
            f"Harmonic series '{text}' must be f0 followed by M cosine and M sine amplitudes"
        )
    order = (len(values) - 1) // 2
    return values[0], tuple(values[1 : 1 + order]), tuple(values[1 + order :])


def _acc_signal(acc: MultiAxisSignal, combine: CombineMode) -> SampledSignal:
    if combine.kind == "axis":
        return acc.axes[combine.axis]
    return magnitude(acc)


class HrService:
    def __init__(self) -> None:
        loaded = load_presets()
        self.presets = loaded.presets
        self.load_warnings = loaded.warnings

    def list_presets(self) -> list[Preset]:
        return sorted(self.presets.values(), key=lambda p: p.id)

    def preset(self, preset_id: str | None = None) -> Preset:
        preset_id = preset_id or DEFAULT_PRESET
        found = self.presets.get(preset_id)
        if found is None:
            raise PresetValidationError(
                f"Unknown preset '{preset_id}'. Use 'hsumhr presets' to inspect available presets."
            )
        return found

    def config_for(
        self,
        preset_id: str | None = None,
        *,
        window_s: float | None = None,
        hop_s: float | None = None,
        motion_order: int | None = None,
        heart_order: int | None = None,
        acc_grid: GridSpec | None = None,
        hr_grid: GridSpec | None = None,
        combine: CombineMode | None = None,
        median: bool | None = None,
        ppg_channel: int | None = None,
        mean_remove: bool | None = None,
        cap_heart_order: bool | None = None,
        workers: int | None = None,
    ) -> PipelineConfig:
        """Preset configuration with every non-None keyword overriding the preset value."""
        cfg = self.preset(preset_id).config
        plan = WindowPlan(
            window_len_s=cfg.plan.window_len_s if window_s is None else window_s,
            hop_s=cfg.plan.hop_s if hop_s is None else hop_s,
        )
        overrides = {
            "motion_order": motion_order,
            "heart_order": heart_order,
            "acc_grid": acc_grid,
            "hr_grid": hr_grid,
            "combine": combine,
            "median": median,
            "ppg_channel": ppg_channel,
            "mean_remove": mean_remove,
            "cap_heart_order": cap_heart_order,
            "workers": workers,
        }
        return replace(cfg, plan=plan, **{key: value for key, value in overrides.items() if value is not None})

    def stft_config_for(
        self,
        preset_id: str | None = None,
        *,
        window_s: float | None = None,
        hop_s: float | None = None,
        fft_len: int | None = None,
        band: tuple[float, float] | None = None,
        full_band: bool = False,
    ) -> StftConfig:
        cfg = self.preset(preset_id).stft
        plan = WindowPlan(
            window_len_s=cfg.plan.window_len_s if window_s is None else window_s,
            hop_s=cfg.plan.hop_s if hop_s is None else hop_s,
        )
        if full_band:
            chosen_band = None
        else:
            chosen_band = cfg.band if band is None else band
        return StftConfig(
            fft_len=cfg.fft_len if fft_len is None else fft_len,
            plan=plan,
            band=chosen_band,
        )

    def estimate(self, ppg: SampledSignal, acc: MultiAxisSignal, cfg: PipelineConfig) -> HrSeries:
        validate_config(cfg, ppg.sample_rate_hz)
        return estimate_hr(ppg, acc, cfg)

    def estimate_recording(self, recording: Recording, cfg: PipelineConfig) -> HrSeries:
        return self.estimate(recording.ppg_channel(cfg.ppg_channel), recording.acc, cfg)

    def estimate_file(self, path: Path, cfg: PipelineConfig, *, fs: float | None = None) -> HrSeries:
        series = self.estimate_recording(read_recording(path, fs), cfg)
        LOGGER.info("%s: %d windows", path, len(series))
        return series

    def baseline(
        self,
        recording: Recording,
        cfg: StftConfig,
        *,
        signal: str = "ppg",
        channel: int = 2,
        combine: CombineMode | None = None,
        median: bool = False,
    ) -> HrSeries:
        """STFT peak read-out of the PPG channel or of the acceleration (magnitude or one axis)."""
        source = self._source(recording, signal=signal, channel=channel, combine=combine)
        series = stft.stft_peak_bpm(source, cfg)
        if median:
            if np.any(np.isnan(series.hr_bpm)):
                raise WindowError("Cannot median-filter a baseline series with windows that have no spectral peak")
            series = median3(series)
        return series

    def peak_coincidence(
        self,
        recording: Recording,
        cfg: StftConfig,
        *,
        channel: int = 2,
        combine: CombineMode | None = None,
        tol_bpm: float | None = None,
    ) -> float:
        ppg = stft.stft_peak_bpm(recording.ppg_channel(channel), cfg)
        acc = stft.stft_peak_bpm(_acc_signal(recording.acc, combine or CombineMode("l2")), cfg)
        if tol_bpm is None:
            tol_bpm = stft.bin_width_bpm(recording.sample_rate_hz, cfg.fft_len)
        return stft.peak_coincidence(ppg, acc, tol_bpm)

    def spectrogram(
        self,
        recording: Recording,
        cfg: StftConfig,
        *,
        signal: str = "ppg",
        channel: int = 2,
        combine: CombineMode | None = None,
    ) -> Spectrogram:
        return stft.spectrogram(self._source(recording, signal=signal, channel=channel, combine=combine), cfg)

    def components(self, recording: Recording, cfg: PipelineConfig, window_index: int) -> WindowComponents:
        """Joint-fit decomposition of one analysis window."""
        validate_config(cfg, recording.sample_rate_hz)
        ppg_windows = segment(recording.ppg_channel(cfg.ppg_channel), cfg.plan)
        if not 0 <= window_index < len(ppg_windows):
            raise WindowError(f"Window index {window_index} is out of range (0..{len(ppg_windows) - 1})")
        axes = tuple(segment(axis, cfg.plan)[window_index] for axis in recording.acc.axes)
        ppg_window, acc_windows = prepare_windows(ppg_windows[window_index], axes, cfg)
        motion, joint, acc_samples = fit_window(ppg_window, acc_windows, cfg)
        return WindowComponents(
            index=window_index,
            start=ppg_window.start,
            sample_rate_hz=recording.sample_rate_hz,
            ppg=np.asarray(ppg_window.samples),
            acc=acc_samples,
            acc_fit=reconstruct(motion, acc_samples.shape[0], recording.sample_rate_hz).samples,
            motion=motion,
            joint=joint,
            decomposition=decompose(ppg_window, joint, recording.sample_rate_hz),
        )

    def evaluate(
        self,
        estimates: HrSeries | Sequence[float] | np.ndarray,
        truth: HrSeries | Sequence[float] | np.ndarray,
    ) -> EvalReport:
        return evaluate(estimates, truth)

    def evaluate_files(
        self,
        estimate_paths: Sequence[Path],
        truth_paths: Sequence[Path],
        *,
        pooled: bool = False,
    ) -> EvalReport | PooledReport:
        if not estimate_paths:
            raise EvaluationError("At least one --estimates file is required")
        if len(estimate_paths) != len(truth_paths):
            raise EvaluationError(
                f"Got {len(estimate_paths)} estimates files but {len(truth_paths)} truth files"
            )
        pairs = [(read_hr_series(e), read_truth(t)) for e, t in zip(estimate_paths, truth_paths)]
        if not pooled:
            if len(pairs) != 1:
                raise EvaluationError("Several estimates/truth pairs need --pooled")
            return evaluate(*pairs[0])
        return evaluate_pooled(pairs)

    def synthesize(
        self,
        motion: tuple[float, Sequence[float], Sequence[float]],
        heart: tuple[float, Sequence[float], Sequence[float]],
        *,
        duration_s: float,
        sample_rate_hz: float = 125.0,
        noise_rms: float = 0.0,
        seed: int = 0,
        artifact_gain: float = 1.0,
    ) -> Recording:
        """Synthetic recording: PPG = heartbeat + gain * motion, acc_x = motion, acc_y/acc_z noise only.

        Each column gets its own white noise draw from a generator seeded with ``seed``.
        """
        if not (math.isfinite(duration_s) and duration_s > 0):
            raise SignalError(f"Duration must be positive, got {duration_s}")
        n_samples = int(round(duration_s * sample_rate_hz))
        motion_series = synth_harmonic(motion[0], motion[1], motion[2], 0.0, n_samples, sample_rate_hz)
        heart_series = synth_harmonic(heart[0], heart[1], heart[2], 0.0, n_samples, sample_rate_hz)
        clean_ppg = SampledSignal(heart_series.samples + artifact_gain * motion_series.samples, sample_rate_hz)
        silent = SampledSignal(np.zeros(n_samples), sample_rate_hz)

        rng = np.random.default_rng(seed)
        columns = [clean_ppg, clean_ppg, motion_series, silent, silent]
        noisy = [add_white_noise(column, noise_rms, rng) for column in columns]
        return Recording(ppg=(noisy[0], noisy[1]), acc=MultiAxisSignal((noisy[2], noisy[3], noisy[4])))

    def _source(
        self,
        recording: Recording,
        *,
        signal: str,
        channel: int,
        combine: CombineMode | None,
    ) -> SampledSignal:
        if signal == "ppg":
            return recording.ppg_channel(channel)
        if signal == "acc":
            return _acc_signal(recording.acc, combine or CombineMode("l2"))
        raise SignalError(f"Unknown signal '{signal}'. Use ppg or acc")
