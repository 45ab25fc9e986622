"""Per-recording heart-rate estimation: accelerometer fit, joint PPG fit, optional median."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import signal as sps

from hsumhr.core.errors import SignalError, WindowError
from hsumhr.core.harmonic_fit import combined_samples, fit_multiaxis
from hsumhr.core.joint_model import fit_heart_fundamental
from hsumhr.core.model import (
    HrSeries,
    HrWindow,
    HsumFit,
    JointFit,
    MultiAxisSignal,
    PipelineConfig,
    SampledSignal,
    WindowView,
)
from hsumhr.core.signal import check_window_capacity, mean_remove, segment

LOGGER = logging.getLogger(__name__)


def _relative_error_energy(se_p: float, acc_energy: float) -> float:
    if acc_energy > 0.0:
        return se_p / acc_energy
    return 0.0 if se_p == 0.0 else math.inf


def fit_window(
    ppg_window: WindowView,
    acc_windows: tuple[WindowView, WindowView, WindowView],
    cfg: PipelineConfig,
) -> tuple[HsumFit, JointFit, np.ndarray]:
    """Accelerometer fit, joint PPG fit, and the acceleration samples the combine mode selected."""
    rate = ppg_window.sample_rate_hz
    motion = fit_multiaxis(acc_windows, cfg.acc_grid, cfg.motion_order, rate, cfg.combine)
    joint = fit_heart_fundamental(
        ppg_window,
        motion.f0_hz,
        cfg.hr_grid,
        cfg.motion_order,
        cfg.heart_order,
        rate,
        collision_tol_hz=cfg.collision_tol_hz,
        energy_floor=cfg.energy_floor,
        cap_heart_order=cfg.cap_heart_order,
    )
    return motion, joint, combined_samples(acc_windows, motion)


def prepare_windows(
    ppg_window: WindowView,
    acc_windows: tuple[WindowView, WindowView, WindowView],
    cfg: PipelineConfig,
) -> tuple[WindowView, tuple[WindowView, WindowView, WindowView]]:
    if not cfg.mean_remove:
        return ppg_window, acc_windows
    return mean_remove(ppg_window), tuple(mean_remove(w) for w in acc_windows)


def _estimate_window(
    ppg_window: WindowView,
    acc_windows: tuple[WindowView, WindowView, WindowView],
    cfg: PipelineConfig,
) -> HrWindow:
    ppg_window, acc_windows = prepare_windows(ppg_window, acc_windows, cfg)
    motion, joint, acc_samples = fit_window(ppg_window, acc_windows, cfg)
    acc_energy = float(np.dot(acc_samples, acc_samples))
    LOGGER.debug(
        "window %d: f_oa=%.2f Hz f_oh=%.2f Hz se_p=%.6g",
        ppg_window.index,
        motion.f0_hz,
        joint.f_oh_hz,
        joint.se_p,
    )
    return HrWindow(
        index=ppg_window.index,
        start_time_s=ppg_window.start_time_s,
        hr_bpm=joint.hr_bpm,
        f_oa_hz=motion.f0_hz,
        se_p=joint.se_p,
        relative_error_energy=_relative_error_energy(joint.se_p, acc_energy),
        collision_flag=joint.collision_flag,
        weak_heart=joint.weak_heart,
    )


def estimate_hr(ppg: SampledSignal, acc: MultiAxisSignal, cfg: PipelineConfig) -> HrSeries:
    """Estimate heart rate for every window of a synchronized PPG/acceleration pair."""
    if len(ppg) != len(acc) or ppg.sample_rate_hz != acc.sample_rate_hz:
        raise SignalError(
            f"PPG ({len(ppg)} @ {ppg.sample_rate_hz:g} Hz) and acceleration "
            f"({len(acc)} @ {acc.sample_rate_hz:g} Hz) must share length and rate"
        )
    if cfg.workers < 1:
        raise WindowError(f"Worker count must be at least 1, got {cfg.workers}")
    check_window_capacity(cfg.plan, ppg.sample_rate_hz, max(cfg.motion_order, cfg.heart_order))

    ppg_windows = segment(ppg, cfg.plan)
    axis_windows = [segment(axis, cfg.plan) for axis in acc.axes]
    jobs = [(w, (axis_windows[0][i], axis_windows[1][i], axis_windows[2][i])) for i, w in enumerate(ppg_windows)]

    if cfg.workers == 1:
        windows = [_estimate_window(p, a, cfg) for p, a in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            windows = list(pool.map(lambda job: _estimate_window(job[0], job[1], cfg), jobs))

    warnings = tuple(
        f"window {w.index}: heart fundamental collides with motion harmonics" for w in windows if w.collision_flag
    ) + tuple(f"window {w.index}: weak heart component" for w in windows if w.weak_heart)
    series = HrSeries(windows=tuple(windows), method="hsum", warnings=warnings)
    LOGGER.info("estimated %d windows (%d flagged)", len(series), len(warnings))
    if cfg.median:
        series = median3(series)
    return series


def median3(series: HrSeries) -> HrSeries:
    """Three-point median on ``hr_bpm``; the first and last windows pass through unchanged."""
    if len(series) == 0:
        raise WindowError("Cannot median-filter an empty HR series")
    values = series.hr_bpm
    filtered = values.copy()
    if len(values) >= 3:
        filtered[1:-1] = sps.medfilt(values, kernel_size=3)[1:-1]
    return series.with_hr(filtered, median_filtered=True)
