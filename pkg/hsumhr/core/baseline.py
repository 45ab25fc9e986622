"""Short-time Fourier transform peak picking, kept as a comparison baseline."""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.signal import windows as sp_windows

from hsumhr.core.errors import WindowError
from hsumhr.core.model import HrSeries, HrWindow, SampledSignal, Spectrogram, StftConfig
from hsumhr.core.signal import segment

LOGGER = logging.getLogger(__name__)


def _check_config(cfg: StftConfig, sample_rate_hz: float) -> int:
    window_len = cfg.plan.window_len_samples(sample_rate_hz)
    if cfg.fft_len < window_len:
        raise WindowError(f"FFT length {cfg.fft_len} is shorter than the window ({window_len} samples)")
    if cfg.band is not None and not (0 <= cfg.band[0] < cfg.band[1]):
        raise WindowError(f"Invalid peak search band {cfg.band}")
    return window_len


def _magnitudes(signal: SampledSignal, cfg: StftConfig) -> tuple[np.ndarray, np.ndarray, list[float]]:
    window_len = _check_config(cfg, signal.sample_rate_hz)
    frames = segment(signal, cfg.plan)
    # symmetric Hann: 0.5 - 0.5 cos(2 pi n / (N - 1))
    taper = sp_windows.hann(window_len, sym=True)
    stacked = np.vstack([frame.samples for frame in frames]) * taper
    spectra = np.abs(np.fft.rfft(stacked, n=cfg.fft_len, axis=1))
    freqs = np.fft.rfftfreq(cfg.fft_len, d=1.0 / signal.sample_rate_hz)
    return spectra, freqs, [frame.start_time_s for frame in frames]


def spectrogram(signal: SampledSignal, cfg: StftConfig) -> Spectrogram:
    """Full-band one-sided magnitude STFT, windows x bins."""
    spectra, freqs, starts = _magnitudes(signal, cfg)
    return Spectrogram(magnitudes=spectra, freqs_hz=freqs, window_starts_s=np.asarray(starts))


def stft_peak_bpm(signal: SampledSignal, cfg: StftConfig) -> HrSeries:
    """Per-window largest-magnitude bin inside ``cfg.band`` (or the full band), in BPM.

    A window whose spectrum is all zeros in the band has no peak and reports NaN.
    """
    spectra, freqs, starts = _magnitudes(signal, cfg)
    if cfg.band is None:
        mask = np.ones(freqs.shape[0], dtype=bool)
    else:
        mask = (freqs >= cfg.band[0]) & (freqs <= cfg.band[1])
    if not mask.any():
        raise WindowError(f"Peak search band {cfg.band} contains no FFT bin")
    band_freqs = freqs[mask]

    windows: list[HrWindow] = []
    warnings: list[str] = []
    for index, (row, start) in enumerate(zip(spectra[:, mask], starts)):
        if not np.any(row > 0.0):
            hr = math.nan
            warnings.append(f"window {index}: no spectral peak")
        else:
            hr = 60.0 * float(band_freqs[int(np.argmax(row))])
        windows.append(
            HrWindow(
                index=index,
                start_time_s=start,
                hr_bpm=hr,
                f_oa_hz=math.nan,
                se_p=math.nan,
                relative_error_energy=math.nan,
            )
        )
    if warnings:
        LOGGER.warning("%d of %d windows had no spectral peak", len(warnings), len(windows))
    return HrSeries(windows=tuple(windows), method="stft", warnings=tuple(warnings))


def bin_width_bpm(sample_rate_hz: float, fft_len: int) -> float:
    return 60.0 * sample_rate_hz / fft_len


def onesided_energy(magnitudes: np.ndarray, fft_len: int) -> float:
    """Time-domain energy implied by a one-sided magnitude spectrum (Parseval)."""
    power = np.square(magnitudes)
    interior_end = fft_len // 2 if fft_len % 2 == 0 else fft_len // 2 + 1
    total = power[0] + 2.0 * power[1:interior_end].sum()
    if fft_len % 2 == 0:
        total += power[fft_len // 2]
    return float(total / fft_len)


def peak_coincidence(ppg: HrSeries, acc: HrSeries, tol_bpm: float) -> float:
    """Fraction of windows whose PPG spectral peak sits within ``tol_bpm`` of the acceleration peak."""
    if len(ppg) != len(acc):
        raise WindowError(f"Series lengths differ: {len(ppg)} vs {len(acc)}")
    if len(ppg) == 0:
        return 0.0
    close = np.abs(ppg.hr_bpm - acc.hr_bpm) <= tol_bpm
    return float(np.mean(close))
