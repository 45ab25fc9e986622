"""Signal representation helpers: windowing, harmonic synthesis, conditioning."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hsumhr.core.errors import NyquistError, SignalError, WindowError
from hsumhr.core.model import MultiAxisSignal, SampledSignal, WindowPlan, WindowView

LOGGER = logging.getLogger(__name__)


def harmonic_basis(f0_hz: float, order: int, n_samples: int, sample_rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """Return the (n_samples, order) cosine and sine blocks of a harmonic series at ``f0_hz``."""
    n = np.arange(n_samples, dtype=np.float64)
    k = np.arange(1, order + 1, dtype=np.float64)
    phase = (2.0 * np.pi * f0_hz / sample_rate_hz) * np.outer(n, k)
    return np.cos(phase), np.sin(phase)


def check_nyquist(f0_hz: float, order: int, sample_rate_hz: float, *, context: str = "harmonic") -> None:
    if order * f0_hz >= sample_rate_hz / 2.0:
        raise NyquistError(
            f"{context}: harmonic {order} of {f0_hz:g} Hz ({order * f0_hz:g} Hz) is not below "
            f"Nyquist ({sample_rate_hz / 2.0:g} Hz)"
        )


def segment(signal: SampledSignal, plan: WindowPlan) -> tuple[WindowView, ...]:
    """Cut ``signal`` into full-length windows starting at 0, hop, 2*hop, ...

    Trailing samples that cannot fill a whole window are dropped.
    """
    window_len = plan.window_len_samples(signal.sample_rate_hz)
    hop = plan.hop_samples(signal.sample_rate_hz)
    count = window_count(len(signal), window_len, hop)
    if count == 0:
        raise WindowError(
            f"Signal too short: {len(signal)} samples, one window needs {window_len}"
        )
    frames = sliding_window_view(signal.samples, window_len)[::hop][:count]
    return tuple(
        WindowView(index=i, start=i * hop, samples=frame, sample_rate_hz=signal.sample_rate_hz)
        for i, frame in enumerate(frames)
    )


def window_count(n_samples: int, window_len: int, hop: int) -> int:
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // hop + 1


def check_window_capacity(plan: WindowPlan, sample_rate_hz: float, max_order: int) -> None:
    """Require windows long enough for an overdetermined fit of order ``max_order``."""
    window_len = plan.window_len_samples(sample_rate_hz)
    needed = 2 * (2 * max_order + 1)
    if window_len < needed:
        raise WindowError(
            f"Window of {window_len} samples is too small for order {max_order}; need at least {needed}"
        )


def synth_harmonic(
    f0_hz: float,
    cos_amplitudes: Sequence[float],
    sin_amplitudes: Sequence[float],
    dc: float,
    n_samples: int,
    sample_rate_hz: float,
) -> SampledSignal:
    """Generate ``dc + sum_k a_k cos(2 pi k n f0/fs) + b_k sin(2 pi k n f0/fs)``."""
    a = np.asarray(cos_amplitudes, dtype=np.float64)
    b = np.asarray(sin_amplitudes, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise SignalError(
            f"Cosine and sine amplitude vectors must have equal length, got {a.shape} and {b.shape}"
        )
    if f0_hz < 0:
        raise SignalError(f"Fundamental frequency must be non-negative, got {f0_hz}")
    if n_samples < 0:
        raise SignalError(f"Sample count must be non-negative, got {n_samples}")
    order = int(a.shape[0])
    if order:
        check_nyquist(f0_hz, order, sample_rate_hz, context="synth_harmonic")
    cos_block, sin_block = harmonic_basis(f0_hz, order, n_samples, sample_rate_hz)
    samples = dc + cos_block @ a + sin_block @ b
    return SampledSignal(samples=samples, sample_rate_hz=sample_rate_hz)


def mean_remove(window: WindowView) -> WindowView:
    if len(window) == 0:
        return window
    return window.with_samples(window.samples - window.samples.mean())


def magnitude_samples(axes: Sequence[np.ndarray]) -> np.ndarray:
    return np.linalg.norm(np.vstack(axes), axis=0)


def magnitude(acc: MultiAxisSignal) -> SampledSignal:
    """Per-sample Euclidean norm of the three acceleration axes."""
    samples = magnitude_samples([axis.samples for axis in acc.axes])
    return SampledSignal(samples=samples, sample_rate_hz=acc.sample_rate_hz)


def add_white_noise(signal: SampledSignal, rms: float, rng: np.random.Generator) -> SampledSignal:
    if rms < 0:
        raise SignalError(f"Noise RMS must be non-negative, got {rms}")
    if rms == 0:
        return signal
    noisy = signal.samples + rng.normal(0.0, rms, size=len(signal))
    return SampledSignal(samples=noisy, sample_rate_hz=signal.sample_rate_hz)
