from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsumhr.core.errors import NyquistError, SignalError, WindowError
from hsumhr.core.model import MultiAxisSignal, SampledSignal, WindowPlan, WindowView
from hsumhr.core.signal import (
    add_white_noise,
    check_window_capacity,
    magnitude,
    mean_remove,
    segment,
    synth_harmonic,
    window_count,
)


def _signal(n: int, fs: float = 125.0) -> SampledSignal:
    return SampledSignal(np.arange(n, dtype=float), fs)


def test_segment_default_plan_on_300_seconds() -> None:
    windows = segment(_signal(37500), WindowPlan())
    assert len(windows) == 147
    assert all(len(w) == 1000 for w in windows)
    assert windows[-1].start == 146 * 250


def test_segment_exactly_one_window() -> None:
    windows = segment(_signal(1000), WindowPlan())
    assert len(windows) == 1
    assert windows[0].start == 0
    assert windows[0].samples[0] == 0.0


def test_segment_too_short() -> None:
    with pytest.raises(WindowError, match="too short"):
        segment(_signal(999), WindowPlan())


def test_segment_drops_trailing_partial_window() -> None:
    windows = segment(_signal(1249), WindowPlan())
    assert len(windows) == 1
    windows = segment(_signal(1250), WindowPlan())
    assert len(windows) == 2
    np.testing.assert_array_equal(windows[1].samples, np.arange(250, 1250, dtype=float))


@given(
    n=st.integers(min_value=10, max_value=600),
    window=st.integers(min_value=1, max_value=10),
    hop=st.integers(min_value=1, max_value=10),
)
@settings(max_examples=100, deadline=None)
def test_segment_starts_form_arithmetic_sequence(n: int, window: int, hop: int) -> None:
    hop = min(hop, window)
    plan = WindowPlan(window_len_s=window / 10.0, hop_s=hop / 10.0)
    windows = segment(SampledSignal(np.zeros(n), 10.0), plan)
    starts = np.array([w.start for w in windows])
    assert len(windows) == window_count(n, window, hop)
    np.testing.assert_array_equal(starts, np.arange(len(windows)) * hop)
    assert all(len(w) == window for w in windows)


def test_window_plan_rejects_hop_longer_than_window() -> None:
    with pytest.raises(WindowError):
        WindowPlan(window_len_s=2.0, hop_s=3.0)


def test_window_plan_sample_counts_at_125_hz() -> None:
    plan = WindowPlan()
    assert plan.window_len_samples(125.0) == 1000
    assert plan.hop_samples(125.0) == 250


def test_window_capacity_for_default_orders() -> None:
    check_window_capacity(WindowPlan(), 125.0, 17)
    with pytest.raises(WindowError):
        check_window_capacity(WindowPlan(window_len_s=0.5, hop_s=0.5), 125.0, 17)


def test_sampled_signal_rejects_non_finite_and_bad_rate() -> None:
    with pytest.raises(SignalError, match="index 2"):
        SampledSignal([0.0, 1.0, float("nan")], 125.0)
    with pytest.raises(SignalError):
        SampledSignal([0.0, 1.0], 0.0)


def test_multiaxis_requires_matching_axes() -> None:
    with pytest.raises(SignalError):
        MultiAxisSignal((_signal(10), _signal(10), _signal(11)))


def test_synth_dc_only() -> None:
    out = synth_harmonic(0.0, [0.0, 0.0], [0.0, 0.0], 1.0, 50, 125.0)
    np.testing.assert_array_equal(out.samples, np.ones(50))


def test_synth_cosine_peaks_at_nearest_fft_bin() -> None:
    out = synth_harmonic(1.5, [1.0], [0.0], 0.0, 1000, 125.0)
    spectrum = np.abs(np.fft.rfft(out.samples, n=2048))
    freqs = np.fft.rfftfreq(2048, d=1 / 125.0)
    assert int(np.argmax(spectrum)) == int(np.argmin(np.abs(freqs - 1.5)))


def test_synth_formula() -> None:
    out = synth_harmonic(2.0, [1.0, 0.5], [0.25, -1.0], 0.3, 40, 125.0)
    n = np.arange(40)
    w = 2 * np.pi * 2.0 / 125.0
    expected = 0.3 + np.cos(w * n) + 0.5 * np.cos(2 * w * n) + 0.25 * np.sin(w * n) - np.sin(2 * w * n)
    np.testing.assert_allclose(out.samples, expected, atol=1e-12)


def test_synth_above_nyquist_rejected() -> None:
    with pytest.raises(NyquistError):
        synth_harmonic(20.0, [1.0, 1.0, 1.0, 1.0], [0.0] * 4, 0.0, 100, 125.0)


def test_synth_mismatched_amplitudes_rejected() -> None:
    with pytest.raises(SignalError):
        synth_harmonic(1.0, [1.0, 2.0], [1.0], 0.0, 100, 125.0)


def _view(samples: list[float]) -> WindowView:
    return WindowView(index=0, start=0, samples=np.asarray(samples, dtype=float), sample_rate_hz=125.0)


def test_mean_remove_examples() -> None:
    np.testing.assert_array_equal(mean_remove(_view([5.0, 5.0, 5.0])).samples, [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(mean_remove(_view([0.0, 0.0])).samples, [0.0, 0.0])
    np.testing.assert_allclose(mean_remove(_view([1.0, 2.0, 3.0])).samples, [-1.0, 0.0, 1.0])


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=200))
@settings(max_examples=100, deadline=None)
def test_mean_remove_zero_mean_and_idempotent(values: list[float]) -> None:
    once = mean_remove(_view(values))
    twice = mean_remove(once)
    rms = float(np.sqrt(np.mean(np.square(values)))) or 1.0
    assert abs(float(np.mean(once.samples))) <= 1e-12 * rms + 1e-300
    np.testing.assert_allclose(twice.samples, once.samples, atol=1e-9 * rms)


def test_magnitude_is_euclidean_norm() -> None:
    acc = MultiAxisSignal(
        (
            SampledSignal([3.0, 0.0], 125.0),
            SampledSignal([4.0, 0.0], 125.0),
            SampledSignal([0.0, 2.0], 125.0),
        )
    )
    np.testing.assert_allclose(magnitude(acc).samples, [5.0, 2.0])


def test_add_white_noise_is_seeded() -> None:
    base = SampledSignal(np.zeros(500), 125.0)
    a = add_white_noise(base, 0.5, np.random.default_rng(3))
    b = add_white_noise(base, 0.5, np.random.default_rng(3))
    np.testing.assert_array_equal(a.samples, b.samples)
    assert add_white_noise(base, 0.0, np.random.default_rng(3)) is base
