from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsumhr.core.errors import ModelError, NyquistError
from hsumhr.core.harmonic_fit import (
    argmin_lowest,
    build_design,
    fit_fundamental,
    fit_multiaxis,
    reconstruct,
    relative_error,
    se_curve,
    solve_amplitudes,
    squared_error,
)
from hsumhr.core.model import CombineMode, GridSpec, WindowView
from hsumhr.core.signal import synth_harmonic

FS = 125.0
ACC_GRID = GridSpec(1.0, 3.0, 0.01)
SMALL_GRID = GridSpec(1.0, 2.0, 0.05)

amplitude = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


def _view(samples: np.ndarray, index: int = 0) -> WindowView:
    return WindowView(index=index, start=0, samples=samples, sample_rate_hz=FS)


def test_design_first_row_is_dc_cos_sin() -> None:
    design = build_design(1.7, 1, 8, FS)
    np.testing.assert_allclose(design.matrix[0], [1.0, 1.0, 0.0])


def test_design_quarter_period_row() -> None:
    design = build_design(FS / 4, 1, 8, FS)
    np.testing.assert_allclose(design.matrix[1], [1.0, 0.0, 1.0], atol=1e-12)


def test_design_default_order_is_below_nyquist() -> None:
    design = build_design(3.0, 17, 1000, FS)
    assert design.columns == 35
    assert design.rows == 1000
    assert np.all(np.abs(design.matrix) <= 1.0)


def test_design_without_dc_has_2m_columns() -> None:
    design = build_design(1.0, 7, 1000, FS, include_dc=False)
    assert design.columns == 14


def test_design_rejects_nyquist_and_underdetermined() -> None:
    with pytest.raises(NyquistError):
        build_design(4.0, 17, 1000, FS)
    with pytest.raises(ModelError, match="Underdetermined"):
        build_design(1.0, 1, 3, FS)
    with pytest.raises(ModelError):
        build_design(1.0, 0, 100, FS)


def test_solve_recovers_in_span_amplitudes() -> None:
    design = build_design(1.3, 3, 1000, FS)
    truth = np.array([0.4, 1.0, -0.5, 0.2, 0.3, 0.0, -0.7])
    result = solve_amplitudes(design, design.matrix @ truth)
    np.testing.assert_allclose(result.amplitudes, truth, rtol=0, atol=1e-8 * np.linalg.norm(truth))
    assert not result.rank_deficient
    assert result.se <= 1e-8 * float(truth @ design.matrix.T @ design.matrix @ truth)


def test_solve_zero_window() -> None:
    design = build_design(1.3, 3, 200, FS)
    result = solve_amplitudes(design, np.zeros(200))
    np.testing.assert_array_equal(result.amplitudes, np.zeros(7))
    assert result.se == 0.0


def test_se_equals_energy_of_orthogonal_part(qr_se) -> None:
    rng = np.random.default_rng(11)
    design = build_design(1.1, 4, 500, FS)
    q, _ = np.linalg.qr(design.matrix)
    z = rng.normal(size=500)
    orthogonal = z - q @ (q.T @ z)
    x = design.matrix @ rng.normal(size=design.columns) + orthogonal
    se = squared_error(design, x)
    assert se == pytest.approx(float(orthogonal @ orthogonal), rel=1e-6)
    assert se == pytest.approx(qr_se(design.matrix, x), rel=1e-6)
    # a window orthogonal to every column keeps all of its energy
    assert squared_error(design, orthogonal) == pytest.approx(float(orthogonal @ orthogonal), rel=1e-8)


def test_fit_on_grid_fundamental_exactly() -> None:
    x = synth_harmonic(1.5, [1.0, 0.4, 0.2], [0.3, -0.6, 0.1], 0.5, 1000, FS).samples
    fit = fit_fundamental(_view(x), ACC_GRID, 3, FS)
    assert fit.f0_hz == 1.5
    assert fit.relative_se < 1e-12
    assert fit.order == 3
    np.testing.assert_allclose(fit.amplitudes, [0.5, 1.0, 0.4, 0.2, 0.3, -0.6, 0.1], atol=1e-8)


def test_true_fundamental_strictly_minimizes_se(qr_se) -> None:
    x = synth_harmonic(1.5, [1.0, 0.4, 0.2], [0.3, -0.6, 0.1], 0.0, 1000, FS).samples
    freqs, errors = se_curve(x, ACC_GRID, 3, FS)
    true_index = int(np.flatnonzero(np.isclose(freqs, 1.5))[0])
    others = np.delete(errors, true_index)
    assert errors[true_index] < others.min()
    oracle = np.array([qr_se(build_design(float(f), 3, 1000, FS).matrix, x) for f in freqs])
    assert int(np.argmin(oracle)) == true_index


def test_off_grid_fundamental_lands_on_neighbour(qr_se) -> None:
    x = synth_harmonic(1.503, [1.0, 0.5], [0.0, 0.25], 0.0, 1000, FS).samples
    fit = fit_fundamental(x, ACC_GRID, 2, FS)
    assert fit.f0_hz in (1.5, 1.51)
    freqs = ACC_GRID.frequencies()
    oracle = np.array([qr_se(build_design(float(f), 2, 1000, FS).matrix, x) for f in freqs])
    assert fit.f0_hz == freqs[int(np.argmin(oracle))]


def test_relative_error_of_empty_window() -> None:
    assert relative_error(0.0, 0.0) == 1.0
    assert relative_error(2.0, 4.0) == 0.5


def test_ties_break_toward_lowest_frequency() -> None:
    errors = np.array([3.0, 1.0, 1.0 + 1e-15, 1.0, 2.0])
    assert argmin_lowest(errors, energy=10.0) == 1
    fit = fit_fundamental(np.zeros(500), SMALL_GRID, 2, FS)
    assert fit.f0_hz == 1.0
    assert fit.relative_se == 1.0


def test_multiaxis_identical_axes_all_modes_agree() -> None:
    x = synth_harmonic(1.8, [1.0, 0.5], [0.5, 0.2], 5.0, 1000, FS).samples
    axes = (_view(x, 0), _view(x, 0), _view(x, 0))
    results = {
        mode: fit_multiaxis(axes, ACC_GRID, 2, FS, CombineMode.parse(mode)).f0_hz
        for mode in ("best-axis", "l2", "axis:0", "axis:2")
    }
    assert set(results.values()) == {1.8}


def test_best_axis_picks_harmonic_axis_over_noise() -> None:
    rng = np.random.default_rng(5)
    harmonic = synth_harmonic(2.0, [1.0, 0.3], [0.0, 0.2], 0.0, 1000, FS).samples
    axes = (_view(rng.normal(size=1000)), _view(harmonic), _view(rng.normal(size=1000)))
    fit = fit_multiaxis(axes, ACC_GRID, 2, FS, CombineMode())
    assert fit.f0_hz == 2.0
    assert fit.axis == 1


def test_fixed_axis_mode() -> None:
    x = synth_harmonic(1.2, [1.0], [0.5], 0.0, 1000, FS).samples
    axes = (_view(x), _view(np.zeros(1000)), _view(np.zeros(1000)))
    fit = fit_multiaxis(axes, ACC_GRID, 1, FS, CombineMode("axis", 0))
    assert fit.f0_hz == 1.2
    assert fit.axis == 0


def test_reconstruct_matches_input_for_in_span_signal() -> None:
    x = synth_harmonic(1.25, [0.7, 0.1], [0.2, 0.0], -0.4, 500, FS).samples
    fit = fit_fundamental(x, SMALL_GRID, 2, FS)
    np.testing.assert_allclose(reconstruct(fit, 500, FS).samples, x, atol=1e-9)


@st.composite
def harmonic_windows(draw, max_order: int = 4):
    order = draw(st.integers(min_value=1, max_value=max_order))
    f0 = draw(st.floats(min_value=1.0, max_value=3.0))
    noise_seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    a = [draw(amplitude) for _ in range(order)]
    b = [draw(amplitude) for _ in range(order)]
    dc = draw(amplitude)
    x = synth_harmonic(f0, a, b, dc, 250, FS).samples
    x = x + np.random.default_rng(noise_seed).normal(0.0, 0.3, 250)
    return f0, order, x


@given(harmonic_windows())
@settings(max_examples=100, deadline=None)
def test_projection_is_idempotent(sample) -> None:
    f0, order, x = sample
    design = build_design(f0, order, x.shape[0], FS)
    first = solve_amplitudes(design, x).amplitudes
    again = solve_amplitudes(design, design.matrix @ first).amplitudes
    np.testing.assert_allclose(again, first, rtol=0, atol=1e-10 * (1.0 + np.linalg.norm(first)))


@given(harmonic_windows(), st.integers(min_value=1, max_value=3))
@settings(max_examples=100, deadline=None)
def test_se_does_not_grow_with_order(sample, extra: int) -> None:
    f0, order, x = sample
    energy = float(x @ x)
    low = squared_error(build_design(f0, order, x.shape[0], FS), x)
    high = squared_error(build_design(f0, order + extra, x.shape[0], FS), x)
    assert 0.0 <= high <= low + 1e-9 * energy
    assert low <= energy * (1.0 + 1e-12)


@given(harmonic_windows(max_order=2), st.integers(min_value=-8, max_value=8))
@settings(max_examples=100, deadline=None)
def test_scaling_keeps_argmin_and_scales_se(sample, exponent: int) -> None:
    _, order, x = sample
    c = 2.0**exponent
    base = fit_fundamental(x, SMALL_GRID, order, FS)
    scaled = fit_fundamental(c * x, SMALL_GRID, order, FS)
    assert scaled.f0_hz == base.f0_hz
    assert scaled.se == pytest.approx(c * c * base.se, rel=1e-9, abs=1e-12 * c * c)
    np.testing.assert_allclose(scaled.amplitudes, c * base.amplitudes, rtol=1e-9, atol=1e-12 * c)


@given(harmonic_windows())
@settings(max_examples=100, deadline=None)
def test_residual_is_orthogonal_to_columns(sample) -> None:
    f0, order, x = sample
    design = build_design(f0, order, x.shape[0], FS)
    residual = x - design.matrix @ solve_amplitudes(design, x).amplitudes
    column_norms = np.linalg.norm(design.matrix, axis=0)
    inner = np.abs(design.matrix.T @ residual)
    assert np.all(inner <= 1e-6 * np.linalg.norm(x) * column_norms + 1e-12)


@given(harmonic_windows(), st.booleans())
@settings(max_examples=100, deadline=None)
def test_fit_picks_the_exhaustive_argmin(sample, include_dc: bool) -> None:
    _, order, x = sample
    freqs, errors = se_curve(x, ACC_GRID, order, FS, include_dc)
    fit = fit_fundamental(x, ACC_GRID, order, FS, include_dc)
    assert fit.f0_hz == freqs[argmin_lowest(errors, float(x @ x))]
    assert fit.se == pytest.approx(float(errors.min()), rel=1e-9, abs=1e-12 * fit.energy)


def test_repeated_column_shares_its_amplitude() -> None:
    design = build_design(1.0, 2, 200, FS)
    doubled = replace(design, matrix=np.hstack([design.matrix[:, :3], design.matrix[:, 1:2]]))
    x = synth_harmonic(1.0, [1.0], [0.0], 0.0, 200, FS).samples
    solved = solve_amplitudes(doubled, x)
    assert solved.rank == 3
    assert solved.rank_deficient
    np.testing.assert_allclose(solved.amplitudes[[1, 3]], [0.5, 0.5], atol=1e-9)
