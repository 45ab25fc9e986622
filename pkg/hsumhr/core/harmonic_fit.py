"""Single-series harmonic-sum fitting and fundamental-frequency grid search."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import replace

import numpy as np
import scipy.linalg

from hsumhr.core.errors import ModelError
from hsumhr.core.model import (
    CombineMode,
    DesignMatrix,
    GridSpec,
    HarmonicBlock,
    HsumFit,
    LstsqResult,
    SampledSignal,
    WindowView,
)
from hsumhr.core.screening import screen_single
from hsumhr.core.signal import check_nyquist, harmonic_basis, magnitude_samples

LOGGER = logging.getLogger(__name__)

# SE values closer than this fraction of the window energy are treated as ties
TIE_REL_TOL = 1e-12
# singular values below this fraction of the largest one count as zero
RANK_RCOND = 1e-10
# screened SE within this fraction of the energy of the best exact SE is re-solved exactly
SCREEN_REL_MARGIN = 1e-6


def as_samples(window: WindowView | np.ndarray) -> np.ndarray:
    if isinstance(window, WindowView):
        return window.samples
    return np.asarray(window, dtype=np.float64)


def block_columns(block: HarmonicBlock, n_samples: int, sample_rate_hz: float) -> np.ndarray:
    cos_block, sin_block = harmonic_basis(block.f0_hz, block.order, n_samples, sample_rate_hz)
    parts = [cos_block, sin_block]
    if block.include_dc:
        parts.insert(0, np.ones((n_samples, 1)))
    return np.hstack(parts)


def assemble_design(blocks: tuple[HarmonicBlock, ...], n_samples: int, sample_rate_hz: float) -> DesignMatrix:
    """Build the design matrix for the given harmonic blocks, checking Nyquist and determinacy."""
    for block in blocks:
        if block.order < 1:
            raise ModelError(f"Harmonic order must be at least 1, got {block.order}")
        check_nyquist(block.f0_hz, block.order, sample_rate_hz, context="design")
    columns = sum(block.columns for block in blocks)
    if n_samples <= columns:
        raise ModelError(
            f"Underdetermined fit: {n_samples} samples for {columns} model columns"
        )
    matrix = np.hstack([block_columns(block, n_samples, sample_rate_hz) for block in blocks])
    return DesignMatrix(matrix=matrix, sample_rate_hz=sample_rate_hz, blocks=blocks)


def build_design(
    f0_hz: float,
    order: int,
    n_samples: int,
    sample_rate_hz: float,
    include_dc: bool = True,
) -> DesignMatrix:
    """Columns: DC (optional), cos(2 pi k n f0/fs) for k=1..M, then sin for k=1..M."""
    return assemble_design((HarmonicBlock(f0_hz, order, include_dc),), n_samples, sample_rate_hz)


def solve_amplitudes(design: DesignMatrix, window: WindowView | np.ndarray) -> LstsqResult:
    """Minimum-norm least-squares amplitudes via the SVD.

    Singular values below ``RANK_RCOND`` of the largest are dropped, so columns that
    coincide up to rounding share their amplitude instead of cancelling. Rank-deficient
    designs are reported through ``rank_deficient`` rather than raised.
    """
    x = as_samples(window)
    if x.shape[0] != design.rows:
        raise ModelError(f"Window has {x.shape[0]} samples but design has {design.rows} rows")
    amplitudes, _, rank, _ = scipy.linalg.lstsq(design.matrix, x, cond=RANK_RCOND, lapack_driver="gelsd")
    residual = x - design.matrix @ amplitudes
    se = float(np.dot(residual, residual))
    return LstsqResult(
        amplitudes=amplitudes,
        se=se,
        rank=int(rank),
        rank_deficient=int(rank) < design.columns,
    )


def squared_error(design: DesignMatrix, window: WindowView | np.ndarray) -> float:
    """Residual energy after the least-squares fit, i.e. x^T (I - P) x."""
    return solve_amplitudes(design, window).se


def relative_error(se: float, energy: float) -> float:
    # an empty window explains nothing
    if energy <= 0.0:
        return 1.0
    return min(1.0, max(0.0, se / energy))


def argmin_lowest(errors: np.ndarray, energy: float, rel_tol: float = TIE_REL_TOL) -> int:
    """Index of the lowest grid point whose SE is within round-off of the minimum."""
    threshold = float(errors.min()) + rel_tol * max(energy, 0.0)
    return int(np.flatnonzero(errors <= threshold)[0])


def refine_argmin(screened: np.ndarray, energy: float, exact_se: Callable[[int], float]) -> int:
    """``argmin_lowest`` over exact SE, evaluated only where the screened SE comes close.

    Grid points are re-solved until none left unsolved has a screened SE within
    ``SCREEN_REL_MARGIN`` of the best exact SE found so far.
    """
    if energy <= 0.0:
        return 0
    margin = SCREEN_REL_MARGIN * energy
    errors = np.full(screened.shape[0], np.inf)
    threshold = float(screened.min()) + margin
    while True:
        pending = np.flatnonzero((screened <= threshold) & np.isinf(errors))
        if pending.size == 0:
            break
        for i in pending:
            errors[i] = exact_se(int(i))
        threshold = float(errors.min()) + margin
    LOGGER.debug("refined %d of %d grid points", int(np.isfinite(errors).sum()), errors.shape[0])
    return argmin_lowest(errors, energy)


def se_curve(
    window: WindowView | np.ndarray,
    grid: GridSpec,
    order: int,
    sample_rate_hz: float,
    include_dc: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Squared error at every grid frequency; returns ``(frequencies, se)``."""
    x = as_samples(window)
    freqs = grid.frequencies()
    check_nyquist(float(freqs[-1]), order, sample_rate_hz, context="grid maximum")
    errors = np.empty(freqs.shape[0])
    for i, f0 in enumerate(freqs):
        design = build_design(float(f0), order, x.shape[0], sample_rate_hz, include_dc)
        errors[i] = squared_error(design, x)
    return freqs, errors


def fit_fundamental(
    window: WindowView | np.ndarray,
    grid: GridSpec,
    order: int,
    sample_rate_hz: float,
    include_dc: bool = True,
) -> HsumFit:
    """Grid-search the fundamental that minimizes SE; ties go to the lowest frequency.

    Picks the same grid point as ``argmin_lowest`` over ``se_curve`` but only solves the
    full least-squares problem where the closed-form screen cannot rule a point out.
    """
    x = as_samples(window)
    freqs = grid.frequencies()
    check_nyquist(float(freqs[-1]), order, sample_rate_hz, context="grid maximum")
    # order and determinacy checks
    build_design(float(freqs[0]), order, x.shape[0], sample_rate_hz, include_dc)
    energy = float(np.dot(x, x))
    screened = screen_single(x, 2.0 * np.pi * freqs / sample_rate_hz, order, include_dc)

    def exact_se(i: int) -> float:
        return squared_error(build_design(float(freqs[i]), order, x.shape[0], sample_rate_hz, include_dc), x)

    f0 = float(freqs[refine_argmin(screened, energy, exact_se)])
    solved = solve_amplitudes(build_design(f0, order, x.shape[0], sample_rate_hz, include_dc), x)
    LOGGER.debug("fundamental %.2f Hz se=%.6g energy=%.6g", f0, solved.se, energy)
    return HsumFit(
        f0_hz=f0,
        amplitudes=solved.amplitudes,
        se=solved.se,
        order=order,
        relative_se=relative_error(solved.se, energy),
        energy=energy,
        include_dc=include_dc,
        rank_deficient=solved.rank_deficient,
    )


def fit_multiaxis(
    axes: tuple[WindowView, WindowView, WindowView],
    grid: GridSpec,
    order: int,
    sample_rate_hz: float,
    combine: CombineMode,
    include_dc: bool = True,
) -> HsumFit:
    """Estimate the motion fundamental from three acceleration windows.

    ``best-axis`` fits each axis and keeps the smallest relative SE (lowest axis on ties),
    ``l2`` fits the per-sample magnitude, ``axis:i`` fits a single axis.
    """
    if len(axes) != 3:
        raise ModelError(f"Expected 3 acceleration windows, got {len(axes)}")
    if combine.kind == "axis":
        fit = fit_fundamental(axes[combine.axis], grid, order, sample_rate_hz, include_dc)
        return _with_axis(fit, combine.axis)
    if combine.kind == "l2":
        samples = magnitude_samples(tuple(axis.samples for axis in axes))
        return fit_fundamental(samples, grid, order, sample_rate_hz, include_dc)
    if combine.kind == "best-axis":
        fits = [fit_fundamental(axis, grid, order, sample_rate_hz, include_dc) for axis in axes]
        best = min(range(3), key=lambda i: (fits[i].relative_se, i))
        return _with_axis(fits[best], best)
    raise ModelError(f"Unsupported combine mode '{combine}'")


def combined_samples(axes: tuple[WindowView, WindowView, WindowView], fit: HsumFit) -> np.ndarray:
    """The acceleration samples a multi-axis fit was computed on."""
    if fit.axis is not None:
        return axes[fit.axis].samples
    return magnitude_samples(tuple(axis.samples for axis in axes))


def _with_axis(fit: HsumFit, axis: int) -> HsumFit:
    return replace(fit, axis=axis)


def reconstruct(fit: HsumFit, n_samples: int, sample_rate_hz: float) -> SampledSignal:
    design = build_design(fit.f0_hz, fit.order, n_samples, sample_rate_hz, fit.include_dc)
    return SampledSignal(samples=design.matrix @ fit.amplitudes, sample_rate_hz=sample_rate_hz)
