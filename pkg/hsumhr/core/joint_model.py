"""Joint motion + heart harmonic-sum model for PPG windows."""

from __future__ import annotations

import logging
import math

import numpy as np

from hsumhr.core.errors import GridError
from hsumhr.core.harmonic_fit import (
    as_samples,
    assemble_design,
    block_columns,
    refine_argmin,
    solve_amplitudes,
)
from hsumhr.core.model import (
    Decomposition,
    DesignMatrix,
    GridSpec,
    HarmonicBlock,
    JointFit,
    SampledSignal,
    WindowView,
)
from hsumhr.core.screening import screen_joint
from hsumhr.core.signal import check_nyquist, harmonic_basis

LOGGER = logging.getLogger(__name__)


def build_joint_design(
    f_oa_hz: float,
    motion_order: int,
    f_h_hz: float,
    heart_order: int,
    n_samples: int,
    sample_rate_hz: float,
) -> DesignMatrix:
    """``[W_oa | W_h]``: motion series with DC at ``f_oa_hz``, heart series without DC at ``f_h_hz``."""
    blocks = (
        HarmonicBlock(f_oa_hz, motion_order, include_dc=True),
        HarmonicBlock(f_h_hz, heart_order, include_dc=False),
    )
    return assemble_design(blocks, n_samples, sample_rate_hz)


def harmonics_collide(
    f_oa_hz: float,
    motion_order: int,
    f_h_hz: float,
    heart_order: int,
    tol_hz: float,
) -> bool:
    """True when some heart harmonic lies within ``tol_hz`` of some motion harmonic."""
    heart = f_h_hz * np.arange(1, heart_order + 1)
    motion = f_oa_hz * np.arange(1, motion_order + 1)
    return bool(np.any(np.abs(heart[:, None] - motion[None, :]) < tol_hz))


def heart_order_for(f_h_hz: float, heart_order: int, sample_rate_hz: float, cap: bool) -> int:
    """Heart order used at ``f_h_hz``; with ``cap`` it is lowered to stay below Nyquist."""
    if not cap:
        return heart_order
    below_nyquist = math.ceil(sample_rate_hz / (2.0 * f_h_hz)) - 1
    return max(1, min(heart_order, below_nyquist))


def fit_heart_fundamental(
    ppg_window: WindowView | np.ndarray,
    f_oa_hz: float,
    grid_h: GridSpec,
    motion_order: int,
    heart_order: int,
    sample_rate_hz: float,
    *,
    collision_tol_hz: float = 0.02,
    energy_floor: float = 1e-10,
    cap_heart_order: bool = False,
) -> JointFit:
    """Grid-search the heart fundamental minimizing the joint squared error ``SE_p``.

    The motion fundamental is held fixed. Grid points whose harmonics collide with the
    motion harmonics are still evaluated (minimum-norm solve); ties go to the lowest
    frequency.
    """
    x = as_samples(ppg_window)
    n_samples = int(x.shape[0])
    freqs = grid_h.frequencies()
    if freqs.shape[0] == 0:
        raise GridError("empty grid")
    check_nyquist(f_oa_hz, motion_order, sample_rate_hz, context="motion series")
    if not cap_heart_order:
        check_nyquist(float(freqs[-1]), heart_order, sample_rate_hz, context="heart grid maximum")

    # W_oa is shared by every grid point
    motion_block = HarmonicBlock(f_oa_hz, motion_order, include_dc=True)
    motion_columns = block_columns(motion_block, n_samples, sample_rate_hz)

    orders = np.array([heart_order_for(float(f_h), heart_order, sample_rate_hz, cap_heart_order) for f_h in freqs])
    # order and determinacy checks
    build_joint_design(f_oa_hz, motion_order, float(freqs[0]), int(orders[0]), n_samples, sample_rate_hz)
    omega_a = 2.0 * np.pi * f_oa_hz / sample_rate_hz
    omegas_h = 2.0 * np.pi * freqs / sample_rate_hz
    screened = np.empty(freqs.shape[0])
    for group_order in np.unique(orders):
        mask = orders == group_order
        screened[mask] = screen_joint(x, omega_a, motion_order, omegas_h[mask], int(group_order))

    def exact_se(i: int) -> float:
        f_h = float(freqs[i])
        design = _joint_from_motion(motion_block, motion_columns, f_h, int(orders[i]), n_samples, sample_rate_hz)
        return solve_amplitudes(design, x).se

    energy = float(np.dot(x, x))
    f_oh = float(freqs[refine_argmin(screened, energy, exact_se)])
    order = heart_order_for(f_oh, heart_order, sample_rate_hz, cap_heart_order)
    solved = solve_amplitudes(build_joint_design(f_oa_hz, motion_order, f_oh, order, n_samples, sample_rate_hz), x)

    split = motion_block.columns
    amplitudes_motion = solved.amplitudes[:split]
    amplitudes_heart = solved.amplitudes[split:]
    heart_energy = _heart_energy(amplitudes_heart, f_oh, order, n_samples, sample_rate_hz)
    collision = harmonics_collide(f_oa_hz, motion_order, f_oh, order, collision_tol_hz) or solved.rank_deficient
    weak = heart_energy < energy_floor * energy or energy == 0.0

    if collision:
        LOGGER.warning("heart fundamental %.2f Hz collides with motion harmonics of %.2f Hz", f_oh, f_oa_hz)
    if weak:
        LOGGER.info("weak heart component at %.2f Hz (energy %.3g of %.3g)", f_oh, heart_energy, energy)

    return JointFit(
        f_oa_hz=float(f_oa_hz),
        f_oh_hz=f_oh,
        motion_order=motion_order,
        heart_order=order,
        amplitudes_motion=amplitudes_motion,
        amplitudes_heart=amplitudes_heart,
        se_p=solved.se,
        energy=energy,
        collision_flag=collision,
        weak_heart=weak,
        rank_deficient=solved.rank_deficient,
    )


def _joint_from_motion(
    motion_block: HarmonicBlock,
    motion_columns: np.ndarray,
    f_h_hz: float,
    heart_order: int,
    n_samples: int,
    sample_rate_hz: float,
) -> DesignMatrix:
    heart_block = HarmonicBlock(f_h_hz, heart_order, include_dc=False)
    check_nyquist(f_h_hz, heart_order, sample_rate_hz, context="heart series")
    matrix = np.hstack([motion_columns, block_columns(heart_block, n_samples, sample_rate_hz)])
    return DesignMatrix(matrix=matrix, sample_rate_hz=sample_rate_hz, blocks=(motion_block, heart_block))


def _series(f0_hz: float, order: int, amplitudes: np.ndarray, n_samples: int, sample_rate_hz: float) -> np.ndarray:
    cos_block, sin_block = harmonic_basis(f0_hz, order, n_samples, sample_rate_hz)
    return cos_block @ amplitudes[:order] + sin_block @ amplitudes[order:]


def _heart_energy(amplitudes: np.ndarray, f_h_hz: float, order: int, n_samples: int, sample_rate_hz: float) -> float:
    heartbeat = _series(f_h_hz, order, amplitudes, n_samples, sample_rate_hz)
    return float(np.dot(heartbeat, heartbeat))


def reconstruct_heartbeat(fit: JointFit, n_samples: int, sample_rate_hz: float) -> SampledSignal:
    samples = _series(fit.f_oh_hz, fit.heart_order, fit.amplitudes_heart, n_samples, sample_rate_hz)
    return SampledSignal(samples=samples, sample_rate_hz=sample_rate_hz)


def reconstruct_artifact(fit: JointFit, n_samples: int, sample_rate_hz: float) -> SampledSignal:
    """Motion-artifact series at ``f_oa`` without its DC term (see ``JointFit.motion_dc``)."""
    samples = _series(fit.f_oa_hz, fit.motion_order, fit.amplitudes_motion[1:], n_samples, sample_rate_hz)
    return SampledSignal(samples=samples, sample_rate_hz=sample_rate_hz)


def decompose(ppg_window: WindowView | np.ndarray, fit: JointFit, sample_rate_hz: float) -> Decomposition:
    x = as_samples(ppg_window)
    n_samples = int(x.shape[0])
    heartbeat = reconstruct_heartbeat(fit, n_samples, sample_rate_hz).samples
    artifact = reconstruct_artifact(fit, n_samples, sample_rate_hz).samples
    model = fit.motion_dc + artifact + heartbeat
    return Decomposition(
        fit=model,
        heartbeat=heartbeat,
        artifact=artifact,
        dc=fit.motion_dc,
        residual=x - model,
    )
