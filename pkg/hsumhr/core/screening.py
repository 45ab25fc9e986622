"""Closed-form Gram screening of grid candidates.

Every column of a harmonic design is ``cos(a n)`` or ``sin(a n)``, so inner products
between columns reduce to Dirichlet sums and never need the ``N x p`` matrix. The
screened residual energy ``x^T x - b^T G^+ b`` is accurate enough to discard grid
points that are clearly worse than the best one; the survivors are re-solved exactly.
"""

from __future__ import annotations

import numpy as np

# eigenvalues of a Gram matrix below this fraction of its largest diagonal entry are dropped
GRAM_RCOND = 1e-12
# grid rows per batch; bounds the (rows, N) complex work array
CHUNK = 256


def dirichlet_sums(theta: np.ndarray, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    """``sum(cos(theta n))`` and ``sum(sin(theta n))`` over ``n = 0..n_samples-1``."""
    theta = np.asarray(theta, dtype=np.float64)
    half = 0.5 * theta
    den = np.sin(half)
    at_pole = np.abs(den) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(
            at_pole,
            n_samples * np.cos(n_samples * half) / np.cos(half),
            np.sin(n_samples * half) / np.where(at_pole, 1.0, den),
        )
    phase = (n_samples - 1) * half
    return ratio * np.cos(phase), ratio * np.sin(phase)


def cross_gram(
    alpha: np.ndarray | float,
    order_a: int,
    dc_a: bool,
    beta: np.ndarray | float,
    order_b: int,
    dc_b: bool,
    n_samples: int,
) -> np.ndarray:
    """Inner products between the columns of two harmonic blocks.

    ``alpha`` and ``beta`` are fundamentals in radians per sample and broadcast against
    each other; the result has shape ``(..., p_a, p_b)`` with columns ordered DC, cos, sin.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    lead = np.broadcast_shapes(alpha.shape, beta.shape)
    ka = np.arange(1, order_a + 1, dtype=np.float64)
    kb = np.arange(1, order_b + 1, dtype=np.float64)
    a = alpha[..., None, None] * ka[:, None]
    b = beta[..., None, None] * kb[None, :]

    c_minus, s_minus = dirichlet_sums(a - b, n_samples)
    c_plus, s_plus = dirichlet_sums(a + b, n_samples)
    cc = 0.5 * (c_minus + c_plus)
    ss = 0.5 * (c_minus - c_plus)
    cs = 0.5 * (s_plus - s_minus)
    sc = 0.5 * (s_plus + s_minus)
    gram = np.concatenate(
        [np.concatenate([cc, cs], axis=-1), np.concatenate([sc, ss], axis=-1)],
        axis=-2,
    )
    gram = np.broadcast_to(gram, (*lead, 2 * order_a, 2 * order_b))

    if dc_b:
        c_a, s_a = dirichlet_sums(alpha[..., None] * ka, n_samples)
        column = np.broadcast_to(np.concatenate([c_a, s_a], axis=-1), (*lead, 2 * order_a))
        gram = np.concatenate([column[..., None], gram], axis=-1)
    if dc_a:
        c_b, s_b = dirichlet_sums(beta[..., None] * kb, n_samples)
        row = np.broadcast_to(np.concatenate([c_b, s_b], axis=-1), (*lead, 2 * order_b))
        if dc_b:
            row = np.concatenate([np.full((*lead, 1), float(n_samples)), row], axis=-1)
        gram = np.concatenate([row[..., None, :], gram], axis=-2)
    return np.ascontiguousarray(gram)


def harmonic_projections(x: np.ndarray, omegas: np.ndarray, order: int, include_dc: bool) -> np.ndarray:
    """``W^T x`` for the harmonic design at each fundamental in ``omegas`` (radians per sample)."""
    n = np.arange(x.shape[0], dtype=np.float64)
    rotor = np.exp(1j * omegas[:, None] * n)
    power = np.ones_like(rotor)
    sums = np.empty((omegas.shape[0], order), dtype=np.complex128)
    for k in range(order):
        power *= rotor
        sums[:, k] = power @ x
    parts = [sums.real, sums.imag]
    if include_dc:
        parts.insert(0, np.full((omegas.shape[0], 1), float(np.sum(x))))
    return np.concatenate(parts, axis=1)


def _pinv_quadratic(mats: np.ndarray, rhs: np.ndarray, *, definite: bool) -> np.ndarray:
    """``rhs^T mats^+ rhs`` for a stack of symmetric positive semi-definite matrices."""
    if definite:
        try:
            chol = np.linalg.cholesky(mats)
        except np.linalg.LinAlgError:
            pass
        else:
            y = np.linalg.solve(chol, rhs[..., None])[..., 0]
            return np.sum(y * y, axis=-1)
    scale = np.max(np.diagonal(mats, axis1=-2, axis2=-1), axis=-1)
    w, v = np.linalg.eigh(mats)
    proj = np.einsum("...pq,...p->...q", v, rhs)
    keep = w > GRAM_RCOND * scale[..., None]
    return np.sum(np.where(keep, proj * proj / np.where(keep, w, 1.0), 0.0), axis=-1)


def screen_single(x: np.ndarray, omegas: np.ndarray, order: int, include_dc: bool) -> np.ndarray:
    """Approximate SE of a single harmonic block at every fundamental in ``omegas``."""
    energy = float(np.dot(x, x))
    out = np.empty(omegas.shape[0])
    for lo in range(0, omegas.shape[0], CHUNK):
        chunk = omegas[lo : lo + CHUNK]
        gram = cross_gram(chunk, order, include_dc, chunk, order, include_dc, x.shape[0])
        rhs = harmonic_projections(x, chunk, order, include_dc)
        out[lo : lo + CHUNK] = energy - _pinv_quadratic(gram, rhs, definite=True)
    return np.maximum(out, 0.0)


def screen_joint(
    x: np.ndarray,
    omega_a: float,
    motion_order: int,
    omegas_h: np.ndarray,
    heart_order: int,
) -> np.ndarray:
    """Approximate joint SE with the motion block (with DC) fixed and the heart block swept.

    The motion block is eliminated once; each heart candidate then only needs its
    ``2 M_h`` columns reduced against it.
    """
    n_samples = x.shape[0]
    energy = float(np.dot(x, x))
    motion_gram = cross_gram(omega_a, motion_order, True, omega_a, motion_order, True, n_samples)
    motion_rhs = harmonic_projections(x, np.array([omega_a]), motion_order, True)[0]
    w, v = np.linalg.eigh(motion_gram)
    keep = w > GRAM_RCOND * float(np.max(np.diag(motion_gram)))
    whiten = v[:, keep] / np.sqrt(w[keep])
    u = whiten.T @ motion_rhs
    motion_q = float(np.dot(u, u))

    out = np.empty(omegas_h.shape[0])
    for lo in range(0, omegas_h.shape[0], CHUNK):
        chunk = omegas_h[lo : lo + CHUNK]
        cross = cross_gram(omega_a, motion_order, True, chunk, heart_order, False, n_samples)
        heart_gram = cross_gram(chunk, heart_order, False, chunk, heart_order, False, n_samples)
        heart_rhs = harmonic_projections(x, chunk, heart_order, False)
        y = np.einsum("ar,gah->grh", whiten, cross)
        reduced = heart_gram - np.einsum("grh,grk->ghk", y, y)
        rhs = heart_rhs - np.einsum("grh,r->gh", y, u)
        out[lo : lo + CHUNK] = energy - motion_q - _pinv_quadratic(reduced, rhs, definite=False)
    return np.maximum(out, 0.0)
