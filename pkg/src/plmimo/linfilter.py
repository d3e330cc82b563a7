"""Linear receivers: ZF, MMSE, the extended-channel form, and the
soft-output linear demapper with per-layer decorrelating filters.

The MMSE filter equals the ZF filter of the extended channel
``[H; I_M]`` applied to ``[y; 0]``, which is how the extended variant is
realized here.  The soft-output demapper treats the other layers as
Gaussian interference: for layer j it projects onto ``w_j = K_j^{-1} h_j``
with ``K_j = I + sum_{i != j} h_i h_i^H`` and scores scalar hypotheses
with a matched-variance 1D Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation

__all__ = [
    "LinearFilter",
    "PerLayerSoftFilter",
    "SingularMatrixError",
    "zf_filter",
    "mmse_filter",
    "extend_channel",
    "extend_received",
    "per_layer_soft_filter",
    "soft_linear_llrs",
]

COND_LIMIT = 1e12


class SingularMatrixError(np.linalg.LinAlgError):
    """Channel matrix too ill-conditioned for a zero-forcing inverse."""


@dataclass(frozen=True)
class LinearFilter:
    g: np.ndarray        # (M, N), or (M, N+M) when extended
    kind: str            # "zf" | "mmse"
    extended: bool = False

    @property
    def m(self) -> int:
        return self.g.shape[0]

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Filter a received vector (zero-padded first when extended)."""
        y = np.asarray(y)
        if self.extended:
            y = np.concatenate([y, np.zeros(self.m, dtype=complex)])
        if y.shape != (self.g.shape[1],):
            raise ValueError(f"filter expects length {self.g.shape[1]}, got {y.shape}")
        return self.g @ y


@dataclass(frozen=True)
class PerLayerSoftFilter:
    w: np.ndarray          # (M, N) row j is the decorrelating filter of layer j
    gain: np.ndarray       # (M,) complex, w_j^H h_j
    sigma_sq: np.ndarray   # (M,) real > 0


def extend_channel(h: np.ndarray) -> np.ndarray:
    """[H; I_M]: the regularized system whose pseudo-inverse is the MMSE filter."""
    h = np.asarray(h)
    return np.vstack([h, np.eye(h.shape[1], dtype=h.dtype)])


def extend_received(y: np.ndarray, m: int) -> np.ndarray:
    """[y; 0_M], the received vector of the extended system."""
    y = np.asarray(y)
    return np.concatenate([y, np.zeros(m, dtype=complex)])


def zf_filter(h: np.ndarray) -> LinearFilter:
    """Moore-Penrose pseudo-inverse (H^H H)^{-1} H^H of a full-column-rank H."""
    h = np.asarray(h, dtype=np.complex128)
    if np.linalg.cond(h) > COND_LIMIT:
        raise SingularMatrixError(
            f"condition number exceeds {COND_LIMIT:.0e}; channel treated as singular"
        )
    gram = h.conj().T @ h
    g = np.linalg.solve(gram, h.conj().T)
    return LinearFilter(g=g, kind="zf")


def mmse_filter(h: np.ndarray, extended: bool = False) -> LinearFilter:
    """(H^H H + I)^{-1} H^H; with ``extended``, the pseudo-inverse of [H; I]."""
    h = np.asarray(h, dtype=np.complex128)
    m = h.shape[1]
    gram = h.conj().T @ h + np.eye(m)
    if extended:
        rhs = np.hstack([h.conj().T, np.eye(m, dtype=np.complex128)])
    else:
        rhs = h.conj().T
    g = np.linalg.solve(gram, rhs)
    return LinearFilter(g=g, kind="mmse", extended=extended)


def per_layer_soft_filter(h: np.ndarray) -> PerLayerSoftFilter:
    """Decorrelating filters w_j = K_j^{-1} h_j for all layers at once.

    Uses a Sherman-Morrison downdate of (I + H H^H)^{-1}: with
    a_j = (I + H H^H)^{-1} h_j and t_j = h_j^H a_j < 1,
    w_j = a_j / (1 - t_j) and sigma_j^2 = t_j / (1 - t_j).
    """
    h = np.asarray(h, dtype=np.complex128)
    n, m = h.shape
    a_full = np.eye(n) + h @ h.conj().T
    a = np.linalg.solve(a_full, h)          # column j is a_j
    t = np.real(np.einsum("ij,ij->j", h.conj(), a))
    if np.any(t >= 1.0) or np.any(t <= 0.0):
        raise np.linalg.LinAlgError("per-layer interference covariance not PD")
    w = (a / (1.0 - t)).T
    gain = np.einsum("jn,nj->j", w.conj(), h)  # w_j^H h_j
    sigma_sq = t / (1.0 - t)
    return PerLayerSoftFilter(w=w, gain=gain, sigma_sq=sigma_sq)


def soft_linear_llrs(
    h: np.ndarray,
    y: np.ndarray,
    c: Constellation,
    extended: bool = False,
) -> np.ndarray:
    """(M, Q) LLRs from the soft-output linear detector.

    Per layer j and bit b: L = lse_{x in O_b^+} - lse_{x in O_b^-} of
    -|w_j^H y - x * w_j^H h_j|^2 / sigma_j^2.  With ``extended`` the filters
    come from ([H; I], [y; 0]), giving the soft-output MMSE detector.
    """
    h = np.asarray(h, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (h.shape[0],):
        raise ValueError(f"shape mismatch: H is {h.shape}, y is {y.shape}")
    m = h.shape[1]
    if extended:
        h = extend_channel(h)
        y = extend_received(y, m)
    filt = per_layer_soft_filter(h)

    z = filt.w.conj() @ y                    # (M,) w_j^H y
    # (M, |O|) squared residuals of each scalar hypothesis.
    resid = np.abs(z[:, None] - c.points[None, :] * filt.gain[:, None]) ** 2
    loglik = -resid / filt.sigma_sq[:, None]

    pos = c.bit_masks()                      # (Q, |O|)
    llrs = np.empty((m, c.q))
    for b in range(c.q):
        lam_pos = logsumexp(loglik[:, pos[b]], axis=1)
        lam_neg = logsumexp(loglik[:, ~pos[b]], axis=1)
        llrs[:, b] = lam_pos - lam_neg
    return llrs
