"""Lattice reduction of the channel basis and reduced-domain quantization.

The reducer is a complex LLL (Gaussian-integer size reduction plus the
Lovasz swap test, delta = 0.75) run for a fixed budget of full sweeps,
default ceil(sqrt(M)).  The unimodular change of basis and its inverse are
accumulated as exact integer matrices alongside the floating-point basis, so
unimodularity never depends on rounding.  Because a fixed sweep budget can
leave the basis mid-update, the reducer snapshots the basis after every
sweep and returns the one with the smallest log orthogonality defect (the
unreduced start included), which makes the defect non-increasing by
construction.

Reduced-domain quantization follows the shifted-grid identity
``x = alpha*m - beta`` for constellation points, so lattice points of the
transformed constellation are exact fixed points of the quantizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constellation import Constellation, quantize_to_constellation

__all__ = [
    "ReducedBasis",
    "log_orthogonality_defect",
    "reduce_lattice",
    "quantize_reduced",
    "remap_to_constellation",
    "unimodular_abs_det_sq",
]

LOVASZ_DELTA = 0.75


@dataclass(frozen=True)
class ReducedBasis:
    u: np.ndarray           # (M, M) complex-integer change of basis
    u_inv: np.ndarray       # (M, M) exact inverse of u
    h_reduced: np.ndarray   # (N, M) = H @ u_inv
    defect_before: float
    defect_after: float


def log_orthogonality_defect(h: np.ndarray) -> float:
    """sum_j log||h_j|| - 0.5 * log det(H^H H); zero iff columns orthogonal."""
    h = np.asarray(h, dtype=np.complex128)
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0.0):
        raise np.linalg.LinAlgError("zero column in channel matrix")
    sign, logdet = np.linalg.slogdet(h.conj().T @ h)
    if sign <= 0 or not np.isfinite(logdet):
        raise np.linalg.LinAlgError("channel matrix is rank deficient")
    return float(np.sum(np.log(norms)) - 0.5 * logdet)


def _round_half_up(x: np.ndarray | float):
    return np.floor(x + 0.5)


def unimodular_abs_det_sq(u: np.ndarray) -> int:
    """|det U|^2 of a Gaussian-integer matrix, in exact integer arithmetic.

    Embeds a + bi as the 2x2 real block [[a, -b], [b, a]]; the determinant of
    the lifted 2M x 2M integer matrix equals |det U|^2 and is evaluated with
    fraction-free (Bareiss) elimination over Python ints.
    """
    u = np.asarray(u)
    m = u.shape[0]
    a = np.rint(u.real).astype(object)
    b = np.rint(u.imag).astype(object)
    if not (np.all(np.abs(u.real - a.astype(float)) < 1e-9)
            and np.all(np.abs(u.imag - b.astype(float)) < 1e-9)):
        raise ValueError("matrix entries are not Gaussian integers")
    lift = [[0] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            lift[2 * i][2 * j] = int(a[i, j])
            lift[2 * i][2 * j + 1] = -int(b[i, j])
            lift[2 * i + 1][2 * j] = int(b[i, j])
            lift[2 * i + 1][2 * j + 1] = int(a[i, j])
    n = 2 * m
    sign = 1
    prev = 1
    for k in range(n - 1):
        if lift[k][k] == 0:
            pivot = next((r for r in range(k + 1, n) if lift[r][k] != 0), None)
            if pivot is None:
                return 0
            lift[k], lift[pivot] = lift[pivot], lift[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                lift[i][j] = (lift[i][j] * lift[k][k] - lift[i][k] * lift[k][j]) // prev
            lift[i][k] = 0
        prev = lift[k][k]
    return sign * lift[n - 1][n - 1]


def reduce_lattice(h: np.ndarray, sweeps: int | None = None) -> ReducedBasis:
    """Fixed-budget complex LLL reduction of the columns of H.

    Runs `sweeps` full passes (default ceil(sqrt(M))) of size reduction and
    Lovasz swaps, then returns the sweep snapshot with the lowest defect.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    m = h.shape[1]
    defect_before = log_orthogonality_defect(h)
    if sweeps is None:
        sweeps = math.ceil(math.sqrt(m))
    if sweeps < 1:
        raise ValueError(f"need at least one sweep, got {sweeps}")

    u, u_inv, reduced, _, _ = kernels.lll_sweeps(h, LOVASZ_DELTA, sweeps)
    defect_after = log_orthogonality_defect(reduced)
    if defect_after > defect_before:
        # The kernel ranks snapshots with a Gram-Schmidt-based defect that
        # can disagree with the canonical measure at rounding level.
        u = np.eye(m, dtype=np.complex128)
        u_inv = np.eye(m, dtype=np.complex128)
        reduced = h.copy()
        defect_after = defect_before
    return ReducedBasis(
        u=u,
        u_inv=u_inv,
        h_reduced=reduced,
        defect_before=defect_before,
        defect_after=defect_after,
    )


def quantize_reduced(z: np.ndarray, u: np.ndarray, c: Constellation) -> np.ndarray:
    """Nearest point of the transformed constellation lattice U*(alpha*Z_C - beta).

    Computed as alpha * round((z + U beta) / alpha) - U beta, so U x is an
    exact fixed point for every constellation vector x.
    """
    z = np.asarray(z, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    beta = (c.alpha / 2.0) * (1.0 + 1.0j) * np.ones(u.shape[0])
    shift = u @ beta
    w = (z + shift) / c.alpha
    rounded = _round_half_up(w.real) + 1j * _round_half_up(w.imag)
    return c.alpha * rounded - shift


def remap_to_constellation(z_reduced: np.ndarray, u_inv: np.ndarray, c: Constellation) -> np.ndarray:
    """Map a reduced-domain lattice point back to the constellation box."""
    x = np.asarray(u_inv, dtype=np.complex128) @ np.asarray(z_reduced, dtype=np.complex128)
    return quantize_to_constellation(c, x)
