"""Brute-force exact demappers over the full search space Omega^M.

Ground truth for small instances: exact log-sum-exp LLRs, exact max-log
LLRs, and maximum-likelihood detection by exhaustive enumeration.  The
enumeration streams over chunks with a running-max log-sum-exp, so memory
and overflow stay bounded, and refuses search spaces above 10^6 points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation

__all__ = [
    "OracleResult",
    "SearchSpaceTooLarge",
    "exact_lse_llrs",
    "exact_max_log_llrs",
    "ml_detect",
]

ENUMERATION_GUARD = 10 ** 6
_CHUNK = 1 << 14


class SearchSpaceTooLarge(ValueError):
    """|Omega|^M exceeds the exhaustive-enumeration guard."""


@dataclass(frozen=True)
class OracleResult:
    llrs: np.ndarray        # (M, Q)
    ml_point: np.ndarray    # (M,) complex
    ml_distance: float


def _check_guard(c: Constellation, m: int) -> int:
    total = c.size ** m
    if total > ENUMERATION_GUARD:
        raise SearchSpaceTooLarge(
            f"|Omega|^M = {total} exceeds the {ENUMERATION_GUARD} enumeration guard"
        )
    return total


def _chunks(c: Constellation, m: int, h: np.ndarray, y: np.ndarray):
    """Yield (point index matrix, distances) over Omega^M in canonical order."""
    total = c.size ** m
    powers = c.size ** np.arange(m - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        idx = (flat[:, None] // powers[None, :]) % c.size
        x = c.points[idx]
        resid = y[None, :] - x @ h.T
        dist = np.sum(resid.real ** 2 + resid.imag ** 2, axis=1)
        yield idx, dist


def exact_max_log_llrs(h: np.ndarray, y: np.ndarray, c: Constellation) -> np.ndarray:
    """(M, Q) max-log LLRs: best counter-side distance minus best same-side."""
    h = np.asarray(h, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    m = h.shape[1]
    _check_guard(c, m)
    pos_by_point = c.bit_masks()                     # (Q, |O|)
    best = np.full((2, m, c.q), np.inf)              # [side: +1, -1]
    for idx, dist in _chunks(c, m, h, y):
        pos = pos_by_point[:, idx].transpose(1, 2, 0)    # (chunk, M, Q)
        d = dist[:, None, None]
        best[0] = np.minimum(best[0], np.where(pos, d, np.inf).min(axis=0))
        best[1] = np.minimum(best[1], np.where(~pos, d, np.inf).min(axis=0))
    return best[1] - best[0]


def exact_lse_llrs(h: np.ndarray, y: np.ndarray, c: Constellation) -> np.ndarray:
    """(M, Q) exact LLRs via streaming stable log-sum-exp of -||y - Hx||^2."""
    h = np.asarray(h, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    m = h.shape[1]
    _check_guard(c, m)
    pos_by_point = c.bit_masks()
    # Streaming accumulators per (side, j, b): running max of -dist and the
    # sum of exp shifted by that max.
    run_max = np.full((2, m, c.q), -np.inf)
    run_sum = np.zeros((2, m, c.q))
    for idx, dist in _chunks(c, m, h, y):
        pos = pos_by_point[:, idx].transpose(1, 2, 0)
        val = -dist[:, None, None]
        for side, mask in ((0, pos), (1, ~pos)):
            side_val = np.where(mask, val, -np.inf)
            chunk_max = side_val.max(axis=0)
            safe_max = np.where(np.isfinite(chunk_max), chunk_max, 0.0)
            chunk_sum = np.exp(side_val - safe_max).sum(axis=0)
            new_max = np.maximum(run_max[side], chunk_max)
            safe_new = np.where(np.isfinite(new_max), new_max, 0.0)
            scale_old = np.exp(np.where(np.isfinite(run_max[side]), run_max[side] - safe_new, -np.inf))
            scale_new = np.exp(np.where(np.isfinite(chunk_max), chunk_max - safe_new, -np.inf))
            run_sum[side] = run_sum[side] * scale_old + chunk_sum * scale_new
            run_max[side] = new_max
    lam = run_max + np.log(run_sum, where=run_sum > 0, out=np.full_like(run_sum, -np.inf))
    return lam[0] - lam[1]


def ml_detect(h: np.ndarray, y: np.ndarray, c: Constellation) -> np.ndarray:
    """argmin over Omega^M of ||y - Hx||^2, first in canonical order on ties."""
    res = ml_detect_full(h, y, c)
    return res.ml_point


def ml_detect_full(h: np.ndarray, y: np.ndarray, c: Constellation) -> OracleResult:
    """ML point together with its distance and the max-log LLR matrix."""
    h = np.asarray(h, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    m = h.shape[1]
    _check_guard(c, m)
    best_dist = np.inf
    best_idx = None
    for idx, dist in _chunks(c, m, h, y):
        k = int(np.argmin(dist))
        if dist[k] < best_dist:
            best_dist = float(dist[k])
            best_idx = idx[k]
    llrs = exact_max_log_llrs(h, y, c)
    return OracleResult(llrs=llrs, ml_point=c.points[best_idx], ml_distance=best_dist)
