"""Numba-compiled kernel implementations (default backend)."""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_ATANH_LIMIT = 1.0 - 1e-15


@njit(cache=True, nogil=True)
def bp_decode(ch_llrs, check_ptr, check_var, var_ptr, var_edge, max_iter, min_sum, alpha):
    n_vars = ch_llrs.size
    n_checks = check_ptr.size - 1
    n_edges = check_var.size

    max_deg = 0
    for c in range(n_checks):
        deg = check_ptr[c + 1] - check_ptr[c]
        if deg > max_deg:
            max_deg = deg
    prefix = np.empty(max_deg)

    c2v = np.zeros(n_edges)
    v2c = np.empty(n_edges)
    posterior = ch_llrs.copy()
    iterations = 0

    for it in range(1, max_iter + 1):
        iterations = it
        for v in range(n_vars):
            total = ch_llrs[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += c2v[var_edge[k]]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[k]
                v2c[e] = total - c2v[e]

        if min_sum:
            for c in range(n_checks):
                lo = check_ptr[c]
                hi = check_ptr[c + 1]
                min1 = np.inf
                min2 = np.inf
                idx1 = lo
                sgn_prod = 1.0
                for e in range(lo, hi):
                    mag = abs(v2c[e])
                    if v2c[e] < 0.0:
                        sgn_prod = -sgn_prod
                    if mag < min1:
                        min2 = min1
                        min1 = mag
                        idx1 = e
                    elif mag < min2:
                        min2 = mag
                for e in range(lo, hi):
                    excl = min2 if e == idx1 else min1
                    sgn = -1.0 if v2c[e] < 0.0 else 1.0
                    c2v[e] = alpha * sgn_prod * sgn * excl
        else:
            for c in range(n_checks):
                lo = check_ptr[c]
                hi = check_ptr[c + 1]
                deg = hi - lo
                p = 1.0
                for i in range(deg):
                    prefix[i] = p
                    p *= np.tanh(0.5 * v2c[lo + i])
                s = 1.0
                for i in range(deg - 1, -1, -1):
                    prod = prefix[i] * s
                    s *= np.tanh(0.5 * v2c[lo + i])
                    if prod > _ATANH_LIMIT:
                        prod = _ATANH_LIMIT
                    elif prod < -_ATANH_LIMIT:
                        prod = -_ATANH_LIMIT
                    c2v[lo + i] = 2.0 * np.arctanh(prod)

        converged = True
        for v in range(n_vars):
            total = ch_llrs[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += c2v[var_edge[k]]
            posterior[v] = total
            if total == 0.0:
                converged = False
        if converged:
            for c in range(n_checks):
                parity = 1.0
                for e in range(check_ptr[c], check_ptr[c + 1]):
                    if posterior[check_var[e]] < 0.0:
                        parity = -parity
                if parity < 0.0:
                    converged = False
                    break
        if converged:
            return posterior, True, iterations
    return posterior, False, iterations


@njit(cache=True, nogil=True)
def _gram_schmidt(basis, star, mu, norms):
    n, m = basis.shape
    for k in range(m):
        for j in range(m):
            mu[k, j] = 1.0 + 0.0j if j == k else 0.0j
        for i in range(n):
            star[i, k] = basis[i, k]
        for j in range(k):
            num = 0.0j
            for i in range(n):
                num += np.conj(star[i, j]) * basis[i, k]
            mu[k, j] = num / norms[j]
            for i in range(n):
                star[i, k] -= mu[k, j] * star[i, j]
        acc = 0.0
        for i in range(n):
            acc += star[i, k].real ** 2 + star[i, k].imag ** 2
        norms[k] = acc


@njit(cache=True, nogil=True)
def _log_defect(basis, norms):
    m = basis.shape[1]
    val = 0.0
    for j in range(m):
        colsq = 0.0
        for i in range(basis.shape[0]):
            colsq += basis[i, j].real ** 2 + basis[i, j].imag ** 2
        val += 0.5 * (np.log(colsq) - np.log(norms[j]))
    return val


@njit(cache=True, nogil=True)
def lll_sweeps(h, delta, sweeps):
    """Fixed-budget complex LLL; returns the lowest-defect sweep snapshot.

    Output: (u, u_inv, reduced basis, defect at start, defect of snapshot),
    with u and u_inv exact Gaussian-integer matrices accumulated alongside
    the floating-point basis.
    """
    n, m = h.shape
    basis = h.copy()
    u = np.eye(m, dtype=np.complex128)
    v = np.eye(m, dtype=np.complex128)   # u_inv
    star = np.empty((n, m), dtype=np.complex128)
    mu = np.empty((m, m), dtype=np.complex128)
    norms = np.empty(m)

    _gram_schmidt(basis, star, mu, norms)
    defect_before = _log_defect(basis, norms)
    best_defect = defect_before
    best_u = u.copy()
    best_v = v.copy()
    best_basis = basis.copy()

    for _ in range(sweeps):
        for k in range(1, m):
            for j in range(k - 1, -1, -1):
                rr = np.floor(mu[k, j].real + 0.5)
                ri = np.floor(mu[k, j].imag + 0.5)
                if rr != 0.0 or ri != 0.0:
                    r = complex(rr, ri)
                    for i in range(n):
                        basis[i, k] -= r * basis[i, j]
                    for i in range(m):
                        v[i, k] -= r * v[i, j]
                        u[j, i] += r * u[k, i]
                    for i in range(j + 1):
                        mu[k, i] -= r * mu[j, i]
            if norms[k] < (delta - abs(mu[k, k - 1]) ** 2) * norms[k - 1]:
                for i in range(n):
                    tmp = basis[i, k - 1]
                    basis[i, k - 1] = basis[i, k]
                    basis[i, k] = tmp
                for i in range(m):
                    tmpv = v[i, k - 1]
                    v[i, k - 1] = v[i, k]
                    v[i, k] = tmpv
                    tmpu = u[k - 1, i]
                    u[k - 1, i] = u[k, i]
                    u[k, i] = tmpu
                _gram_schmidt(basis, star, mu, norms)
        defect = _log_defect(basis, norms)
        if defect < best_defect:
            best_defect = defect
            best_u = u.copy()
            best_v = v.copy()
            best_basis = basis.copy()
    return best_u, best_v, best_basis, defect_before, best_defect


@njit(cache=True, nogil=True)
def candidate_distances(h, y, cands):
    n_cand = cands.shape[0]
    n_rx, m = h.shape
    out = np.empty(n_cand)
    for i in range(n_cand):
        acc = 0.0
        for r in range(n_rx):
            s = y[r]
            for j in range(m):
                s -= h[r, j] * cands[i, j]
            acc += s.real * s.real + s.imag * s.imag
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def maxlog_sift(dist, bits, l_max):
    n_cand, m, q = bits.shape
    llrs = np.empty((m, q))
    for j in range(m):
        for b in range(q):
            lam_pos = np.inf
            lam_neg = np.inf
            for i in range(n_cand):
                d = dist[i]
                if bits[i, j, b] == 1:
                    if d < lam_pos:
                        lam_pos = d
                else:
                    if d < lam_neg:
                        lam_neg = d
            val = lam_neg - lam_pos
            if val > l_max:
                val = l_max
            elif val < -l_max:
                val = -l_max
            llrs[j, b] = val
    return llrs
