"""Pure-numpy kernel implementations (reference / fallback backend)."""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_ATANH_LIMIT = 1.0 - 1e-15


def bp_decode(ch_llrs, check_ptr, check_var, var_ptr, var_edge, max_iter, min_sum, alpha):
    """Belief propagation on a Tanner graph in check-major edge order.

    Returns (posterior llrs, converged, iterations).  Convergence requires
    every parity check satisfied by the hard decisions and every posterior
    nonzero (an all-zero posterior carries no information).  ``min_sum``
    switches the check update from the exact tanh rule to normalized
    min-sum with scale ``alpha``.
    """
    n_checks = check_ptr.size - 1
    segments = check_ptr[:-1]
    check_of_edge = np.repeat(np.arange(n_checks), np.diff(check_ptr))

    c2v = np.zeros(check_var.size)
    posterior = ch_llrs.copy()
    iterations = 0
    for iterations in range(1, max_iter + 1):
        acc = np.zeros(ch_llrs.size)
        np.add.at(acc, check_var, c2v)
        total = ch_llrs + acc
        v2c = total[check_var] - c2v

        if min_sum:
            mag = np.abs(v2c)
            min1 = np.minimum.reduceat(mag, segments)
            hit = np.flatnonzero(mag == min1[check_of_edge])
            first = hit[np.unique(check_of_edge[hit], return_index=True)[1]]
            masked = mag.copy()
            masked[first] = np.inf
            min2 = np.minimum.reduceat(masked, segments)
            is_first = np.zeros(mag.size, dtype=bool)
            is_first[first] = True
            excl_min = np.where(is_first, min2[check_of_edge], min1[check_of_edge])

            sgn = np.where(v2c < 0, -1.0, 1.0)
            sgn_prod = np.multiply.reduceat(sgn, segments)
            c2v = alpha * sgn_prod[check_of_edge] * sgn * excl_min
        else:
            t = np.tanh(0.5 * v2c)
            sgn = np.sign(t)
            zero = t == 0.0
            n_zero = np.add.reduceat(zero.astype(np.int64), segments)
            logmag = np.where(zero, 0.0, np.log(np.abs(np.where(zero, 1.0, t))))
            logsum = np.add.reduceat(logmag, segments)
            sgn_prod = np.multiply.reduceat(np.where(zero, 1.0, sgn), segments)

            nz_e = n_zero[check_of_edge]
            others_log = np.where(zero, logsum[check_of_edge], logsum[check_of_edge] - logmag)
            others_sgn = np.where(zero, sgn_prod[check_of_edge], sgn_prod[check_of_edge] * sgn)
            p = np.where(
                nz_e == 0,
                others_sgn * np.exp(others_log),
                np.where((nz_e == 1) & zero, others_sgn * np.exp(others_log), 0.0),
            )
            c2v = 2.0 * np.arctanh(np.clip(p, -_ATANH_LIMIT, _ATANH_LIMIT))

        acc = np.zeros(ch_llrs.size)
        np.add.at(acc, check_var, c2v)
        posterior = ch_llrs + acc

        spins = np.where(posterior >= 0.0, 1.0, -1.0)
        parity = np.multiply.reduceat(spins[check_var], segments)
        if np.all(parity > 0.0) and np.all(posterior != 0.0):
            return posterior, True, iterations
    return posterior, False, iterations


def _gram_schmidt(basis):
    n, m = basis.shape
    star = np.zeros((n, m), dtype=np.complex128)
    mu = np.eye(m, dtype=np.complex128)
    norms = np.zeros(m)
    for k in range(m):
        v = basis[:, k].copy()
        for j in range(k):
            mu[k, j] = star[:, j].conj() @ basis[:, k] / norms[j]
            v -= mu[k, j] * star[:, j]
        star[:, k] = v
        norms[k] = np.real(v.conj() @ v)
    return star, mu, norms


def _log_defect(basis, norms):
    colsq = np.sum(basis.real ** 2 + basis.imag ** 2, axis=0)
    return float(0.5 * (np.sum(np.log(colsq)) - np.sum(np.log(norms))))


def lll_sweeps(h, delta, sweeps):
    """Fixed-budget complex LLL; returns the lowest-defect sweep snapshot.

    Output: (u, u_inv, reduced basis, defect at start, defect of snapshot),
    with u and u_inv exact Gaussian-integer matrices accumulated alongside
    the floating-point basis.
    """
    n, m = h.shape
    basis = h.copy()
    u = np.eye(m, dtype=np.complex128)
    v = np.eye(m, dtype=np.complex128)

    _, mu, norms = _gram_schmidt(basis)
    defect_before = _log_defect(basis, norms)
    best = (defect_before, u.copy(), v.copy(), basis.copy())

    for _ in range(sweeps):
        for k in range(1, m):
            for j in range(k - 1, -1, -1):
                r = complex(np.floor(mu[k, j].real + 0.5), np.floor(mu[k, j].imag + 0.5))
                if r != 0:
                    basis[:, k] -= r * basis[:, j]
                    v[:, k] -= r * v[:, j]
                    u[j, :] += r * u[k, :]
                    mu[k, : j + 1] -= r * mu[j, : j + 1]
            if norms[k] < (delta - abs(mu[k, k - 1]) ** 2) * norms[k - 1]:
                basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
                v[:, [k - 1, k]] = v[:, [k, k - 1]]
                u[[k - 1, k], :] = u[[k, k - 1], :]
                _, mu, norms = _gram_schmidt(basis)
        defect = _log_defect(basis, norms)
        if defect < best[0]:
            best = (defect, u.copy(), v.copy(), basis.copy())

    best_defect, best_u, best_v, best_basis = best
    return best_u, best_v, best_basis, defect_before, best_defect


def candidate_distances(h, y, cands):
    """||y - H x||^2 for each candidate row of ``cands``."""
    resid = y[None, :] - cands @ h.T
    return np.sum(resid.real ** 2 + resid.imag ** 2, axis=1)


def maxlog_sift(dist, bits, l_max):
    """Per-bit max-log LLRs from candidate distances.

    ``bits`` is (n_cand, M, Q) in spins; the LLR of bit (j, b) is the best
    distance among candidates with the bit at -1 minus the best among those
    at +1, clipped into [-l_max, +l_max] (an empty side counts as +inf).
    """
    pos = bits == 1
    d = dist[:, None, None]
    lam_pos = np.where(pos, d, np.inf).min(axis=0)
    lam_neg = np.where(~pos, d, np.inf).min(axis=0)
    return np.clip(lam_neg - lam_pos, -l_max, l_max)
