"""Numba kernels for covariance-form coordinate descent.

Objective (per unit of data): ``(1/n)||y - X b||^2 + lam * ||b||_1`` expressed
through ``G = X'X/n`` (symmetric, so rows double as columns) and ``c = X'y/n``. The residual correlation
``r = c - G b`` is maintained incrementally; a coordinate update is
``b_j = S(r_j + G_jj b_j, lam/2) / G_jj``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Return codes for the sweep loop.
OK = 0
MAX_SWEEPS = 1
NON_MONOTONE = 2
FAILED = 3


@njit(cache=True)
def _objective_part(b, r, c, lam):
    # b'Gb - 2c'b + lam|b|_1, using G b = c - r.
    s = 0.0
    l1 = 0.0
    for j in range(b.shape[0]):
        if b[j] != 0.0:
            s -= b[j] * (r[j] + c[j])
            l1 += abs(b[j])
    return s + lam * l1


@njit(cache=True)
def cd_solve(G, c, lam, b, r, skip, tol, max_sweeps):
    """Run coordinate descent in place on ``b`` and ``r``.

    Alternates full sweeps with sweeps over the current nonzero set; stops
    after a full sweep whose largest coefficient change is below
    ``tol * (1 + max|b|)``. Returns ``(status, sweeps)``.
    """
    p = b.shape[0]
    half = 0.5 * lam
    full = True
    sweeps = 0
    prev = _objective_part(b, r, c, lam)
    while True:
        max_change = 0.0
        for j in range(p):
            if skip[j]:
                continue
            old = b[j]
            if not full and old == 0.0:
                continue
            gjj = G[j, j]
            rho = r[j] + gjj * old
            if rho > half:
                new = (rho - half) / gjj
            elif rho < -half:
                new = (rho + half) / gjj
            else:
                new = 0.0
            if new != old:
                d = new - old
                b[j] = new
                row = G[j]
                for k in range(p):
                    r[k] -= d * row[k]
                if abs(d) > max_change:
                    max_change = abs(d)
        sweeps += 1
        cur = _objective_part(b, r, c, lam)
        if cur > prev + 1e-10 * (1.0 + abs(prev)):
            return NON_MONOTONE, sweeps
        prev = cur
        bmax = 0.0
        for j in range(p):
            if abs(b[j]) > bmax:
                bmax = abs(b[j])
        if max_change < tol * (1.0 + bmax):
            if full:
                return OK, sweeps
            full = True
        else:
            full = False
        if sweeps >= max_sweeps:
            return MAX_SWEEPS, sweeps


# Relative pivot floor for the active-set Cholesky factor.
_PIVOT_TOL = 1e-10
# Relative slack on the inactive-set KKT check.
_KKT_SLACK = 1e-11


@njit(cache=True)
def _chol_factor(G, A, k, L):
    """Lower Cholesky factor of ``G[A[:k]][:, A[:k]]`` into ``L``; False if not PD."""
    for i in range(k):
        ai = A[i]
        for j in range(i + 1):
            v = G[ai, A[j]]
            for m in range(j):
                v -= L[i, m] * L[j, m]
            if i == j:
                if v <= _PIVOT_TOL * G[ai, ai]:
                    return False
                L[i, i] = np.sqrt(v)
            else:
                L[i, j] = v / L[j, j]
    return True


@njit(cache=True)
def _chol_append(G, A, k, j, L):
    """Extend the factor of ``A[:k]`` by column ``j`` (stored as row ``k``)."""
    for i in range(k):
        v = G[A[i], j]
        for m in range(i):
            v -= L[i, m] * L[k, m]
        L[k, i] = v / L[i, i]
    d = G[j, j]
    for m in range(k):
        d -= L[k, m] * L[k, m]
    if d <= _PIVOT_TOL * G[j, j]:
        return False
    L[k, k] = np.sqrt(d)
    return True


@njit(cache=True)
def _chol_solve(L, k, rhs, out):
    for i in range(k):
        v = rhs[i]
        for m in range(i):
            v -= L[i, m] * out[m]
        out[i] = v / L[i, i]
    for i in range(k - 1, -1, -1):
        v = out[i]
        for m in range(i + 1, k):
            v -= L[m, i] * out[m]
        out[i] = v / L[i, i]


@njit(cache=True)
def active_set_solve(G, c, lam, b, r, skip, A, s, k, L, rhs, cand, max_iter):
    """Exact solve at one penalty by an active-set (feature-sign) iteration.

    ``b`` must lie in the orthant given by ``A[:k]`` and signs ``s[:k]``, and
    ``L`` must factor ``G`` restricted to ``A[:k]``. Each iteration either
    moves to the minimizer on the current signed support, or stops at the
    first coordinate that would cross zero and drops it; when the support
    is optimal the worst KKT violator outside it is added. The objective
    never increases. Returns ``(status, k)``; on success ``r = c - G b``.
    """
    p = b.shape[0]
    half = 0.5 * lam
    cmax = 0.0
    for j in range(p):
        if abs(c[j]) > cmax:
            cmax = abs(c[j])
    slack = _KKT_SLACK * (cmax + half) + 1e-300
    for _ in range(max_iter):
        for a in range(k):
            rhs[a] = c[A[a]] - half * s[a]
        _chol_solve(L, k, rhs, cand)
        tmin = 2.0
        amin = -1
        for a in range(k):
            if cand[a] * s[a] <= 0.0:
                bj = b[A[a]]
                den = bj - cand[a]
                t = bj / den if den != 0.0 else 0.0
                if t < tmin:
                    tmin = t
                    amin = a
        if amin >= 0:
            if tmin < 0.0:
                tmin = 0.0
            for a in range(k):
                j = A[a]
                b[j] += tmin * (cand[a] - b[j])
            b[A[amin]] = 0.0
            for a in range(amin, k - 1):
                A[a] = A[a + 1]
                s[a] = s[a + 1]
            k -= 1
            if not _chol_factor(G, A, k, L):
                return FAILED, k
            continue
        for a in range(k):
            b[A[a]] = cand[a]
        for j in range(p):
            r[j] = c[j]
        for a in range(k):
            j = A[a]
            bj = b[j]
            row = G[j]
            for m in range(p):
                r[m] -= bj * row[m]
        worst = slack
        jw = -1
        for j in range(p):
            if skip[j] or b[j] != 0.0:
                continue
            v = abs(r[j]) - half
            if v > worst:
                worst = v
                jw = j
        if jw < 0:
            return OK, k
        sg = 1.0 if r[jw] > 0 else -1.0
        if _chol_append(G, A, k, jw, L):
            A[k] = jw
            s[k] = sg
            k += 1
            continue
        # jw lies in the span of the support (x_jw = X_A w). Moving b_jw up by t
        # and b_A by -t sg w keeps the fit and lowers the penalty, so slide until
        # a support coordinate reaches zero and trade it for jw.
        for a in range(k):
            rhs[a] = G[A[a], jw]
        _chol_solve(L, k, rhs, cand)
        tmin = np.inf
        amin = -1
        for a in range(k):
            d = -sg * cand[a]
            bj = b[A[a]]
            if bj * d < 0.0 and -bj / d < tmin:
                tmin = -bj / d
                amin = a
        if amin < 0:
            return FAILED, k
        for a in range(k):
            b[A[a]] -= tmin * sg * cand[a]
        b[A[amin]] = 0.0
        b[jw] = sg * tmin
        for a in range(amin, k - 1):
            A[a] = A[a + 1]
            s[a] = s[a + 1]
        A[k - 1] = jw
        s[k - 1] = sg
        if not _chol_factor(G, A, k, L):
            return FAILED, k
    return FAILED, k


@njit(cache=True)
def _support(b, A, s):
    k = 0
    for j in range(b.shape[0]):
        if b[j] != 0.0:
            A[k] = j
            s[k] = 1.0 if b[j] > 0 else -1.0
            k += 1
    return k


@njit(cache=True)
def polish(G, c, lam, b, r, skip):
    """Finish a converged coordinate-descent point with the exact active-set step.

    Returns True and overwrites ``b``/``r`` with the exact minimizer when the
    support's Gram block is well conditioned; otherwise leaves them as is.
    """
    p = b.shape[0]
    A = np.empty(p, dtype=np.int64)
    s = np.empty(p)
    k = _support(b, A, s)
    L = np.zeros((p, p))
    if not _chol_factor(G, A, k, L):
        return False
    b2 = b.copy()
    r2 = r.copy()
    status, _ = active_set_solve(G, c, lam, b2, r2, skip, A, s, k, L, np.empty(p), np.empty(p), 10 * p + 100)
    if status != OK:
        return False
    b[:] = b2
    r[:] = r2
    return True


@njit(cache=True)
def cd_path(G, c, lambdas, skip, tol, max_sweeps, out):
    """Warm-started solutions along ``lambdas``; row ``t`` of ``out`` holds b(lambdas[t]).

    Uses the exact active-set iteration, falling back to coordinate descent
    at any penalty where the support's Gram block is numerically singular.
    """
    p = c.shape[0]
    b = np.zeros(p)
    r = c.copy()
    A = np.empty(p, dtype=np.int64)
    s = np.empty(p)
    L = np.zeros((p, p))
    rhs = np.empty(p)
    cand = np.empty(p)
    k = 0
    exact = True
    max_iter = 10 * p + 100
    for t in range(lambdas.shape[0]):
        if exact:
            status, k = active_set_solve(G, c, lambdas[t], b, r, skip, A, s, k, L, rhs, cand, max_iter)
            exact = status == OK
        if not exact:
            for j in range(p):
                r[j] = c[j]
            for j in range(p):
                if b[j] != 0.0:
                    row = G[j]
                    for m in range(p):
                        r[m] -= b[j] * row[m]
            status, _ = cd_solve(G, c, lambdas[t], b, r, skip, tol, max_sweeps)
            if status != OK:
                return status, t
            k = _support(b, A, s)
            exact = _chol_factor(G, A, k, L)
        out[t, :] = b
    return OK, lambdas.shape[0]
