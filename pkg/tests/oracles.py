"""Straight-line reference implementations used as test oracles.

These deliberately avoid the package's vectorized code paths: loops over
observations and slices, exhaustive enumeration where the problem is small,
and exact rational arithmetic for order-statistic indices.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def slices(y, h):
    """Rank-balanced slices from the definition: sort by (value, index), fill quotas in order."""
    n = len(y)
    order = sorted(range(n), key=lambda j: (float(y[j]), j))
    quotas = [n // h + (1 if k < n % h else 0) for k in range(h)]
    out = [0] * n
    pos = 0
    for k, q in enumerate(quotas):
        for j in order[pos:pos + q]:
            out[j] = k
        pos += q
    return out


def nu_hat(z, assign, h):
    n = len(z)
    nu = [0.0] * h
    for j in range(n):
        nu[assign[j]] += z[j]
    return [v / n for v in nu]


def psi_matrix(z, assign, nu):
    n, h = len(z), len(nu)
    return [[(z[j] if assign[j] == k else 0.0) - nu[k] for k in range(h)] for j in range(n)]


def omega_hat(psi):
    n, h = len(psi), len(psi[0])
    om = [[0.0] * h for _ in range(h)]
    for a in range(h):
        for b in range(h):
            s = 0.0
            for j in range(n):
                s += psi[j][a] * psi[j][b]
            om[a][b] = s / n
    return om


def z_scores(nu, om, n, floor=1e-12):
    return [math.sqrt(n) * nu[k] / math.sqrt(om[k][k]) if om[k][k] >= floor else 0.0 for k in range(len(nu))]


def ks(z):
    return max(abs(v) for v in z)


def cvm(z):
    return sum(abs(v) for v in z) / len(z)


def bootstrap(psi, om, u, kind, floor=1e-12):
    """Per-draw statistics from an explicit multiplier matrix ``u`` (L x n)."""
    n, h = len(psi), len(psi[0])
    out = []
    for row in u:
        zs = []
        for k in range(h):
            phi = 0.0
            for j in range(n):
                phi += row[j] * psi[j][k]
            phi /= math.sqrt(n)
            zs.append(phi / math.sqrt(om[k][k]) if om[k][k] >= floor else 0.0)
        out.append(ks(zs) if kind == "ks" else cvm(zs))
    return out


def critical_value(draws, alpha):
    # the level as the short rational it was meant to be, not its binary expansion
    k = math.ceil((1 - Fraction(alpha).limit_denominator(10**6)) * len(draws))
    return sorted(draws)[max(k, 1) - 1]


def p_value(stat, draws):
    return Fraction(1 + sum(1 for d in draws if d >= stat), len(draws) + 1)


def lasso_exact(x, y, lam):
    """Exact LASSO minimizer by enumerating every signed support (tiny p only).

    For each candidate support and sign vector, solve the stationarity
    equations and keep the first solution that satisfies all KKT conditions.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n, m = x.shape
    G = x.T @ x / n
    c = x.T @ y / n
    half = lam / 2.0
    best = None
    for size in range(m + 1):
        for support in itertools.combinations(range(m), size):
            for signs in itertools.product((-1.0, 1.0), repeat=size):
                b = np.zeros(m)
                if size:
                    idx = list(support)
                    sub = G[np.ix_(idx, idx)]
                    if np.linalg.cond(sub) > 1e12:
                        continue
                    b[idx] = np.linalg.solve(sub, c[idx] - half * np.array(signs))
                    if np.any(b[idx] * np.array(signs) <= 0):
                        continue
                grad = c - G @ b
                inactive = [j for j in range(m) if j not in support]
                if all(abs(grad[j]) <= half * (1 + 1e-12) + 1e-15 for j in inactive):
                    obj = np.sum((y - x @ b) ** 2) / n + lam * np.abs(b).sum()
                    if best is None or obj < best[1] - 1e-14:
                        best = (b, obj)
        if best is not None:
            return best[0]
    raise AssertionError("no signed support satisfied the KKT conditions")


def lasso_grid(x, y, lam, step=1e-3, bound=None):
    """Grid minimizer of ``(1/n)||y - Xb||^2 + lam ||b||_1`` for up to three coefficients.

    One and two coefficients are searched exhaustively on the full box. For
    three, an exhaustive search at 20x the step is refined by an exhaustive
    search at ``step`` over a window around the coarse minimizer.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n, m = x.shape
    G = x.T @ x / n
    c = x.T @ y / n
    yy = float(y @ y) / n
    if bound is None:
        # ||b||_1 <= f(0) / lam at the minimizer
        bound = yy / lam
    bound = math.ceil(bound / step) * step

    def argmin(axes):
        mesh = np.meshgrid(*axes, indexing="ij")
        b = np.stack([g.ravel() for g in mesh], axis=1)
        f = yy - 2 * b @ c + np.einsum("ij,jk,ik->i", b, G, b) + lam * np.abs(b).sum(axis=1)
        return b[int(np.argmin(f))]

    full = np.arange(-bound, bound + step / 2, step)
    if m <= 2:
        return argmin([full] * m)
    coarse = np.arange(-bound, bound + step * 10, step * 20)
    b0 = argmin([coarse] * m)
    window = [np.arange(v - 40 * step, v + 40 * step + step / 2, step) for v in b0]
    return argmin(window)


def pearson(a, b):
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    sab = sum((a[k] - ma) * (b[k] - mb) for k in range(n))
    saa = sum((a[k] - ma) ** 2 for k in range(n))
    sbb = sum((b[k] - mb) ** 2 for k in range(n))
    return sab / math.sqrt(saa * sbb)


def sis_ranking(x, i, keep):
    """Top-``keep`` predictors by |Pearson correlation| with column ``i``, ties to smaller index."""
    x = np.asarray(x, float)
    cols = [[float(v) for v in x[:, j]] for j in range(x.shape[1])]
    scored = [(-abs(pearson(cols[j], cols[i])), j) for j in range(x.shape[1]) if j != i]
    scored.sort()
    return [j for _, j in scored[:keep]]


def bh_rejections(p, q):
    m = len(p)
    order = sorted(range(m), key=lambda j: (p[j], j))
    k = 0
    for rank in range(1, m + 1):
        if p[order[rank - 1]] <= q * rank / m:
            k = rank
    return sorted(order[:k])


def cv_lambda_exact(x, y, folds, seed, path_length=100):
    """CV-chosen penalty using exact enumeration fits on each training fold.

    Folds follow the documented convention: a seeded permutation dealt out
    round-robin. Ties in mean error go to the smallest penalty.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = x.shape[0]
    top = 2.0 * np.max(np.abs(x.T @ y)) / n
    ratio = 1e-2 if n < x.shape[1] else 1e-3
    lambdas = top * np.geomspace(1.0, ratio, path_length)
    perm = np.random.default_rng(seed).permutation(n)
    fold = np.empty(n, dtype=int)
    for pos, j in enumerate(perm):
        fold[j] = pos % folds
    sse = np.zeros(path_length)
    for f in range(folds):
        train = fold != f
        for k, lam in enumerate(lambdas):
            b = lasso_exact(x[train], y[train], lam)
            for j in np.flatnonzero(~train):
                sse[k] += (y[j] - x[j] @ b) ** 2
    mean = sse / n
    best = max(k for k in range(path_length) if mean[k] == mean.min())
    return lambdas[best], mean
