"""Nodewise LASSO: regress one predictor on the others and keep the residuals.

The fitted objective is ``(1/n)||x_i - X_{-i} b||^2 + lam * ||b||_1`` with no
intercept (columns are assumed centered). ``lam`` is chosen by K-fold
cross-validation over a geometric path starting at the null-model threshold
``2 * max_j |x_j' x_i| / n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _cd
from ._seeds import derive_seed
from .dataset import Dataset
from .errors import ConvergenceError, DataError

TOL = 1e-7
MAX_SWEEPS = 10_000
PATH_LENGTH = 100
FALLBACK_PATH_LENGTH = 50
KKT_TOL = 1e-6
# A column whose mean square falls below this fraction of the largest is treated as constant.
_DEGENERATE_REL = 1e-14
# |corr| at or above this counts as exact collinearity between target and a predictor.
_COLLINEAR = 1.0 - 1e-12


@dataclass(frozen=True, eq=False)
class LassoFit:
    """A fitted nodewise regression.

    ``predictors`` holds the column indices (in the source matrix) that were
    regressed on; ``coefficients`` is aligned with it.
    """

    target_index: int
    predictors: np.ndarray
    coefficients: np.ndarray
    lam: float
    residuals: np.ndarray
    objective_value: float
    sweeps: int = 0
    degenerate: bool = False
    cv: CvReport | None = field(default=None, repr=False)

    @property
    def active_set(self) -> np.ndarray:
        return self.predictors[self.coefficients != 0]

    @property
    def l1_norm(self) -> float:
        """The constrained-form bound matched by this penalized fit."""
        return float(np.abs(self.coefficients).sum())

    def to_dict(self) -> dict:
        active = self.coefficients != 0
        return {
            "target_index": self.target_index,
            "lambda": self.lam,
            "active_set": [int(j) for j in self.predictors[active]],
            "coefficients": [float(v) for v in self.coefficients[active]],
            "l1_norm": self.l1_norm,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True, eq=False)
class CvReport:
    lambda_path: np.ndarray
    cv_errors: np.ndarray  # folds x path
    mean_errors: np.ndarray
    chosen_lambda: float
    chosen_index: int
    fold_count: int


def _as_problem(x_others, x_target) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x_others, dtype=float)
    y = np.asarray(x_target, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DataError(f"dimension mismatch: x {x.shape}, target {y.shape}")
    if x.shape[0] < 2:
        raise DataError("need at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in lasso inputs")
    return x, y


def _degenerate_mask(diag: np.ndarray) -> np.ndarray:
    top = diag.max() if diag.size else 0.0
    return diag <= _DEGENERATE_REL * max(top, np.finfo(float).tiny)


def lambda_max(x_others, x_target) -> float:
    """Smallest penalty at which the all-zero solution is optimal."""
    x, y = _as_problem(x_others, x_target)
    if x.shape[1] == 0:
        return 0.0
    return float(2.0 * np.max(np.abs(x.T @ y)) / x.shape[0])


def _check(status: int, what: str) -> None:
    if status == _cd.MAX_SWEEPS:
        raise ConvergenceError(f"{what}: no convergence within {MAX_SWEEPS} sweeps")
    if status == _cd.NON_MONOTONE:
        raise ConvergenceError(f"{what}: objective increased during a sweep")


def objective(x_others, x_target, coefficients, lam: float) -> float:
    x, y = _as_problem(x_others, x_target)
    resid = y - x @ coefficients
    return float(resid @ resid / x.shape[0] + lam * np.abs(coefficients).sum())


def fit_lasso(
    x_others,
    x_target,
    lam: float,
    *,
    target_index: int = -1,
    predictors: Sequence[int] | None = None,
    warm_start: np.ndarray | None = None,
    polish: bool = True,
) -> LassoFit:
    """Minimize ``(1/n)||x_target - X b||^2 + lam ||b||_1`` by coordinate descent.

    With ``polish`` the converged point is finished by an exact solve of the
    optimality conditions on its signed support, which can only lower the
    objective; it is skipped when that support is numerically collinear. If
    descent hits its sweep limit, the fit is taken from a warm-started path
    ending at ``lam`` instead.
    """
    x, y = _as_problem(x_others, x_target)
    if not lam >= 0:
        raise DataError(f"lambda must be >= 0, got {lam}")
    n, m = x.shape
    G = x.T @ x / n
    c = x.T @ y / n
    skip = _degenerate_mask(np.diag(G).copy())
    b = np.zeros(m) if warm_start is None else np.array(warm_start, dtype=float)
    b[skip] = 0.0
    r = c - G @ b
    status, sweeps = _cd.cd_solve(G, c, float(lam), b, r, skip, TOL, MAX_SWEEPS)
    if status == _cd.MAX_SWEEPS and lam > 0:
        # cold-start descent stalls on ill-conditioned designs at small penalties;
        # the warm-started exact path from lambda_max reaches the same minimizer
        top = 2.0 * float(np.max(np.abs(c)))
        if top > lam:
            b = _path_from_gram(G, c, np.geomspace(top, lam, FALLBACK_PATH_LENGTH))[-1].copy()
        else:
            b = np.zeros(m)
        r = c - G @ b
        status = _cd.OK
    _check(status, "fit_lasso")
    if polish:
        _cd.polish(G, c, float(lam), b, r, skip)
    resid = y - x @ b
    pred = np.arange(m) if predictors is None else np.asarray(predictors, dtype=int)
    return LassoFit(
        target_index=target_index,
        predictors=pred,
        coefficients=b,
        lam=float(lam),
        residuals=resid,
        objective_value=float(resid @ resid / n + lam * np.abs(b).sum()),
        sweeps=int(sweeps),
    )


def kkt_residual(x_others, x_target, coefficients, lam: float) -> float:
    """Largest violation of the LASSO optimality conditions.

    Zero means the subgradient conditions hold exactly; constant columns are
    ignored.
    """
    x, y = _as_problem(x_others, x_target)
    n = x.shape[0]
    b = np.asarray(coefficients, dtype=float)
    grad = 2.0 * x.T @ (y - x @ b) / n
    keep = ~_degenerate_mask((x * x).sum(axis=0) / n)
    active = (b != 0) & keep
    inactive = (b == 0) & keep
    worst = 0.0
    if active.any():
        worst = max(worst, float(np.max(np.abs(grad[active] - lam * np.sign(b[active])))))
    if inactive.any():
        worst = max(worst, float(np.max(np.abs(grad[inactive]) - lam)))
    return max(worst, 0.0)


def lambda_path(x_others, x_target, path_length: int = PATH_LENGTH, ratio: float | None = None) -> np.ndarray:
    """Geometric path from the null-model threshold down to ``ratio`` times it."""
    if path_length < 2:
        raise DataError("path_length must be >= 2")
    x, y = _as_problem(x_others, x_target)
    if ratio is None:
        ratio = 1e-2 if x.shape[0] < x.shape[1] else 1e-3
    top = lambda_max(x, y)
    return top * np.geomspace(1.0, ratio, path_length)


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Random partition of ``range(n)`` into ``folds`` blocks of near-equal size."""
    perm = np.random.default_rng(seed).permutation(n)
    out = np.empty(n, dtype=np.intp)
    out[perm] = np.arange(n) % folds
    return out


def solve_path(x_others, x_target, lambdas) -> np.ndarray:
    """Warm-started coefficients for each penalty in ``lambdas`` (rows)."""
    x, y = _as_problem(x_others, x_target)
    n = x.shape[0]
    G = x.T @ x / n
    c = x.T @ y / n
    return _path_from_gram(G, c, np.asarray(lambdas, dtype=float))


def _path_from_gram(G: np.ndarray, c: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    skip = _degenerate_mask(np.diag(G).copy())
    out = np.zeros((lambdas.shape[0], c.shape[0]))
    status, _ = _cd.cd_path(np.ascontiguousarray(G), c, lambdas, skip, TOL, MAX_SWEEPS, out)
    _check(status, "lasso path")
    return out


def cv_select_lambda(
    x_others,
    x_target,
    folds: int = 10,
    path_length: int = PATH_LENGTH,
    seed: int = 0,
    ratio: float | None = None,
) -> CvReport:
    """Pick the penalty minimizing mean out-of-fold squared prediction error.

    Ties go to the smallest penalty.
    """
    x, y = _as_problem(x_others, x_target)
    n, m = x.shape
    if folds < 2 or folds > n:
        raise DataError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    lambdas = lambda_path(x, y, path_length, ratio)
    fold_id = fold_assignment(n, folds, seed)

    w = np.column_stack([x, y])
    full = w.T @ w
    errors = np.empty((folds, lambdas.shape[0]))
    sse = np.zeros(lambdas.shape[0])
    for f in range(folds):
        held = fold_id == f
        wf = w[held]
        n_tr = n - wf.shape[0]
        train = (full - wf.T @ wf) / n_tr
        coefs = _path_from_gram(train[:m, :m], train[:m, m].copy(), lambdas)
        resid = wf[:, m][:, None] - wf[:, :m] @ coefs.T
        fold_sse = (resid * resid).sum(axis=0)
        errors[f] = fold_sse / wf.shape[0]
        sse += fold_sse
    mean = sse / n
    best = int(np.flatnonzero(mean == mean.min()).max())
    return CvReport(
        lambda_path=lambdas,
        cv_errors=errors,
        mean_errors=mean,
        chosen_lambda=float(lambdas[best]),
        chosen_index=best,
        fold_count=folds,
    )


def conditioning_columns(p: int, i: int, screen: Sequence[int] | None = None) -> np.ndarray:
    if screen is None:
        return np.delete(np.arange(p), i)
    cols = np.unique(np.asarray(screen, dtype=int))
    if np.any(cols == i):
        raise DataError(f"screen set must exclude the target index {i}")
    if cols.size and (cols.min() < 0 or cols.max() >= p):
        raise DataError("screen index out of range")
    return cols


def residuals_for(d: Dataset, i: int, coefficients, screen: Sequence[int] | None = None) -> LassoFit:
    """Residuals for user-supplied regression coefficients (no fitting)."""
    cols = conditioning_columns(d.p, i, screen)
    b = np.asarray(coefficients, dtype=float)
    if b.shape != cols.shape:
        raise DataError(f"expected {cols.size} coefficients, got {b.shape}")
    resid = d.x[:, i] - d.x[:, cols] @ b
    return LassoFit(
        target_index=i,
        predictors=cols,
        coefficients=b,
        lam=0.0,
        residuals=resid,
        objective_value=float(resid @ resid / d.n),
    )


def nodewise_fit(
    d: Dataset,
    i: int,
    screen: Sequence[int] | None = None,
    folds: int = 10,
    seed: int = 0,
    path_length: int = PATH_LENGTH,
    lam: float | None = None,
) -> LassoFit:
    """Regress column ``i`` on the remaining (or screened) columns.

    The penalty is cross-validated unless ``lam`` is given. The fold
    partition is seeded from ``(seed, i)``. A target that exactly duplicates
    another column (up to scale) is fitted on that column alone without
    penalty and marked ``degenerate``.
    """
    cols = conditioning_columns(d.p, i, screen)
    xi = d.x[:, i]
    xo = d.x[:, cols]
    if cols.size == 0:
        return LassoFit(i, cols, np.zeros(0), 0.0, xi.copy(), float(xi @ xi / d.n))

    ss_o = (xo * xo).sum(axis=0)
    ss_i = float(xi @ xi)
    if ss_i > 0:
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.abs(xo.T @ xi) / np.sqrt(ss_o * ss_i)
        corr[~np.isfinite(corr)] = 0.0
        hit = np.flatnonzero(corr >= _COLLINEAR)
        if hit.size:
            j = int(hit[0])
            b = np.zeros(cols.size)
            b[j] = float(xo[:, j] @ xi / ss_o[j])
            resid = xi - xo[:, j] * b[j]
            return LassoFit(i, cols, b, 0.0, resid, float(resid @ resid / d.n), degenerate=True)

    cv = None
    if lam is None:
        folds = min(folds, d.n)
        cv = cv_select_lambda(xo, xi, folds=folds, path_length=path_length, seed=derive_seed(seed, i, 0))
        lam = cv.chosen_lambda
    fit = fit_lasso(xo, xi, lam, target_index=i, predictors=cols)
    return LassoFit(
        target_index=i,
        predictors=cols,
        coefficients=fit.coefficients,
        lam=fit.lam,
        residuals=fit.residuals,
        objective_value=fit.objective_value,
        sweeps=fit.sweeps,
        cv=cv,
    )
