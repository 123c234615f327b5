"""Correlation screening for ultra-high dimensions and Benjamini-Hochberg FDR control."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .dataset import Dataset
from .errors import DataError


class CorrMethod(str, enum.Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"


@dataclass(frozen=True, eq=False)
class ScreenSet:
    target_index: int
    gamma: float
    kept: np.ndarray
    correlations: np.ndarray


@dataclass(frozen=True, eq=False)
class FdrReport:
    q: float
    p_values: np.ndarray
    adjusted: np.ndarray
    rejected: np.ndarray
    threshold_rank: int

    @property
    def rejected_mask(self) -> np.ndarray:
        mask = np.zeros(self.p_values.shape[0], dtype=bool)
        mask[self.rejected] = True
        return mask


def _prepare(a: np.ndarray, method: CorrMethod) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if method is CorrMethod.SPEARMAN:
        a = rankdata(a, axis=0)
    return a - a.mean(axis=0)


def abs_correlations(x, v, method: CorrMethod | str = CorrMethod.PEARSON) -> np.ndarray:
    """``|corr(x_j, v)|`` for every column of ``x``; constant columns give 0."""
    method = CorrMethod(method)
    xc = _prepare(x, method)
    vc = _prepare(v, method)
    vn = math.sqrt(float(vc @ vc))
    if vn == 0:
        raise DataError("constant target column: correlation undefined")
    xn = np.sqrt((xc * xc).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(xc.T @ vc) / (xn * vn)
    r[xn == 0] = 0.0
    return np.minimum(r, 1.0)


def _top(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort on -score: ties go to the smaller index
    return np.argsort(-scores, kind="stable")[:k]


def screen_size(n: int, gamma: float) -> int:
    """``floor(gamma * (n - 1))`` robust to round-off in ``gamma``."""
    return int(math.floor(gamma * (n - 1) + 1e-9))


def auto_gamma(n: int) -> float:
    return (n - 2) / (n - 1)


def sis_screen(
    d: Dataset, i: int, gamma: float, method: CorrMethod | str = CorrMethod.PEARSON
) -> ScreenSet:
    """Keep the ``floor(gamma (n-1))`` predictors most correlated with predictor ``i``."""
    if not 0 < gamma < 1:
        raise DataError(f"gamma must lie in (0, 1), got {gamma}")
    if d.n < 3:
        raise DataError("screening needs n >= 3")
    i = d.column_index(i)
    others = np.delete(np.arange(d.p), i)
    r = abs_correlations(d.x[:, others], d.x[:, i], method)
    k = min(screen_size(d.n, gamma), d.p - 1)
    order = _top(r, k)
    return ScreenSet(i, gamma, others[order], r[order])


def outcome_screen(
    d: Dataset, keep: int, method: CorrMethod | str = CorrMethod.SPEARMAN
) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the ``keep`` predictors most correlated with the outcome, and those correlations."""
    if not 1 <= keep <= d.p:
        raise DataError(f"keep must lie in [1, p={d.p}], got {keep}")
    r = abs_correlations(d.x, d.outcome_as_float(), method)
    order = _top(r, keep)
    return order, r[order]


def bh_adjust(p_values, q: float) -> FdrReport:
    """Benjamini-Hochberg step-up procedure at target FDR ``q``."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DataError("need a non-empty sequence of p-values")
    if not 0 < q < 1:
        raise DataError(f"q must lie in (0, 1), got {q}")
    if np.any((p <= 0) | (p > 1)):
        raise DataError("p-values must lie in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    passing = np.flatnonzero(ranked <= q * np.arange(1, m + 1) / m)
    k = int(passing.max() + 1) if passing.size else 0
    adj_sorted = np.minimum.accumulate((ranked * m / np.arange(1, m + 1))[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(adj_sorted, 1.0)
    return FdrReport(q, p, adjusted, np.sort(order[:k]), k)
