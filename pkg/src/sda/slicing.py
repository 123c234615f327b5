"""Slice the outcome into ``H`` groups; slice indicators are the transformations of Y.

Slices are numbered from 0. Continuous outcomes get rank-balanced slices
(the first ``n mod H`` slices take one extra observation); categorical
outcomes get one slice per label in sorted label order; survival outcomes
are split by event indicator (censored stratum first) and each stratum is
sliced like a continuous outcome.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, OutcomeKind
from .errors import DataError


@dataclass(frozen=True, eq=False)
class SlicePlan:
    h_count: int
    kind: OutcomeKind
    assignment: np.ndarray
    counts: np.ndarray
    boundaries: dict = field(default_factory=dict)
    tie_straddles: int = 0

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    @property
    def balanced(self) -> bool:
        return int(self.counts.max() - self.counts.min()) <= 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "h": self.h_count,
            "counts": [int(c) for c in self.counts],
            "boundaries": self.boundaries,
            "tie_straddles": self.tie_straddles,
        }


def default_h(n: int) -> int:
    """``ceil(n ** (1/3))`` clamped to ``[2, n // 2]``."""
    if n < 2:
        raise DataError(f"need n >= 2, got {n}")
    h = int(round(n ** (1.0 / 3.0)))
    # exact integer ceiling of the cube root
    while h**3 < n:
        h += 1
    while h > 1 and (h - 1) ** 3 >= n:
        h -= 1
    return max(1, min(max(h, 2), n // 2))


def _balanced_sizes(n: int, h: int) -> np.ndarray:
    sizes = np.full(h, n // h, dtype=np.intp)
    sizes[: n % h] += 1
    return sizes


def _rank_slices(y: np.ndarray, h: int) -> tuple[np.ndarray, list[float], int]:
    n = y.shape[0]
    order = np.argsort(y, kind="stable")
    sizes = _balanced_sizes(n, h)
    assignment = np.empty(n, dtype=np.intp)
    assignment[order] = np.repeat(np.arange(h), sizes)
    ys = y[order]
    ends = np.cumsum(sizes)[:-1]
    cuts = [float(ys[e - 1]) for e in ends]
    straddles = int(sum(ys[e - 1] == ys[e] for e in ends))
    return assignment, cuts, straddles


def _apportion(sizes: np.ndarray, h: int) -> np.ndarray:
    """Largest-remainder split of ``h`` slices across strata, at least one each."""
    quota = h * sizes / sizes.sum()
    alloc = np.maximum(np.floor(quota).astype(int), 1)
    while alloc.sum() > h:
        # only reachable when a stratum was raised to its minimum
        j = int(np.argmax(np.where(alloc > 1, alloc - quota, -np.inf)))
        alloc[j] -= 1
    remainder = quota - alloc
    for j in np.argsort(-remainder, kind="stable")[: h - alloc.sum()]:
        alloc[j] += 1
    return alloc


def make_slices(
    y,
    kind: OutcomeKind | str = OutcomeKind.CONTINUOUS,
    h: int | None = None,
    event=None,
) -> SlicePlan:
    kind = OutcomeKind(kind)
    y = np.asarray(y)
    n = y.shape[0]

    if kind is OutcomeKind.CATEGORICAL:
        labels, assignment = np.unique(y, return_inverse=True)
        if h is not None and h != labels.size:
            raise DataError(f"categorical outcome has {labels.size} labels but h={h}")
        counts = np.bincount(assignment, minlength=labels.size)
        bounds = {"labels": [lab.item() if hasattr(lab, "item") else lab for lab in labels]}
        return SlicePlan(int(labels.size), kind, assignment.astype(np.intp), counts, bounds)

    if h is None:
        h = default_h(n)
    if h < 1:
        raise DataError(f"h must be >= 1, got {h}")
    if h > n:
        raise DataError(f"h={h} exceeds n={n}")
    y = y.astype(float)

    if kind is OutcomeKind.CONTINUOUS:
        assignment, cuts, straddles = _rank_slices(y, h)
        bounds = {"cuts": cuts}
    else:
        if event is None:
            raise DataError("survival slicing needs the event indicator")
        event = np.asarray(event)
        strata = [np.flatnonzero(event == 0), np.flatnonzero(event == 1)]
        sizes = np.array([s.size for s in strata])
        if np.any(sizes == 0):
            raise DataError("empty survival stratum: need both censored and event observations")
        if h < 2:
            raise DataError("survival slicing needs h >= 2")
        alloc = _apportion(sizes, h)
        assignment = np.empty(n, dtype=np.intp)
        bounds = {"h_censored": int(alloc[0]), "h_event": int(alloc[1])}
        straddles = 0
        offset = 0
        for name, idx, hs in zip(("censored", "event"), strata, alloc):
            sub, cuts, st = _rank_slices(y[idx], int(hs))
            assignment[idx] = sub + offset
            bounds[f"{name}_cuts"] = cuts
            straddles += st
            offset += int(hs)

    counts = np.bincount(assignment, minlength=h)
    if straddles:
        warnings.warn(f"tied outcome values straddle {straddles} slice boundaries", stacklevel=2)
    return SlicePlan(int(h), kind, assignment, counts, bounds, straddles)


def slices_for(d: Dataset, h: int | None = None) -> SlicePlan:
    """Slice a dataset's outcome according to its kind."""
    if h is not None and d.kind is not OutcomeKind.CATEGORICAL:
        h = min(h, d.n // 2) if d.n >= 4 else h
    return make_slices(d.y, d.kind, h, d.event)


def indicator_matrix(plan: SlicePlan) -> np.ndarray:
    """``n x H`` 0/1 matrix; entry ``(j, h)`` is 1 iff observation ``j`` is in slice ``h``."""
    out = np.zeros((plan.n, plan.h_count))
    out[np.arange(plan.n), plan.assignment] = 1.0
    return out
