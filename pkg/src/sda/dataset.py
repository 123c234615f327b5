"""Tabular data model: predictor matrix plus outcome, with centering metadata."""

from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError


class OutcomeKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    SURVIVAL = "survival"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` predictor matrix and its outcome.

    For survival outcomes ``y`` holds the observed times and ``event`` the
    0/1 indicators. Arrays are copied and made read-only on construction, so
    a ``Dataset`` can be shared between workers without defensive copies.
    """

    x: np.ndarray
    y: np.ndarray
    kind: OutcomeKind = OutcomeKind.CONTINUOUS
    event: np.ndarray | None = None
    column_names: tuple[str, ...] = ()
    outcome_name: str | tuple[str, str] = "y"
    column_means: np.ndarray | None = None
    column_scales: np.ndarray | None = None
    centered: bool = False
    constant_columns: tuple[int, ...] = field(default=(), init=False)

    def __post_init__(self) -> None:
        kind = OutcomeKind(self.kind)
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise DataError(f"x must be 2-dimensional, got shape {x.shape}")
        n, p = x.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(x)):
            r, c = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite predictor value at row {r}, column {c}")

        y = np.asarray(self.y)
        if y.shape != (n,):
            raise DataError(f"outcome length {y.shape} does not match n={n}")
        event = None
        if kind is OutcomeKind.CATEGORICAL:
            if y.dtype.kind == "f" and not np.all(np.isfinite(y)):
                raise DataError("non-finite categorical label")
        else:
            y = y.astype(float)
            if not np.all(np.isfinite(y)):
                raise DataError("non-finite outcome value")
        if kind is OutcomeKind.SURVIVAL:
            if self.event is None:
                raise DataError("survival outcome requires an event indicator")
            ev = np.asarray(self.event, dtype=float)
            if ev.shape != (n,):
                raise DataError("event indicator length does not match n")
            if not np.all((ev == 0) | (ev == 1)):
                raise DataError("event indicator not in {0,1}")
            if np.any(y < 0):
                raise DataError("survival time must be >= 0")
            event = _readonly(ev.astype(np.int8))

        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        means = np.zeros(p) if self.column_means is None else np.asarray(self.column_means, float)
        if means.shape != (p,):
            raise DataError("column_means must have length p")
        constant = tuple(int(j) for j in np.flatnonzero(np.ptp(x, axis=0) == 0))

        set_ = object.__setattr__
        set_(self, "kind", kind)
        set_(self, "x", _readonly(x))
        set_(self, "y", _readonly(y))
        set_(self, "event", event)
        set_(self, "column_names", names)
        set_(self, "column_means", _readonly(means))
        if self.column_scales is not None:
            set_(self, "column_scales", _readonly(np.asarray(self.column_scales, float)))
        set_(self, "constant_columns", constant)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def column_index(self, key: int | str) -> int:
        """Resolve a column name or 0-based index."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.p:
                raise DataError(f"column index {key} out of range [0, {self.p})")
            return int(key)
        try:
            return self.column_names.index(key)
        except ValueError:
            if str(key).lstrip("-").isdigit():
                return self.column_index(int(key))
            raise DataError(f"unknown predictor column {key!r}") from None

    def outcome_as_float(self) -> np.ndarray:
        """Outcome coded as reals (categorical labels become sorted-label codes)."""
        if self.kind is OutcomeKind.CATEGORICAL and self.y.dtype.kind not in "fiu":
            _, codes = np.unique(self.y, return_inverse=True)
            return codes.astype(float)
        return np.asarray(self.y, dtype=float)


def center_columns(d: Dataset, *, scale: bool = False) -> Dataset:
    """Subtract each predictor's sample mean; optionally scale to unit variance.

    Raises ``DataError`` if ``d`` is already centered.
    """
    if d.centered:
        raise DataError("dataset is already centered")
    means = d.x.mean(axis=0)
    x = d.x - means
    scales = None
    if scale:
        scales = np.sqrt((x**2).mean(axis=0))
        scales[scales == 0] = 1.0
        x = x / scales
    if d.constant_columns:
        names = [d.column_names[j] for j in d.constant_columns]
        warnings.warn(f"constant predictor columns: {names}", stacklevel=2)
    return replace(d, x=x, column_means=means, column_scales=scales, centered=True)


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"unparseable cell {cell!r} at row {row}, column {col!r}") from None
    if not np.isfinite(v):
        raise DataError(f"non-finite cell {cell!r} at row {row}, column {col!r}")
    return v


def load_csv(
    path: str | Path,
    outcome: str | Sequence[str],
    kind: OutcomeKind | str = OutcomeKind.CONTINUOUS,
    delimiter: str = ",",
) -> Dataset:
    """Read a delimited file with a header row into an uncentered ``Dataset``.

    ``outcome`` names the outcome column, or ``(time, event)`` for survival
    data. Every other column is a predictor, in file order. Row numbers in
    error messages count data rows from 1.
    """
    kind = OutcomeKind(kind)
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")

    if kind is OutcomeKind.SURVIVAL:
        if isinstance(outcome, str) or len(outcome) != 2:
            raise DataError("survival outcome needs both time and event columns")
        outcome_cols = list(outcome)
    else:
        if not isinstance(outcome, str):
            if len(outcome) != 1:
                raise DataError("outcome must name exactly one column")
            outcome = outcome[0]
        outcome_cols = [outcome]

    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        rows = [r for r in reader if r]

    for col in outcome_cols:
        if col not in header:
            raise DataError(f"missing outcome column {col!r}")
    out_idx = [header.index(c) for c in outcome_cols]
    pred_idx = [j for j in range(len(header)) if j not in out_idx]
    if not pred_idx:
        raise DataError("no predictor columns")

    x = np.empty((len(rows), len(pred_idx)))
    raw_y: list[str] = []
    raw_ev: list[str] = []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} fields, expected {len(header)}")
        for k, j in enumerate(pred_idx):
            x[r - 1, k] = _parse_float(row[j].strip(), r, header[j])
        raw_y.append(row[out_idx[0]].strip())
        if kind is OutcomeKind.SURVIVAL:
            raw_ev.append(row[out_idx[1]].strip())

    event = None
    if kind is OutcomeKind.CATEGORICAL:
        try:
            y = np.array([_parse_float(v, r, outcome_cols[0]) for r, v in enumerate(raw_y, 1)])
        except DataError:
            y = np.array(raw_y, dtype=str)
    else:
        y = np.array([_parse_float(v, r, outcome_cols[0]) for r, v in enumerate(raw_y, 1)])
    if kind is OutcomeKind.SURVIVAL:
        event = np.array([_parse_float(v, r, outcome_cols[1]) for r, v in enumerate(raw_ev, 1)])

    return Dataset(
        x=x,
        y=y,
        kind=kind,
        event=event,
        column_names=tuple(header[j] for j in pred_idx),
        outcome_name=outcome_cols[0] if len(outcome_cols) == 1 else tuple(outcome_cols),
    )


def write_csv(d: Dataset, path: str | Path, delimiter: str = ",") -> None:
    """Write ``d`` so that ``load_csv`` reproduces it exactly (17 significant digits)."""

    def fmt(v: object) -> str:
        return format(v, ".17g") if isinstance(v, (float, np.floating)) else str(v)

    if d.kind is OutcomeKind.SURVIVAL:
        time_name, event_name = d.outcome_name
        outcome_header = [time_name, event_name]
    else:
        outcome_header = [str(d.outcome_name)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([*d.column_names, *outcome_header])
        for j in range(d.n):
            out = [fmt(d.y[j])]
            if d.event is not None:
                out.append(str(int(d.event[j])))
            w.writerow([fmt(v) for v in d.x[j]] + out)
