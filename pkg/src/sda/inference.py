"""KS/CvM statistics and multiplier-bootstrap calibration for one predictor."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._seeds import derive_seed
from .association import SdaResult, compute_sda
from .dataset import Dataset
from .errors import DataError, DegenerateVarianceError
from .lasso import LassoFit, nodewise_fit, residuals_for
from .slicing import SlicePlan, slices_for

DEFAULT_DRAWS = 1000
DEFAULT_FDR_DRAWS = 10_000
# Bound on multipliers held in memory at once.
_CHUNK_ELEMENTS = 4_000_000


class StatKind(str, enum.Enum):
    KS = "ks"
    CVM = "cvm"


def _abs_z(z, degenerate: Iterable[int]) -> np.ndarray:
    a = np.abs(np.asarray(z, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise DataError("z must be a non-empty 1-d sequence")
    bad = list(degenerate)
    if len(bad) == a.size:
        raise DegenerateVarianceError("no non-degenerate slices")
    a[bad] = 0.0
    return a


def ks_statistic(z, degenerate: Iterable[int] = ()) -> float:
    """Largest absolute z-score over non-degenerate slices."""
    return float(_abs_z(z, degenerate).max())


def cvm_statistic(z, degenerate: Iterable[int] = ()) -> float:
    """Mean absolute z-score; degenerate slices count as zero but stay in the divisor."""
    return float(_abs_z(z, degenerate).mean())


def statistic(z, kind: StatKind | str, degenerate: Iterable[int] = ()) -> float:
    kind = StatKind(kind)
    return ks_statistic(z, degenerate) if kind is StatKind.KS else cvm_statistic(z, degenerate)


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    statistics: np.ndarray
    kind: StatKind
    seed: int

    @property
    def size(self) -> int:
        return self.statistics.shape[0]


def simulate_process(psi, l_draws: int, seed: int) -> np.ndarray:
    """``l_draws`` realizations of ``n^{-1/2} sum_j U_j psi_j`` with ``U_j`` iid N(0, 1).

    Returns an ``l_draws x H`` array. Multipliers are drawn in chunks whose
    size depends only on ``n``; they are the same numbers a single
    ``(l_draws, n)`` draw from the generator would give.
    """
    psi = np.asarray(psi, dtype=float)
    if l_draws < 1:
        raise DataError("l_draws must be >= 1")
    n, h = psi.shape
    rng = np.random.default_rng(seed)
    out = np.empty((l_draws, h))
    step = max(1, _CHUNK_ELEMENTS // max(n, 1))
    scale = 1.0 / math.sqrt(n)
    for start in range(0, l_draws, step):
        stop = min(l_draws, start + step)
        u = rng.standard_normal((stop - start, n))
        out[start:stop] = (u @ psi) * scale
    return out


def reduce_process(phi, omega_diag, kind: StatKind | str, degenerate: Iterable[int] = ()) -> np.ndarray:
    """Standardize simulated processes slice-wise and reduce each draw to a statistic."""
    kind = StatKind(kind)
    diag = np.asarray(omega_diag, dtype=float)
    bad = np.zeros(diag.shape[0], dtype=bool)
    bad[list(degenerate)] = True
    bad |= diag < 1e-12
    if bad.all():
        raise DegenerateVarianceError("no variance signal: every slice has zero variance")
    scale = np.zeros_like(diag)
    scale[~bad] = 1.0 / np.sqrt(diag[~bad])
    zu = np.abs(np.asarray(phi, dtype=float) * scale)
    return zu.max(axis=1) if kind is StatKind.KS else zu.mean(axis=1)


def multiplier_bootstrap(
    psi,
    omega_diag,
    kind: StatKind | str,
    l_draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    degenerate: Iterable[int] = (),
) -> BootstrapDraws:
    phi = simulate_process(psi, l_draws, seed)
    stats = reduce_process(phi, omega_diag, kind, degenerate)
    return BootstrapDraws(stats, StatKind(kind), seed)


def p_value(stat: float, draws: BootstrapDraws | np.ndarray) -> float:
    """Add-one bootstrap p-value ``(1 + #{draws >= stat}) / (L + 1)``."""
    d = draws.statistics if isinstance(draws, BootstrapDraws) else np.asarray(draws)
    return float((1 + np.count_nonzero(d >= stat)) / (d.shape[0] + 1))


def critical_value(draws: BootstrapDraws | np.ndarray, alpha: float) -> float:
    """The ``ceil((1 - alpha) L)``-th smallest draw."""
    if not 0 < alpha < 1:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    d = draws.statistics if isinstance(draws, BootstrapDraws) else np.asarray(draws)
    L = d.shape[0]
    # guard against (1 - alpha) * L landing a hair above an integer
    k = math.ceil((1.0 - alpha) * L - 1e-9)
    k = min(max(k, 1), L)
    return float(np.partition(d, k - 1)[k - 1])


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    target_index: int
    statistic_kind: StatKind
    statistic: float
    p_value: float
    critical_value: float
    alpha: float
    rejected: bool
    bootstrap_draws: int
    seed: int
    h_count: int = 0
    degenerate_slices: tuple[int, ...] = ()
    conditioning_size: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.target_index,
            "kind": self.statistic_kind.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "rejected": self.rejected,
            "L": self.bootstrap_draws,
            "seed": self.seed,
            "H": self.h_count,
            "degenerate_slices": list(self.degenerate_slices),
        }


@dataclass(frozen=True, eq=False)
class VariableAnalysis:
    """Everything computed while testing one predictor."""

    fit: LassoFit
    plan: SlicePlan
    sda: SdaResult
    outcomes: dict[StatKind, TestOutcome] = field(default_factory=dict)


def analyze_variable(
    d: Dataset,
    i: int,
    *,
    kinds: Sequence[StatKind | str] = (StatKind.KS, StatKind.CVM),
    h: int | None = None,
    plan: SlicePlan | None = None,
    l_draws: int = DEFAULT_DRAWS,
    alpha: float = 0.05,
    screen: Sequence[int] | None = None,
    seed: int = 0,
    folds: int = 10,
    coefficients=None,
    lam: float | None = None,
) -> VariableAnalysis:
    """Slice, fit the nodewise LASSO, estimate the association, and bootstrap.

    All requested statistic kinds share the same fit and the same bootstrap
    multipliers, so each outcome equals what ``test_variable`` returns for
    that kind alone. Passing ``coefficients`` (aligned with the conditioning
    columns) skips the LASSO entirely.
    """
    if not d.centered:
        raise DataError("dataset must be centered before testing")
    i = d.column_index(i)
    if not 0 < alpha < 1:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    if plan is None:
        plan = slices_for(d, h)
    if coefficients is not None:
        fit = residuals_for(d, i, coefficients, screen)
    else:
        fit = nodewise_fit(d, i, screen=screen, folds=folds, seed=seed, lam=lam)
    sda = compute_sda(fit.residuals, plan, target_index=i)

    phi = simulate_process(sda.psi, l_draws, derive_seed(seed, i, 1))
    diag = np.diag(sda.omega_hat)
    outcomes = {}
    for kind in dict.fromkeys(StatKind(k) for k in kinds):
        t = statistic(sda.z_scores, kind, sda.degenerate_slices)
        draws = reduce_process(phi, diag, kind, sda.degenerate_slices)
        crit = critical_value(draws, alpha)
        pv = p_value(t, draws)
        outcomes[kind] = TestOutcome(
            target_index=i,
            statistic_kind=kind,
            statistic=t,
            p_value=pv,
            critical_value=crit,
            alpha=alpha,
            rejected=bool(t > crit or pv < alpha),
            bootstrap_draws=l_draws,
            seed=seed,
            h_count=plan.h_count,
            degenerate_slices=sda.degenerate_slices,
            conditioning_size=int(fit.predictors.size),
        )
    return VariableAnalysis(fit, plan, sda, outcomes)


def test_variable(
    d: Dataset,
    i: int,
    kind: StatKind | str = StatKind.CVM,
    h: int | None = None,
    l_draws: int = DEFAULT_DRAWS,
    alpha: float = 0.05,
    screen: Sequence[int] | None = None,
    seed: int = 0,
    **kwargs,
) -> TestOutcome:
    """Test whether predictor ``i`` is associated with the outcome given the others."""
    kind = StatKind(kind)
    res = analyze_variable(
        d, i, kinds=(kind,), h=h, l_draws=l_draws, alpha=alpha, screen=screen, seed=seed, **kwargs
    )
    return res.outcomes[kind]


test_variable.__test__ = False
