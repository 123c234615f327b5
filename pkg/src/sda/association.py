"""Slice-wise association between a nodewise residual and the outcome.

For residuals ``Z`` and slice indicators ``g_h``:

* ``nu[h] = mean_j g_h(Y_j) Z_j``
* ``psi[j, h] = g_h(Y_j) Z_j - nu[h]`` (estimated influence contributions)
* ``omega = psi' psi / n`` (plug-in asymptotic covariance of ``sqrt(n) nu``)
* ``z[h] = sqrt(n) nu[h] / sqrt(omega[h, h])``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateVarianceError
from .slicing import SlicePlan

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SdaResult:
    target_index: int
    nu_hat: np.ndarray
    omega_hat: np.ndarray
    z_scores: np.ndarray
    psi: np.ndarray
    n: int
    h_count: int
    degenerate_slices: tuple[int, ...] = ()

    @property
    def degenerate_mask(self) -> np.ndarray:
        mask = np.zeros(self.h_count, dtype=bool)
        mask[list(self.degenerate_slices)] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "target_index": self.target_index,
            "nu_hat": self.nu_hat.tolist(),
            "omega_diag": np.diag(self.omega_hat).tolist(),
            "z_scores": self.z_scores.tolist(),
            "degenerate_slices": list(self.degenerate_slices),
        }


def _check_lengths(residuals: np.ndarray, plan: SlicePlan) -> None:
    if residuals.ndim != 1 or residuals.shape[0] != plan.n:
        raise DataError(f"residual length {residuals.shape} does not match plan n={plan.n}")


def estimate_sda(residuals, plan: SlicePlan) -> np.ndarray:
    z = np.asarray(residuals, dtype=float)
    _check_lengths(z, plan)
    return np.bincount(plan.assignment, weights=z, minlength=plan.h_count) / plan.n


def influence_matrix(residuals, plan: SlicePlan, nu_hat) -> np.ndarray:
    z = np.asarray(residuals, dtype=float)
    nu = np.asarray(nu_hat, dtype=float)
    _check_lengths(z, plan)
    if nu.shape != (plan.h_count,):
        raise DataError(f"nu_hat has shape {nu.shape}, expected ({plan.h_count},)")
    psi = np.zeros((plan.n, plan.h_count))
    psi[np.arange(plan.n), plan.assignment] = z
    psi -= nu
    return psi


def variance_estimate(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    omega = psi.T @ psi / psi.shape[0]
    return 0.5 * (omega + omega.T)


def z_scores(nu_hat, omega_hat, n: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Standardized slice statistics and the indices of degenerate slices.

    A slice whose variance falls below ``VARIANCE_FLOOR`` gets ``z = 0``.
    Raises ``DegenerateVarianceError`` when every slice is degenerate.
    """
    nu = np.asarray(nu_hat, dtype=float)
    diag = np.diag(np.atleast_2d(omega_hat)).astype(float)
    bad = diag < VARIANCE_FLOOR
    if bad.all():
        raise DegenerateVarianceError("no variance signal: every slice has zero variance")
    z = np.zeros_like(nu)
    z[~bad] = np.sqrt(n) * nu[~bad] / np.sqrt(diag[~bad])
    return z, tuple(int(h) for h in np.flatnonzero(bad))


def compute_sda(residuals, plan: SlicePlan, target_index: int = -1) -> SdaResult:
    nu = estimate_sda(residuals, plan)
    psi = influence_matrix(residuals, plan, nu)
    omega = variance_estimate(psi)
    z, degenerate = z_scores(nu, omega, plan.n)
    return SdaResult(target_index, nu, omega, z, psi, plan.n, plan.h_count, degenerate)
