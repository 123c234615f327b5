"""Synthetic designs: sparse precision matrices, Gaussian covariates, and responses."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import DataError

PD_FLOOR = 0.1
REWIRE_PROB = 0.25
WEIGHT_RANGE = (0.5, 1.0)


class Setting(str, enum.Enum):
    S1 = "S1"
    S2 = "S2"


class Regression(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"


SIGNAL_VALUES = (0.2, -0.4, 0.6, -0.8, 1.0)


def block_precision(p: int, q: int) -> np.ndarray:
    """Block-diagonal precision: ``q x q`` blocks with unit diagonal and 0.5 elsewhere."""
    if q < 1 or p % q:
        raise DataError(f"block size q={q} must divide p={p}")
    block = np.full((q, q), 0.5)
    np.fill_diagonal(block, 1.0)
    return np.kron(np.eye(p // q), block)


@dataclass(frozen=True, eq=False)
class SmallWorldPrecision:
    theta: np.ndarray
    edges: tuple[tuple[int, int], ...]
    delta: float  # diagonal shift applied for positive definiteness


def ring_lattice_edges(p: int, e: int) -> list[tuple[int, int]]:
    return [(j, (j + k) % p) for j in range(p) for k in range(1, e + 1)]


def smallworld_precision(
    p: int,
    e: int,
    seed: int,
    rewire_prob: float = REWIRE_PROB,
    weight_range: tuple[float, float] = WEIGHT_RANGE,
    tau: float = PD_FLOOR,
) -> SmallWorldPrecision:
    """Precision matrix supported on a Watts-Strogatz graph.

    Each node starts linked to the ``e`` nearest neighbours on either side of
    a ring; edges are rewired with probability ``rewire_prob``. Edge weights
    are uniform on ``(-hi, -lo) U (lo, hi)`` with a fair-coin sign, the
    diagonal is 1, and ``delta * I`` is added so the smallest eigenvalue is at
    least ``tau``.
    """
    if e < 1 or p <= 2 * e:
        raise DataError(f"need e >= 1 and p > 2e, got p={p}, e={e}")
    rng = np.random.default_rng(seed)
    graph = nx.watts_strogatz_graph(p, 2 * e, rewire_prob, seed=int(rng.integers(2**31)))
    edges = tuple(sorted((min(a, b), max(a, b)) for a, b in graph.edges()))
    lo, hi = weight_range
    theta = np.eye(p)
    if edges:
        a, b = np.array(edges).T
        w = rng.uniform(lo, hi, size=len(edges)) * rng.choice([-1.0, 1.0], size=len(edges))
        theta[a, b] = w
        theta[b, a] = w
    lam_min = float(np.linalg.eigvalsh(theta)[0])
    delta = max(0.0, tau - lam_min)
    theta += delta * np.eye(p)
    return SmallWorldPrecision(theta, edges, delta)


def sample_gaussian(theta, n: int, seed: int) -> np.ndarray:
    """``n`` rows iid ``N(0, theta^{-1})`` via the Cholesky factor of the precision."""
    theta = np.asarray(theta, dtype=float)
    try:
        upper = cholesky(theta, lower=False)  # theta = U'U
    except np.linalg.LinAlgError as exc:
        raise DataError(f"precision matrix is not positive definite: {exc}") from None
    z = np.random.default_rng(seed).standard_normal((theta.shape[0], n))
    # x = U^{-1} z has covariance U^{-1} U^{-T} = theta^{-1}
    return solve_triangular(upper, z, lower=False).T


def generate_coefficients(setting: Setting | str, q: int, p: int) -> np.ndarray:
    """Coefficient vector for setting S1 (five isolated signals) or S2 (five signal blocks)."""
    setting = Setting(setting)
    if p < 5 * q:
        raise DataError(f"need p >= 5q, got p={p}, q={q}")
    b = np.zeros(p)
    if setting is Setting.S1:
        b[np.arange(5) * q] = SIGNAL_VALUES
    else:
        b[: 5 * q] = np.repeat(SIGNAL_VALUES, q)
    return b


def generate_response(x, b, model: Regression | str, seed: int) -> np.ndarray:
    model = Regression(model)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if x.shape[1] != b.shape[0]:
        raise DataError(f"x has {x.shape[1]} columns but b has length {b.shape[0]}")
    eps = np.random.default_rng(seed).standard_normal(x.shape[0])
    lin = x @ b
    if model is Regression.R1:
        return lin + eps
    if model is Regression.R2:
        return np.exp(lin) + eps
    if model is Regression.R3:
        return np.sin(lin) * np.exp(lin) + eps
    return np.exp(lin + eps)
