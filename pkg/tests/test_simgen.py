from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sda.errors import DataError
from sda.simgen import (
    block_precision,
    generate_coefficients,
    generate_response,
    ring_lattice_edges,
    sample_gaussian,
    smallworld_precision,
)


def test_block_precision_examples():
    t = block_precision(4, 2)
    np.testing.assert_array_equal(t, [[1, 0.5, 0, 0], [0.5, 1, 0, 0], [0, 0, 1, 0.5], [0, 0, 0.5, 1]])
    np.testing.assert_array_equal(block_precision(3, 1), np.eye(3))
    with pytest.raises(DataError):
        block_precision(10, 3)


@pytest.mark.parametrize("q", [1, 2, 5, 10])
def test_block_precision_eigenvalues(q):
    # each block is 0.5 I + 0.5 J: eigenvalues 0.5 (q-1 times) and (q+1)/2
    ev = np.linalg.eigvalsh(block_precision(20, q))
    expected = np.sort(np.tile([0.5] * (q - 1) + [(q + 1) / 2], 20 // q))
    np.testing.assert_allclose(ev, expected, atol=1e-12)


def _ring_distance(a, b, p):
    d = abs(a - b)
    return min(d, p - d)


def test_ring_lattice_without_rewiring():
    p, e = 30, 3
    sw = smallworld_precision(p, e, seed=7, rewire_prob=0.0)
    assert len(sw.edges) == p * e == len(ring_lattice_edges(p, e))
    for a in range(p):
        for b in range(p):
            if a != b:
                assert (sw.theta[a, b] != 0) == (_ring_distance(a, b, p) <= e)


@settings(max_examples=30, deadline=None)
@given(st.integers(7, 60), st.integers(1, 3), st.integers(0, 2**31), st.floats(0, 1))
def test_smallworld_properties(p, e, seed, rewire):
    if p <= 2 * e:
        p = 2 * e + 1
    sw = smallworld_precision(p, e, seed=seed, rewire_prob=rewire)
    t = sw.theta
    assert np.max(np.abs(t - t.T)) <= 1e-14
    assert np.linalg.eigvalsh(t)[0] >= 0.1 - 1e-10
    assert sw.delta >= 0
    np.testing.assert_allclose(np.diag(t), 1.0 + sw.delta)
    # zero pattern matches the declared graph
    declared = np.zeros((p, p), dtype=bool)
    for a, b in sw.edges:
        declared[a, b] = declared[b, a] = True
    off = ~np.eye(p, dtype=bool)
    np.testing.assert_array_equal(t[off] != 0, declared[off])
    w = np.abs(t[declared])
    assert np.all((w >= 0.5) & (w <= 1.0))
    assert len(sw.edges) == p * e
    again = smallworld_precision(p, e, seed=seed, rewire_prob=rewire)
    assert again.theta.tobytes() == t.tobytes()


def test_smallworld_repair_recorded():
    shifts = [smallworld_precision(100, 5, seed=s).delta for s in range(5)]
    # with ten neighbours of weight at least 0.5 the raw matrix is indefinite
    assert all(d > 0 for d in shifts)


def test_smallworld_rejects_bad_radius():
    with pytest.raises(DataError):
        smallworld_precision(6, 3, seed=0)


def test_identity_precision_sample_covariance():
    x = sample_gaussian(np.eye(6), 100_000, seed=1)
    assert x.shape == (100_000, 6)
    assert np.max(np.abs(np.cov(x, rowvar=False) - np.eye(6))) <= 0.02


def test_block_precision_recovered_from_samples():
    theta = block_precision(5, 5)
    x = sample_gaussian(theta, 100_000, seed=2)
    est = np.linalg.inv(np.cov(x, rowvar=False))
    assert np.max(np.abs(est - theta)) <= 0.05


def test_sampling_is_deterministic_and_validates():
    t = block_precision(10, 5)
    assert sample_gaussian(t, 50, seed=3).tobytes() == sample_gaussian(t, 50, seed=3).tobytes()
    assert sample_gaussian(t, 50, seed=3).tobytes() != sample_gaussian(t, 50, seed=4).tobytes()
    with pytest.raises(DataError, match="positive definite"):
        sample_gaussian(-np.eye(3), 5, seed=0)


def test_column_means_shrink_at_root_n():
    n = 400
    x = sample_gaussian(block_precision(200, 5), n, seed=5)
    ok = np.abs(x.mean(axis=0)) <= 4 / np.sqrt(n)
    assert ok.mean() >= 0.99


def test_coefficient_settings():
    b = generate_coefficients("S1", 5, 200)
    assert list(np.flatnonzero(b)) == [0, 5, 10, 15, 20]
    np.testing.assert_array_equal(b[[0, 5, 10, 15, 20]], [0.2, -0.4, 0.6, -0.8, 1.0])
    b = generate_coefficients("S2", 5, 200)
    assert list(np.flatnonzero(b)) == list(range(25))
    np.testing.assert_array_equal(b[:5], 0.2)
    np.testing.assert_array_equal(b[20:25], 1.0)
    assert np.count_nonzero(generate_coefficients("S2", 10, 50)) == 50
    with pytest.raises(DataError):
        generate_coefficients("S1", 5, 24)


def test_regression_models():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 4))
    b = np.array([0.5, 0.0, -1.0, 0.2])
    eps = np.random.default_rng(9).standard_normal(30)
    lin = x @ b
    np.testing.assert_allclose(generate_response(x, b, "R1", 9), lin + eps)
    np.testing.assert_allclose(generate_response(x, b, "R2", 9), np.exp(lin) + eps)
    np.testing.assert_allclose(generate_response(x, b, "R3", 9), np.sin(lin) * np.exp(lin) + eps)
    np.testing.assert_allclose(generate_response(x, b, "R4", 9), np.exp(lin + eps))
    np.testing.assert_allclose(generate_response(x, b, "R4", 9), np.exp(generate_response(x, b, "R1", 9)))
    zero = np.zeros(4)
    np.testing.assert_allclose(generate_response(x, zero, "R1", 9), eps)
    np.testing.assert_allclose(generate_response(x, zero, "R4", 9), np.exp(eps))
    with pytest.raises(DataError):
        generate_response(x, np.zeros(3), "R1", 9)
    with pytest.raises(ValueError):
        generate_response(x, b, "R5", 9)
