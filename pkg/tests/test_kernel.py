import numpy as np
import numpy.testing as nptest
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import null_space

from stratbal.kernel import kernel_vector, least_squares_pinv

TOL = 1e-9


def _same_direction(u, v):
    nptest.assert_allclose(abs(u @ v), 1.0, atol=1e-12)


def _residual_ok(B, u):
    bound = TOL * np.abs(B).sum(axis=1).max() * np.abs(u).max()
    return np.abs(B.T @ u).max() <= bound


def test_kernel_column_of_ones():
    u = kernel_vector(np.array([[1.0], [1.0]]))
    _same_direction(u, np.array([1, -1]) / np.sqrt(2))


def test_kernel_three_by_two():
    B = np.array([[1.0, 0], [0, 1], [1, 1]])
    u = kernel_vector(B)
    _same_direction(u, np.array([1, 1, -1]) / np.sqrt(3))


def test_kernel_full_rank_is_none():
    assert kernel_vector(np.array([[1.0]])) is None
    assert kernel_vector(np.eye(4)) is None


def test_kernel_no_columns():
    # no constraints: any direction is admissible
    u = kernel_vector(np.zeros((3, 0)))
    assert np.linalg.norm(u) == pytest.approx(1.0)


def test_kernel_rank_deficient_square():
    B = np.array([[1.0, 2, 3], [2, 4, 6], [0, 1, 1]])
    u = kernel_vector(B)
    assert u is not None and _residual_ok(B, u)


def test_kernel_rejects_nonfinite():
    with pytest.raises(ValueError):
        kernel_vector(np.array([[np.nan], [1.0]]))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30).flatmap(lambda r: arrays(np.float64, (r, r - 1), elements=st.floats(-1, 1))))
def test_kernel_always_found_for_tall_matrices(B):
    u = kernel_vector(B)
    assert u is not None
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert _residual_ok(B, u)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_kernel_lies_in_svd_null_space(r, c, seed):
    # low-rank B so the kernel is non-trivial even when r <= c
    rng = np.random.default_rng(seed)
    k = max(1, min(r, c) - 1)
    B = rng.standard_normal((r, k)) @ rng.standard_normal((k, c))
    u = kernel_vector(B)
    basis = null_space(B.T, rcond=1e-10)
    if basis.shape[1] == 0:
        assert u is None
    else:
        assert u is not None
        # u has no component outside the oracle basis
        nptest.assert_allclose(basis @ (basis.T @ u), u, atol=1e-8)


def test_pinv_identity():
    nptest.assert_allclose(least_squares_pinv(np.eye(2), [3, 4]), [3, 4])


def test_pinv_rank_one_minimum_norm():
    nptest.assert_allclose(least_squares_pinv([[1.0, 1], [1, 1]], [2, 2]), [1, 1])


def test_pinv_zero():
    nptest.assert_allclose(least_squares_pinv(np.zeros((2, 2)), np.zeros(2)), [0, 0])


def test_pinv_rejects_nonfinite():
    with pytest.raises(ValueError):
        least_squares_pinv([[np.inf]], [1.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_pinv_recovers_consistent_system(m, k, seed):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((k, m))
    G = Z.T @ Z  # PSD, singular whenever k < m
    alpha0 = rng.standard_normal(m)
    alpha = least_squares_pinv(G, G @ alpha0, TOL)
    bound = 10 * TOL * np.linalg.norm(G, 2) * np.linalg.norm(alpha0)
    assert np.linalg.norm(G @ alpha - G @ alpha0) <= bound
