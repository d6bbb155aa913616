import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from clustree.numerics import (
    CholeskyError,
    MatrixNormalParams,
    RandomSource,
    cholesky,
    is_spd,
    sample_inverse_wishart,
    sample_matrix_normal,
    sample_wishart,
)


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_2x2():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = cholesky(A)
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-15)
    np.testing.assert_allclose(L @ L.T, A, atol=1e-12)


def test_cholesky_reports_failing_pivot():
    with pytest.raises(CholeskyError) as err:
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    assert err.value.pivot == 1
    assert "pivot 1" in str(err.value)


def test_cholesky_symmetrizes_tiny_asymmetry_and_rejects_large():
    A = np.array([[2.0, 1.0], [1.0 + 1e-12, 2.0]])
    L = cholesky(A)
    np.testing.assert_allclose(L @ L.T, 0.5 * (A + A.T), atol=1e-14)
    with pytest.raises(ValueError):
        cholesky([[2.0, 1.0], [1.1, 2.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_cholesky_reconstructs_random_spd(k, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(k, k))
    A = B @ B.T + k * np.eye(k)
    L = cholesky(A)
    assert np.allclose(np.triu(L, 1), 0)
    assert np.max(np.abs(L @ L.T - A)) <= 1e-8 * np.max(np.abs(A))


def test_child_sources_are_pure_functions_of_seed_and_index():
    a, b = RandomSource(5), RandomSource(5)
    assert a.child(3).seed == b.child(3).seed
    assert a.child(3).seed != a.child(4).seed
    a.gen.normal(size=10)  # consuming the parent does not change children
    assert a.child(3).seed == b.child(3).seed


def test_seed_range():
    with pytest.raises(ValueError):
        RandomSource(-1)
    RandomSource(2**64 - 1)


def test_matrix_normal_iid_case():
    params = MatrixNormalParams(np.zeros((2, 3)), np.eye(2), np.eye(3))
    draws = sample_matrix_normal(params, RandomSource(0), size=100_000)
    assert draws.shape == (100_000, 2, 3)
    assert np.max(np.abs(draws.mean(axis=0))) < 0.02
    assert stats.kstest(draws.ravel()[:100_000], "norm").statistic < 0.01


def test_matrix_normal_row_variances():
    params = MatrixNormalParams(np.zeros((2, 2)), np.diag([4.0, 1.0]), np.eye(2))
    draws = sample_matrix_normal(params, RandomSource(1), size=100_000)
    var = draws.var(axis=(0, 2))
    np.testing.assert_allclose(var, [4.0, 1.0], rtol=0.05)


def test_matrix_normal_kronecker_covariance():
    U = np.array([[2.0, 0.6], [0.6, 1.0]])
    V = np.array([[1.0, -0.4, 0.0], [-0.4, 1.5, 0.3], [0.0, 0.3, 0.8]])
    M = np.arange(6.0).reshape(2, 3)
    draws = sample_matrix_normal(MatrixNormalParams(M, U, V), RandomSource(2), size=200_000)
    # column-stacked vec(X) has covariance V kron U
    vec = draws.transpose(0, 2, 1).reshape(len(draws), -1)
    np.testing.assert_allclose(np.cov(vec.T), np.kron(V, U), atol=0.03)
    np.testing.assert_allclose(draws.mean(axis=0), M, atol=0.02)


def test_matrix_normal_rejects_degenerate_covariance():
    params = MatrixNormalParams(np.ones((2, 2)), np.zeros((2, 2)), np.eye(2))
    with pytest.raises(CholeskyError):
        sample_matrix_normal(params, RandomSource(0))


def test_matrix_normal_shape_check():
    with pytest.raises(ValueError):
        MatrixNormalParams(np.zeros((2, 3)), np.eye(3), np.eye(3))


def test_wishart_mean():
    W = sample_wishart(np.eye(5), 7, RandomSource(3), size=20_000)
    assert np.max(np.abs(W.mean(axis=0) - 7 * np.eye(5))) < 0.35


def test_wishart_mean_nonidentity_scale():
    S = np.array([[1.0, 0.5], [0.5, 2.0]])
    W = sample_wishart(S, 4.5, RandomSource(4), size=40_000)
    np.testing.assert_allclose(W.mean(axis=0), 4.5 * S, atol=0.1)


def test_inverse_wishart_scalar_positive():
    draws = sample_inverse_wishart(np.eye(1), 3, RandomSource(5), size=2000)
    assert np.all(draws > 0)


def test_inverse_wishart_inverts_wishart_of_inverse_scale():
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    a = sample_inverse_wishart(S, 5, RandomSource(6))
    b = sample_wishart(np.linalg.inv(S), 5, RandomSource(6))
    np.testing.assert_allclose(a, np.linalg.inv(b), rtol=1e-8)


def test_inverse_wishart_draws_are_symmetric_spd():
    for K in (2, 10, 40):
        draws = sample_inverse_wishart(np.eye(K), K + 1, RandomSource(K), size=50)
        for A in draws:
            assert np.max(np.abs(A - A.T)) <= 1e-12
            assert is_spd(A)


def test_inverse_wishart_dof_check():
    with pytest.raises(ValueError):
        sample_inverse_wishart(np.eye(3), 2.0, RandomSource(0))


def test_determinism():
    params = MatrixNormalParams(np.zeros((3, 2)), np.eye(3), np.eye(2))
    a = sample_matrix_normal(params, RandomSource(11))
    b = sample_matrix_normal(params, RandomSource(11))
    assert a.tobytes() == b.tobytes()
    c = sample_inverse_wishart(np.eye(4), 5, RandomSource(12))
    d = sample_inverse_wishart(np.eye(4), 5, RandomSource(12))
    assert c.tobytes() == d.tobytes()
