import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hciz.exceptions import DomainError, StructureError
from hciz.linalg import (check_hermitian, check_unitary, hermitian_eigendecompose, inner,
                         sample_complex_sphere, sample_haar_unitary)


def random_hermitian(n, rng, scale=1.0):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (G + G.conj().T) / 2


def test_eigendecompose_diagonal_gives_identity():
    d = hermitian_eigendecompose(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(d.eigenvalues, [1.0, 0.0])
    np.testing.assert_allclose(d.eigenvectors, np.eye(2), atol=1e-15)


def test_eigendecompose_swap_matrix():
    d = hermitian_eigendecompose([[0, 1], [1, 0]])
    np.testing.assert_allclose(d.eigenvalues, [1.0, -1.0], atol=1e-15)
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(d.eigenvectors, [[s, s], [s, -s]], atol=1e-15)


def test_eigendecompose_conjugated_diagonal():
    U = sample_haar_unitary(3, 12345)
    H = U @ np.diag([3.0, 2.0, 1.0]) @ U.conj().T
    d = hermitian_eigendecompose(H)
    np.testing.assert_allclose(d.eigenvalues, [3.0, 2.0, 1.0], atol=1e-12)


def test_phase_convention_first_nonzero_component_real_positive():
    rng = np.random.default_rng(1)
    for _ in range(50):
        V = hermitian_eigendecompose(random_hermitian(5, rng)).eigenvectors
        for col in V.T:
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert abs(first.imag) < 1e-14 and first.real > 0


def test_eigendecompose_is_deterministic():
    H = random_hermitian(6, np.random.default_rng(2))
    a, b = hermitian_eigendecompose(H), hermitian_eigendecompose(H.copy())
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)


def test_round_trip_on_many_matrices():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        H = random_hermitian(n, rng, scale=rng.uniform(0.1, 10))
        d = hermitian_eigendecompose(H)
        assert np.all(np.diff(d.eigenvalues) <= 0)
        check_unitary(d.eigenvectors)
        err = np.max(np.abs(d.reconstruct() - H))
        assert err <= 1e-9 * (1 + np.max(np.abs(H)))


def test_non_hermitian_rejected():
    with pytest.raises(StructureError):
        hermitian_eigendecompose([[0, 1], [0, 0]])
    with pytest.raises(StructureError):
        check_hermitian(np.ones((2, 3)))


def test_check_hermitian_normalizes_diagonal():
    H = check_hermitian(np.array([[1 + 1e-14j, 2j], [-2j, 3]]))
    assert np.all(H.diagonal().imag == 0)
    np.testing.assert_array_equal(H, H.conj().T)


def test_check_unitary_rejects_non_unitary():
    with pytest.raises(StructureError):
        check_unitary(np.diag([1.0, 2.0]))


def test_haar_rejects_zero_dimension():
    with pytest.raises(DomainError):
        sample_haar_unitary(0, 0)


def test_haar_is_unitary_in_batch():
    U = sample_haar_unitary(5, 4, size=200)
    dev = np.abs(U @ U.conj().transpose(0, 2, 1) - np.eye(5)).max()
    assert dev <= 1e-10


def test_haar_n1_uniform_phase():
    z = sample_haar_unitary(1, 5, size=100_000)[:, 0, 0]
    sigma = np.sqrt(0.5 / z.size)
    assert abs(z.real.mean()) <= 3 * sigma and abs(z.imag.mean()) <= 3 * sigma
    np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)


def test_haar_n2_second_moment():
    U = sample_haar_unitary(2, 6, size=100_000)
    x = np.abs(U[:, 0, 0]) ** 2
    assert abs(x.mean() - 0.5) <= 3 * np.sqrt(1 / 12 / x.size)


def test_haar_left_invariance_moments():
    n, N = 3, 100_000
    V = sample_haar_unitary(n, 7)
    U = sample_haar_unitary(n, 8, size=N)
    a = np.abs(U) ** 2
    b = np.abs(V @ U) ** 2
    # E|U_ij|^2 = 1/n, Var = (n - 1) / (n^2 (n + 1))
    sigma = np.sqrt((n - 1) / (n**2 * (n + 1)) / N)
    assert np.max(np.abs(a.mean(axis=0) - 1 / n)) <= 4 * sigma
    assert np.max(np.abs(b.mean(axis=0) - 1 / n)) <= 4 * sigma


def test_sphere_zero_radius():
    np.testing.assert_array_equal(sample_complex_sphere(3, 0.0, 0), np.zeros(3))


def test_sphere_dimension_and_radius_errors():
    with pytest.raises(DomainError):
        sample_complex_sphere(0, 1.0, 0)
    with pytest.raises(DomainError):
        sample_complex_sphere(2, -1.0, 0)


def test_sphere_dim1_uniform_phase():
    rng = np.random.default_rng(9)
    z = np.array([sample_complex_sphere(1, 1.0, rng)[0] for _ in range(20_000)])
    assert abs(z.mean()) <= 3 * np.sqrt(1 / z.size)


def test_sphere_dim2_marginal_uniform():
    rng = np.random.default_rng(10)
    v = np.array([sample_complex_sphere(2, 2.0, rng) for _ in range(20_000)])
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 2.0, rtol=1e-12)
    assert stats.kstest(np.abs(v[:, 0]) ** 2 / 4, "uniform").pvalue > 0.01


def test_inner_product_is_trace():
    rng = np.random.default_rng(11)
    A, B = random_hermitian(4, rng), random_hermitian(4, rng)
    assert inner(A, B) == pytest.approx(np.trace(A @ B).real)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_spectrum_invariant_under_conjugation(n, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(n, rng)
    U = sample_haar_unitary(n, rng)
    before = hermitian_eigendecompose(H).eigenvalues
    after = hermitian_eigendecompose(U @ H @ U.conj().T).eigenvalues
    np.testing.assert_allclose(after, before, atol=1e-9)
