import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hciz.exceptions import DomainError, InconsistentTriangleError
from hciz.fiber import (ReducedSpectrum, charpoly_residual, extend_submatrix, reduced_spectrum,
                        sample_fiber, sample_fiber_batch, sphere_radii)
from hciz.linalg import sample_haar_unitary
from hciz.polytope import RayleighTriangle, build_polytope, rayleigh_map, uniform_gt_sample


class TestReducedSpectrum:
    def test_all_distinct(self):
        rs = reduced_spectrum([1, 0], [0.5])
        assert rs.deltas.tolist() == [0.5] and rs.mults.tolist() == [1] and rs.mu.tolist() == [1, 0]

    def test_repeated_lower_value(self):
        rs = reduced_spectrum([1, 0.5, 0], [0.5, 0.5])
        assert rs.deltas.tolist() == [0.5] and rs.mults.tolist() == [2] and rs.mu.tolist() == [1, 0]

    def test_no_removal(self):
        rs = reduced_spectrum([1, 1, 0], [1, 0.5])
        assert rs.deltas.tolist() == [1, 0.5] and rs.mults.tolist() == [1, 1]
        assert rs.mu.tolist() == [1, 1, 0]

    def test_offsets(self):
        rs = reduced_spectrum([3, 2, 2, 1, 1, 0], [2, 2, 1, 1, 1])
        assert rs.mults.tolist() == [2, 3] and rs.offsets.tolist() == [0, 2]
        assert rs.mu.size == 3

    def test_missing_copy(self):
        with pytest.raises(InconsistentTriangleError):
            reduced_spectrum([1, 0.7, 0], [0.5, 0.5])

    def test_not_interlacing(self):
        with pytest.raises(InconsistentTriangleError):
            reduced_spectrum([1, 0], [2])

    def test_row_lengths(self):
        with pytest.raises(DomainError):
            reduced_spectrum([1, 0], [1, 0])


class TestRadii:
    def test_rank_one(self):
        np.testing.assert_allclose(sphere_radii(reduced_spectrum([1, 0], [0.5])), [0.5])

    def test_saturated(self):
        np.testing.assert_allclose(sphere_radii(reduced_spectrum([1, 1, 0], [1, 0.5])), [0, 0.5], atol=1e-15)

    def test_clamps_rounding_noise(self):
        rs = ReducedSpectrum(np.array([0.5]), np.array([1]), np.array([0.5 - 1e-15, 0.0]))
        assert sphere_radii(rs)[0] == 0.0

    def test_rejects_corrupt_data(self):
        rs = ReducedSpectrum(np.array([0.5]), np.array([1]), np.array([0.4, 0.0]))
        with pytest.raises(InconsistentTriangleError):
            sphere_radii(rs)


class TestExtend:
    def test_two_by_two(self):
        S, step = extend_submatrix([[0.5]], [1, 0], [0.5], 0, return_step=True)
        assert step.c == 0.5 and S[1, 1] == 0.5
        assert abs(S[0, 1]) == pytest.approx(0.5)
        np.testing.assert_allclose(np.linalg.eigvalsh(S), [0, 1], atol=1e-14)

    def test_trace_differencing(self):
        S, step = extend_submatrix(np.diag([1.0, 0.0]), [1, 0.5, 0], [1, 0], 1, return_step=True)
        assert step.c == 0.5
        np.testing.assert_allclose(np.linalg.eigvalsh(S)[::-1], [1, 0.5, 0], atol=1e-14)

    def test_repeated_delta_sphere(self):
        rng = np.random.default_rng(2)
        norms = []
        for _ in range(200):
            S, step = extend_submatrix(0.5 * np.eye(2), [1, 0.5, 0], [0.5, 0.5], rng, return_step=True)
            norms.append(np.linalg.norm(step.v))
            np.testing.assert_allclose(np.linalg.eigvalsh(S)[::-1], [1, 0.5, 0], atol=1e-12)
        np.testing.assert_allclose(norms, 0.5, rtol=1e-12)

    def test_block_norms_match_radii(self):
        rng = np.random.default_rng(3)
        row_km1 = np.array([2.0, 2.0, 1.0, 0.5, 0.5, 0.5])
        row_k = np.array([2.5, 2.0, 1.5, 0.7, 0.5, 0.5, 0.0])
        S_prev = np.diag(row_km1).astype(complex)
        U = sample_haar_unitary(6, rng)
        S_prev = U @ S_prev @ U.conj().T
        S, step = extend_submatrix(S_prev, row_k, row_km1, rng, return_step=True)
        for o, m, r in zip(step.reduced.offsets, step.reduced.mults, step.radii):
            assert np.sum(np.abs(step.v[o:o + m]) ** 2) == pytest.approx(r**2, rel=1e-10)
        np.testing.assert_allclose(np.linalg.eigvalsh(S)[::-1], row_k, atol=1e-10)

    def test_spectrum_precondition(self):
        with pytest.raises(DomainError):
            extend_submatrix([[0.3]], [1, 0], [0.5], 0)


class TestSampleFiber:
    def test_n1(self):
        np.testing.assert_array_equal(sample_fiber(RayleighTriangle(1, [2.5]), 0), [[2.5]])

    def test_rank_one_phase_uniform(self):
        rng = np.random.default_rng(4)
        P = RayleighTriangle.from_rows([[0.5], [1, 0]])
        X = np.array([sample_fiber(P, rng) for _ in range(10_000)])
        np.testing.assert_allclose(X[:, 0, 0], 0.5)
        np.testing.assert_allclose(X[:, 1, 1], 0.5, atol=1e-15)
        np.testing.assert_allclose(np.abs(X[:, 0, 1]), 0.5, atol=1e-15)
        theta = np.angle(X[:, 0, 1]) % (2 * np.pi)
        assert stats.kstest(theta, stats.uniform(0, 2 * np.pi).cdf).pvalue > 0.01

    def test_batch_phases_uniform(self):
        X = sample_fiber_batch(np.tile([0.5, 1.0, 0.0], (10_000, 1)), 5)
        theta = np.angle(X[:, 0, 1]) % (2 * np.pi)
        assert stats.kstest(theta, stats.uniform(0, 2 * np.pi).cdf).pvalue > 0.01

    def test_rejects_invalid_triangle(self):
        with pytest.raises(InconsistentTriangleError):
            sample_fiber(RayleighTriangle.from_rows([[2.0], [1, 0]]), 0)

    @pytest.mark.parametrize("lam", [(1, 0), (2, 1, 0), (1, 1, 0), (3, 1, 1, 0), (2, 2, 1, 1, 0, 0)])
    def test_round_trip(self, lam):
        rng = np.random.default_rng(6)
        poly = build_polytope(lam)
        flat = uniform_gt_sample(poly, rng, size=300)
        X = sample_fiber_batch(flat, rng)
        for k in range(0, 300, 10):
            np.testing.assert_allclose(rayleigh_map(X[k]).values, flat[k], atol=1e-8)
            single = sample_fiber(RayleighTriangle(len(lam), flat[k]), rng)
            np.testing.assert_allclose(rayleigh_map(single).values, flat[k], atol=1e-8)

    def test_composition_matches_haar(self):
        rng = np.random.default_rng(7)
        poly = build_polytope([1, 0])
        X = sample_fiber_batch(uniform_gt_sample(poly, rng, size=20_000), rng)
        U = sample_haar_unitary(2, rng, size=20_000)
        direct = np.abs(U[:, 0, 0]) ** 2
        assert stats.ks_2samp(X[:, 0, 0].real, direct).pvalue > 0.01

    def test_charpoly_identity(self):
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(300):
            n = int(rng.integers(2, 6))
            lam = np.sort(rng.integers(-2, 3, size=n).astype(float))[::-1]
            rows = uniform_gt_sample(build_polytope(lam), rng).rows
            S = np.array([[rows[0][0]]], dtype=complex)
            for k in range(2, n + 1):
                S_new = extend_submatrix(S, rows[k - 1], rows[k - 2], rng)
                m = reduced_spectrum(rows[k - 1], rows[k - 2]).deltas.size
                t = rng.normal(size=m + 2) * 3
                worst = max(worst, np.max(charpoly_residual(S, S_new, rows[k - 1], rows[k - 2], t)))
                S = S_new
        assert worst <= 1e-8


@settings(max_examples=40, deadline=None)
@given(lam=st.lists(st.integers(-3, 3), min_size=1, max_size=6), seed=st.integers(0, 2**31))
def test_spectrum_exact(lam, seed):
    lam = np.sort(np.array(lam, dtype=float))[::-1]
    P = uniform_gt_sample(build_polytope(lam), seed)
    X = sample_fiber(P, seed)
    np.testing.assert_allclose(X, X.conj().T, atol=0)
    err = np.max(np.abs(np.linalg.eigvalsh(X)[::-1] - lam))
    assert err <= 1e-8 * max(1.0, np.max(np.abs(lam)))
