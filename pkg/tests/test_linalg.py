import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from tlradi.linalg import (
    cauchy_lyap_solve,
    dense_lyap_oracle,
    shifted_solve,
    small_eig,
    sort_eigenvalues,
    sym_max_eig,
)
from tlradi.problem import LyapunovProblem, gen_random_stable


class TestShiftedSolve:
    def test_scalar(self):
        assert_allclose(shifted_solve([[-1.0]], [[1.0]], 1, [1.0]), [-0.5])

    def test_diagonal_real(self):
        Y = shifted_solve(np.diag([-1.0, -2.0]), np.eye(2), 1, np.array([[1.0], [0.0]]))
        assert_allclose(Y, [[-0.5], [0.0]])
        assert np.isrealobj(Y)

    def test_diagonal_complex(self):
        s = 1 + 2j
        Y = shifted_solve(np.diag([-1.0, -2.0]), np.eye(2), s, np.ones(2))
        assert_allclose(Y, [1 / (-2 - 2j), 1 / (-3 - 2j)], rtol=1e-15)

    def test_shift_on_eigenvalue(self):
        with pytest.raises(np.linalg.LinAlgError, match='shift coincides with generalized eigenvalue'):
            shifted_solve(np.diag([-1.0, -2.0]), np.eye(2), -1.0, np.ones(2))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 60),
           re=st.floats(0.1, 10), im=st.floats(-10, 10))
    def test_round_trip(self, seed, n, re, im):
        P = gen_random_stable(n, 1, seed)
        rhs = np.random.default_rng(seed).standard_normal((n, 3))
        s = complex(re, im)
        Y = shifted_solve(P.A, P.E, s, rhs)
        R = (P.A - s * P.E) @ Y - rhs
        assert np.linalg.norm(R) <= 1e-10 * np.linalg.norm(rhs)


class TestSmallEig:
    def test_scalar(self):
        dec = small_eig(np.array([[-3.0]]), np.array([[1.0]]))
        assert_allclose(dec.values, [-3])
        assert_allclose(dec.transformed, [[1]])

    def test_complex_pair_order(self):
        dec = small_eig(np.array([[0.0, 1.0], [-2.0, -2.0]]), np.array([[1.0], [0.0]]))
        assert_allclose(dec.values, [-1 + 1j, -1 - 1j], atol=1e-14)
        assert dec.values[0].imag > 0
        assert dec.values[1] == np.conj(dec.values[0])

    def test_diagonal_sorted_and_permuted(self):
        dec = small_eig(np.diag([-1.0, -2.0]), np.eye(2))
        assert_allclose(dec.values, [-2, -1])
        # B~ = U^{-1} I, so row k of B~ lies along the k-th sorted eigenvector
        assert abs(dec.transformed[0, 1]) > 0 and abs(dec.transformed[0, 0]) < 1e-15
        assert abs(dec.transformed[1, 0]) > 0 and abs(dec.transformed[1, 1]) < 1e-15

    def test_defective(self):
        with pytest.raises(np.linalg.LinAlgError, match='non-diagonalizable'):
            small_eig(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2))

    @pytest.mark.parametrize('seed', range(8))
    def test_reconstruction(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((4, 4))
        dec = small_eig(M, np.eye(4))
        R = M @ dec.vectors - dec.vectors * dec.values
        assert np.linalg.norm(R) <= 1e-10 * np.linalg.norm(M)
        recon = dec.vectors @ np.diag(dec.values) @ np.linalg.inv(dec.vectors)
        assert np.linalg.norm(M - recon) <= 1e-10 * np.linalg.norm(M)

    def test_sort_key(self):
        vals = np.array([2.0, -1 - 1j, -1 + 1j, -1 + 0j, -3 + 0.5j, -3 - 0.5j])
        out = vals[sort_eigenvalues(vals)]
        assert_allclose(out, [-3 + 0.5j, -3 - 0.5j, -1, -1 + 1j, -1 - 1j, 2])


class TestSymMaxEig:
    @pytest.mark.parametrize('G, expected', [
        ([[0, 0], [0, 1]], 1.0),
        (np.zeros((3, 3)), 0.0),
        ([[2, 1], [1, 2]], 3.0),
    ])
    def test_examples(self, G, expected):
        assert sym_max_eig(np.array(G, dtype=float)) == pytest.approx(expected, abs=1e-15)

    def test_asymmetric_rounding_is_symmetrized(self):
        G = np.array([[2.0, 1.0 + 1e-15], [1.0, 2.0]])
        assert sym_max_eig(G) == pytest.approx(3.0, rel=1e-14)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            sym_max_eig(np.array([[np.nan]]))


class TestCauchy:
    def test_single(self):
        assert_allclose(cauchy_lyap_solve([1.0], [[np.sqrt(2)]]), [[1.0]])

    def test_two_real(self):
        X = cauchy_lyap_solve([1.0, 2.0], [[np.sqrt(2), 2.0]])
        c = 2 * np.sqrt(2) / 3
        assert_allclose(X, [[1, c], [c, 1]], rtol=1e-15)

    def test_conjugate_pair(self):
        s = np.array([1 + 1j, 1 - 1j])
        X = cauchy_lyap_solve(s, np.sqrt(2) * np.ones((1, 2)))
        a = (1 + 1j) / 2
        assert_allclose(X, [[1, a], [np.conj(a), 1]], atol=1e-15)

    def test_repeated(self):
        with pytest.raises(ValueError, match='distinct shifts'):
            cauchy_lyap_solve([1.0, 1.0], np.ones((1, 2)))

    def test_left_half_plane(self):
        with pytest.raises(ValueError):
            cauchy_lyap_solve([-1.0], [[1.0]])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), k=st.integers(1, 8), m=st.integers(1, 4))
    def test_residual_and_definiteness(self, seed, k, m):
        rng = np.random.default_rng(seed)
        s = rng.uniform(0.1, 5, k) + 1j * rng.uniform(-5, 5, k)
        L = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        X = cauchy_lyap_solve(s, L)
        S = np.diag(s)
        G = L.conj().T @ L
        assert np.linalg.norm(S.conj().T @ X + X @ S - G) <= 1e-12 * np.linalg.norm(G)
        assert_allclose(X, X.conj().T, atol=1e-14 * np.linalg.norm(X))
        assert np.min(np.linalg.eigvalsh((X + X.conj().T) / 2)) > -1e-12 * np.linalg.norm(X)


class TestDenseOracle:
    def test_scalar(self, scalar_problem):
        assert_allclose(dense_lyap_oracle(scalar_problem), [[0.5]], atol=1e-15)

    def test_hilbert_like(self):
        P = LyapunovProblem(np.diag([-1.0, -2.0]), np.eye(2), [[1.0], [1.0]])
        assert_allclose(dense_lyap_oracle(P), [[1 / 2, 1 / 3], [1 / 3, 1 / 4]], atol=1e-15)

    def test_zero_rhs(self):
        P = LyapunovProblem(np.diag([-1.0, -2.0]), np.eye(2), np.zeros((2, 1)))
        assert_allclose(dense_lyap_oracle(P), np.zeros((2, 2)))

    @pytest.mark.parametrize('n', [5, 50, 51, 120])
    def test_symmetric_psd_residual(self, n):
        P = gen_random_stable(n, 2, n)
        X = dense_lyap_oracle(P)
        assert_allclose(X, X.T, atol=0)
        assert np.min(np.linalg.eigvalsh(X)) >= -1e-10 * np.linalg.norm(X, 2)
        BB = P.B @ P.B.T
        assert np.linalg.norm(P.residual(X)) <= 1e-8 * np.linalg.norm(BB)

    def test_too_large(self):
        P = LyapunovProblem(-np.eye(301), np.eye(301), np.ones((301, 1)))
        with pytest.raises(ValueError):
            dense_lyap_oracle(P)

    @pytest.mark.parametrize('n', [2, 60])
    def test_singular_operator(self, n):
        A = np.diag(np.r_[1.0, -1.0, -np.arange(2, n)])[:n, :n]
        P = LyapunovProblem(A, np.eye(n), np.ones((n, 1)))
        with pytest.raises(np.linalg.LinAlgError):
            dense_lyap_oracle(P)
