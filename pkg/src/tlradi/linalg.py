"""Dense linear-algebra kernels shared by the ADI solvers and their oracles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

__all__ = [
    'EigenDecomposition',
    'shifted_solve',
    'small_eig',
    'sort_eigenvalues',
    'sym_max_eig',
    'cauchy_lyap_solve',
    'dense_lyap_oracle',
    'KRON_MAX_ORDER',
    'ORACLE_MAX_ORDER',
]

# Kronecker system has n^2 unknowns; beyond this order Bartels-Stewart is used.
KRON_MAX_ORDER = 50
ORACLE_MAX_ORDER = 300


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ``values``, right eigenvectors ``vectors`` and ``U^{-1} B``."""

    values: np.ndarray
    vectors: np.ndarray
    transformed: np.ndarray


def _as_shift(s):
    s = complex(s)
    return s.real if s.imag == 0 else s


def shifted_solve(A, E, s, rhs):
    """Solve ``(A - s E) Y = rhs`` by LU with partial pivoting.

    Real shifts keep the computation in real arithmetic.

    Raises
    ------
    numpy.linalg.LinAlgError
        If a pivot vanishes to working precision, i.e. ``s`` is (numerically)
        a generalized eigenvalue of ``(A, E)``.
    """
    A = np.asarray(A)
    E = np.asarray(E)
    rhs = np.asarray(rhs)
    s = _as_shift(s)
    n = A.shape[0]
    if A.shape != (n, n) or E.shape != (n, n):
        raise ValueError(f'A and E must be square of equal size, got {A.shape} and {E.shape}')
    if rhs.shape[0] != n:
        raise ValueError(f'right-hand side has {rhs.shape[0]} rows, expected {n}')
    M = A - s * E
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', spla.LinAlgWarning)
        lu, piv = spla.lu_factor(M, check_finite=True)
    scale = np.linalg.norm(A, 1) + abs(s) * np.linalg.norm(E, 1)
    if np.min(np.abs(np.diag(lu))) <= n * np.finfo(float).eps * max(scale, np.finfo(float).tiny):
        raise np.linalg.LinAlgError('shift coincides with generalized eigenvalue')
    return spla.lu_solve((lu, piv), rhs, check_finite=False)


def sort_eigenvalues(values):
    """Return the permutation sorting ``values`` deterministically.

    Order is real part ascending, then modulus of the imaginary part, with the
    positive-imaginary member of a conjugate pair first.
    """
    values = np.asarray(values)
    return np.lexsort((-values.imag, np.abs(values.imag), values.real))


def small_eig(M, B):
    """Eigendecomposition ``M = U D U^{-1}`` of a small matrix plus ``U^{-1} B``.

    Eigenvalues are ordered by :func:`sort_eigenvalues`.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the eigenvector matrix is numerically singular (condition > 1e12).
    """
    M = np.atleast_2d(np.asarray(M))
    B = np.asarray(B)
    if B.ndim == 1:
        B = B[:, np.newaxis]
    if M.shape[0] != M.shape[1]:
        raise ValueError(f'matrix must be square, got {M.shape}')
    if not np.all(np.isfinite(M)):
        raise ValueError('matrix has non-finite entries')
    values, U = spla.eig(M)
    order = sort_eigenvalues(values)
    values, U = values[order], U[:, order]
    if np.linalg.cond(U) > 1e12:
        raise np.linalg.LinAlgError('non-diagonalizable projected matrix')
    if np.isrealobj(M) and np.all(values.imag == 0):
        values, U = values.real, U.real
    return EigenDecomposition(values, U, np.linalg.solve(U, B))


def sym_max_eig(G):
    """Largest eigenvalue of the Hermitian part of a PSD matrix, clipped at 0."""
    G = np.atleast_2d(np.asarray(G))
    if not np.all(np.isfinite(G)):
        raise ValueError('matrix has non-finite entries')
    if G.size == 0:
        return 0.0
    H = (G + G.conj().T) / 2
    return max(float(spla.eigvalsh(H)[-1]), 0.0)


def cauchy_lyap_solve(shifts, L):
    """Solve the reduced equation ``S^H X + X S = L^H L`` for diagonal ``S``.

    The solution is the Cauchy-like matrix
    ``X[i, j] = (L^H L)[i, j] / (conj(s_i) + s_j)``, Hermitian positive
    definite whenever all shifts lie in the open right half-plane and ``L``
    has full column rank.
    """
    shifts = np.asarray(shifts, dtype=complex).ravel()
    L = np.asarray(L)
    if L.ndim == 1:
        L = L[np.newaxis, :]
    k = shifts.size
    if L.shape[1] != k:
        raise ValueError(f'L has {L.shape[1]} columns for {k} shifts')
    if np.any(shifts.real <= 0):
        raise ValueError('shifts must have positive real part')
    if k > 1:
        gap = np.abs(shifts[:, None] - shifts[None, :]) + np.diag(np.full(k, np.inf))
        if np.min(gap) <= 1e-14 * np.max(np.abs(shifts)):
            raise ValueError('diagonal closed form requires distinct shifts')
    X = (L.conj().T @ L) / (shifts.conj()[:, None] + shifts[None, :])
    if np.all(shifts.imag == 0) and np.isrealobj(L):
        X = X.real
    return X


def dense_lyap_oracle(problem):
    """Dense solution of ``A P E^T + E P A^T + B B^T = 0``.

    Small orders (``n <= KRON_MAX_ORDER``) solve the Kronecker system
    ``(E kron A + A kron E) vec(P) = -vec(B B^T)`` directly; larger orders up
    to ``ORACLE_MAX_ORDER`` use a Bartels-Stewart solve of the equivalent
    standard equation for ``E^{-1} A``.
    """
    A, E, B = problem.A, problem.E, problem.B
    n = A.shape[0]
    if n > ORACLE_MAX_ORDER:
        raise ValueError(f'dense oracle limited to n <= {ORACLE_MAX_ORDER}, got n={n}')
    Q = B @ B.T
    if not np.any(Q):
        return np.zeros((n, n))
    if n <= KRON_MAX_ORDER:
        K = np.kron(E, A) + np.kron(A, E)
        with warnings.catch_warnings(), np.errstate(divide='raise', invalid='raise'):
            warnings.simplefilter('error', spla.LinAlgWarning)
            try:
                p = spla.solve(K, -Q.ravel(order='F'))
            except (np.linalg.LinAlgError, spla.LinAlgWarning, FloatingPointError) as exc:
                raise np.linalg.LinAlgError(
                    'singular Lyapunov operator: pencil has eigenvalues symmetric '
                    'about the imaginary axis') from exc
        P = p.reshape((n, n), order='F')
    else:
        F = np.linalg.solve(E, A)
        lam = spla.eigvals(F)
        sums = np.abs(lam[:, None] + lam[None, :])
        if np.min(sums) <= 1e-10 * np.max(np.abs(lam)):
            raise np.linalg.LinAlgError(
                'singular Lyapunov operator: pencil has eigenvalues symmetric '
                'about the imaginary axis')
        G = np.linalg.solve(E, B)
        P = spla.solve_continuous_lyapunov(F, -G @ G.T)
    return (P + P.T) / 2
