"""Generalized Lyapunov problems ``A P E^T + E P A^T + B B^T = 0``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg as spla

__all__ = [
    'LyapunovProblem',
    'gen_heat_1d',
    'gen_random_stable',
    'load_matrix_market',
    'save_matrix_market',
]


@dataclass(frozen=True)
class LyapunovProblem:
    """Real data ``(A, E, B)`` with ``A, E`` of order ``n`` and ``B`` n-by-m.

    ``E`` must be nonsingular. Stability of the pencil is not checked on
    construction (it needs an eigenvalue computation); see :meth:`is_stable`.
    """

    A: np.ndarray
    E: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        E = np.array(self.E, dtype=float, ndmin=2)
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, np.newaxis]
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f'A must be square, got shape {A.shape}')
        if E.shape != (n, n):
            raise ValueError(f'dimension mismatch: E has shape {E.shape}, expected {(n, n)}')
        if B.ndim != 2 or B.shape[0] != n:
            raise ValueError(f'dimension mismatch: B has shape {B.shape}, expected {n} rows')
        if B.shape[1] < 1 or B.shape[1] > n:
            raise ValueError(f'B must have between 1 and n={n} columns, got {B.shape[1]}')
        for name, M in (('A', A), ('E', E), ('B', B)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f'{name} has non-finite entries')
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', spla.LinAlgWarning)
            lu, _ = spla.lu_factor(E)
        if np.min(np.abs(np.diag(lu))) <= n * np.finfo(float).eps * np.linalg.norm(E, 1):
            raise ValueError('E is singular')
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'E', E)
        object.__setattr__(self, 'B', B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def eigenvalues(self):
        """Generalized eigenvalues of ``(A, E)`` (dense, desk scale only)."""
        return spla.eigvals(self.A, self.E)

    def is_stable(self):
        return bool(np.all(self.eigenvalues().real < 0))

    def residual(self, P):
        """Dense Lyapunov residual ``A P E^T + E P A^T + B B^T``."""
        return self.A @ P @ self.E.T + self.E @ P @ self.A.T + self.B @ self.B.T


def gen_heat_1d(n, m, seed=0):
    """1D heat equation on ``(0, 1)`` with Dirichlet boundaries.

    ``A = (n+1)^2 tridiag(1, -2, 1)``, ``E = I``, and the ``m`` columns of
    ``B`` are distinct canonical basis vectors chosen by ``seed``.
    """
    if n < 3:
        raise ValueError('heat1d needs n >= 3')
    if not 1 <= m <= n:
        raise ValueError(f'need 1 <= m <= n, got m={m}')
    h2 = (n + 1) ** 2
    A = h2 * (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1))
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(n, size=m, replace=False))
    B = np.zeros((n, m))
    B[rows, np.arange(m)] = 1.0
    return LyapunovProblem(A, np.eye(n), B)


def gen_random_stable(n, m, seed=0):
    """Random dense problem whose pencil is stable by construction.

    ``A = Q - (||Q||_2 + 1) I`` has a negative definite symmetric part and
    ``E = I + N / (2 ||N||_2)`` with symmetric ``N`` is positive definite, so
    every generalized eigenvalue lies in the open left half-plane.
    """
    if n < 1:
        raise ValueError('need n >= 1')
    if not 1 <= m <= n:
        raise ValueError(f'need 1 <= m <= n, got m={m}')
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((n, n)) / np.sqrt(n)
    A = Q - (np.linalg.norm(Q, 2) + 1.0) * np.eye(n)
    G = rng.standard_normal((n, n))
    N = G + G.T
    nrm = np.linalg.norm(N, 2)
    E = np.eye(n) + (N / (2 * nrm) if nrm > 0 else 0.0)
    B = rng.standard_normal((n, m))
    return LyapunovProblem(A, E, B)


def _read_mtx(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'no such Matrix Market file: {path}')
    try:
        _, _, _, _, field, _ = scipy.io.mminfo(str(path))
        M = scipy.io.mmread(str(path))
    except Exception as exc:
        raise ValueError(f'cannot parse Matrix Market file {path}: {exc}') from exc
    if field == 'complex':
        raise ValueError(f'{path}: complex entries are not supported')
    if field == 'pattern':
        raise ValueError(f'{path}: pattern matrices carry no values')
    if hasattr(M, 'toarray'):
        M = M.toarray()
    return np.asarray(M, dtype=float)


def load_matrix_market(path_A, path_E=None, path_B=None):
    """Load a problem from Matrix Market files; ``E`` defaults to identity."""
    if path_B is None:
        raise ValueError('B file is required')
    A = _read_mtx(path_A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f'dimension mismatch: A must be square, got {A.shape}')
    E = np.eye(n) if path_E is None else _read_mtx(path_E)
    B = _read_mtx(path_B)
    if E.shape != (n, n):
        raise ValueError(f'dimension mismatch: E is {E.shape}, A is {A.shape}')
    if B.shape[0] != n:
        raise ValueError(f'dimension mismatch: B has {B.shape[0]} rows, A has {n}')
    return LyapunovProblem(A, E, B)


def save_matrix_market(problem, directory):
    """Write ``A.mtx``, ``E.mtx`` and ``B.mtx`` (array format) into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in ('A', 'E', 'B'):
        path = directory / f'{name}.mtx'
        scipy.io.mmwrite(str(path), getattr(problem, name), field='real')
        paths[name] = path
    return paths
