"""Shift and tangential-direction sources for T-LR-ADI.

Includes the initial-shift recipe (mirrored smallest-magnitude eigenvalue),
the IRKA-style adaptive update, and static lists read from text files.
"""

from __future__ import annotations

import logging
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as spla

from tlradi.linalg import shifted_solve, small_eig, sort_eigenvalues
from tlradi.state import ShiftPair
from tlradi.tangential import ShiftSourceExhausted

__all__ = [
    'ShiftFallbackWarning',
    'RitzData',
    'IrkaResult',
    'ShiftSource',
    'StaticSource',
    'AdaptiveSource',
    'initial_shift',
    'smallest_eigenvalues',
    'project_pair',
    'tangential_krylov_basis',
    'irka_update',
    'static_source',
    'load_shift_file',
    'load_shift_values',
]

logger = logging.getLogger(__name__)

INVERSE_ITER_TOL = 1e-10
INVERSE_ITER_MAXITER = 500


class ShiftFallbackWarning(RuntimeWarning):
    """Inverse iteration stagnated and a heuristic initial shift was used."""


@dataclass(frozen=True)
class RitzData:
    """Projection ``Aj = (V^H E V)^{-1} V^H A V``, ``Bj = (V^H E V)^{-1} V^H B_perp``
    with eigenvalues ``D`` and ``Btilde = U^{-1} Bj``."""

    Aj: np.ndarray
    Bj: np.ndarray
    D: np.ndarray
    Btilde: np.ndarray
    V: np.ndarray


@dataclass
class IrkaResult:
    """Output of :func:`irka_update`.

    ``solutions[k]`` solves ``(A - s E) x = B_perp b`` for ``pairs[k]`` with
    the current ``B_perp``, or is ``None`` if that solve was not available.
    """

    pairs: list
    solutions: list
    V: np.ndarray
    ritz: RitzData
    iterations: int
    converged: bool


def _direction(row):
    """Unit direction ``conj(row)`` with its largest-modulus entry real positive.

    Returns the direction and the scalar ``c`` with ``direction = c * conj(row)``.
    """
    raw = np.conj(np.asarray(row)).ravel()
    nrm = np.linalg.norm(raw)
    if nrm == 0 or not np.isfinite(nrm):
        raise np.linalg.LinAlgError('tangential direction vanished')
    k = int(np.argmax(np.abs(raw)))
    c = abs(raw[k]) / raw[k] / nrm
    return raw * c, c


def _modulus_order(theta):
    # ties broken toward the positive-imaginary member of a pair
    return np.lexsort((-theta.imag, theta.real, np.abs(theta)))


def _pencil_smallest(problem, k):
    """The ``k`` smallest-magnitude eigenpairs of ``(A, E)``, closed under conjugation.

    Inverse subspace iteration ``V <- orth(A^{-1} E V)`` on ``2k + 4`` vectors with
    Rayleigh-Ritz on the pencil; a two-dimensional subspace already captures a
    complex pair. Small pencils are handled densely. Returns the sorted values,
    their Ritz vectors and a convergence flag.
    """
    A, E, n = problem.A, problem.E, problem.n
    p = min(n, 2 * k + 4)
    if p >= n or n <= 4:
        theta, W = spla.eig(A, E)
        converged = True
    else:
        lu = spla.lu_factor(A)
        rng = np.random.default_rng(0)
        V0 = np.hstack([np.linalg.solve(E, problem.B), rng.standard_normal((n, p))])[:, :p]
        V, _ = np.linalg.qr(V0)
        prev = None
        converged = False
        for _ in range(INVERSE_ITER_MAXITER):
            V, _ = np.linalg.qr(spla.lu_solve(lu, E @ V))
            theta, W = spla.eig(V.T @ A @ V, V.T @ E @ V)
            order = _modulus_order(theta)
            theta, W = theta[order], V @ W[:, order]
            head = theta[:k].real + 1j * np.abs(theta[:k].imag)
            if prev is not None and np.max(np.abs(head - prev) / np.abs(head)) < INVERSE_ITER_TOL:
                converged = True
                break
            prev = head
    theta, W = _canonical_pairs(theta, W, k)
    idx = sort_eigenvalues(theta)
    return theta[idx], W[:, idx], converged


def _canonical_pairs(theta, W, k):
    """Pick the ``k`` smallest by modulus, closing under conjugation.

    Pairs from a real pencil may differ from exact conjugates in the last
    bits; each pair is replaced by ``(x, conj x)`` with ``Im x > 0``.
    """
    order = _modulus_order(theta)
    theta, W = theta[order], W[:, order]
    used = np.zeros(theta.size, dtype=bool)
    vals, vecs = [], []
    for i, x in enumerate(theta):
        if len(vals) >= k:
            break
        if used[i]:
            continue
        used[i] = True
        if x.imag == 0:
            vals.append(x)
            vecs.append(W[:, i])
            continue
        rest = np.flatnonzero(~used)
        if rest.size:
            j = rest[np.argmin(np.abs(theta[rest] - np.conj(x)))]
            used[j] = True
        v = W[:, i] if x.imag > 0 else np.conj(W[:, i])
        x = complex(x.real, abs(x.imag))
        vals += [x, np.conj(x)]
        vecs += [v, np.conj(v)]
    return np.array(vals, dtype=complex), np.column_stack(vecs)


def smallest_eigenvalues(problem, k):
    """The ``k`` smallest-magnitude generalized eigenvalues of ``(A, E)``.

    A complex eigenvalue cut off at position ``k`` pulls in its conjugate so
    the set stays closed under conjugation. Ordered by
    :func:`~tlradi.linalg.sort_eigenvalues`.
    """
    if not 1 <= k <= problem.n:
        raise ValueError(f'need 1 <= k <= n, got k={k}')
    theta, _, converged = _pencil_smallest(problem, k)
    if not converged:
        warnings.warn('subspace iteration for initial shifts did not converge',
                      ShiftFallbackWarning, stacklevel=2)
    return [complex(x) for x in theta]


def initial_shift(problem):
    """Mirrored smallest-magnitude generalized eigenvalue and its input direction.

    ``s_1 = -lambda`` where ``A v = lambda E v`` has the smallest ``|lambda|``
    (block inverse iteration, so a complex pair is found as well), and
    ``b_1`` is the normalized ``(E^{-1} B)^H v``.
    If the iteration stagnates, ``s_1 = ||B||_F`` with the leading right
    singular vector of ``B`` as direction, and a :class:`ShiftFallbackWarning`
    is issued.
    """
    theta, W, ok = _pencil_smallest(problem, 1)
    if ok:
        lam, v = complex(theta[0]), W[:, 0]
        if lam.imag == 0:
            v = np.real(v) if np.isrealobj(v) or np.allclose(v.imag, 0) else v
        s = -lam
        if s.real <= 0:
            raise ValueError(f'pencil is not stable: eigenvalue {lam} is not in the left half-plane')
        d = np.linalg.solve(problem.E, problem.B).conj().T @ v
        b, _ = _direction(d.conj())
        if s.imag == 0:
            b = np.real(b)
        return ShiftPair(s, b)
    warnings.warn('inverse iteration stagnated; falling back to s1 = ||B||_F',
                  ShiftFallbackWarning, stacklevel=2)
    _, _, Vh = np.linalg.svd(problem.B, full_matrices=False)
    return ShiftPair(np.linalg.norm(problem.B), Vh[0].conj())


def project_pair(problem, Bperp, V):
    """Project ``(A, E, B_perp)`` onto ``span(V)`` and diagonalize."""
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, np.newaxis]
    sv = np.linalg.svd(V, compute_uv=False)
    if sv.size == 0 or sv[-1] < 1e-12 * sv[0]:
        raise np.linalg.LinAlgError('projection basis is rank deficient')
    Vh = V.conj().T
    Er = Vh @ problem.E @ V
    if np.linalg.cond(Er) > 1e14:
        raise np.linalg.LinAlgError('projected E is singular')
    Aj = np.linalg.solve(Er, Vh @ problem.A @ V)
    Bj = np.linalg.solve(Er, Vh @ Bperp)
    eig = small_eig(Aj, Bj)
    return RitzData(Aj, Bj, eig.values, eig.transformed, V)


def _is_conj_pair(D):
    return (len(D) == 2 and D[0].imag != 0
            and abs(D[1] - np.conj(D[0])) <= 1e-12 * abs(D[0]))


def tangential_krylov_basis(problem, Bperp, D, Btilde):
    """Solve ``A V + E V diag(D) = B_perp Btilde^H`` column by column.

    Returns ``(V, raw)``: ``V`` has unit-norm columns, ``raw`` holds the
    unnormalized solutions. A conjugate pair costs a single complex solve.
    """
    D = np.atleast_1d(np.asarray(D))
    Btilde = np.atleast_2d(np.asarray(Btilde))
    if D.size not in (1, 2):
        raise ValueError('tangential basis supports one or two Ritz values')
    rhs = Bperp @ Btilde.conj().T
    if _is_conj_pair(D):
        v = shifted_solve(problem.A, problem.E, -D[0], rhs[:, 0])
        raw = np.column_stack([v, v.conj()])
    else:
        raw = np.column_stack([shifted_solve(problem.A, problem.E, -d, rhs[:, k])
                               for k, d in enumerate(D)])
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0):
        raise np.linalg.LinAlgError('tangential Krylov basis has a zero column')
    return raw / norms, raw


def _realify(V):
    if np.isrealobj(V):
        return V
    if V.shape[1] == 2 and np.allclose(V[:, 1], V[:, 0].conj(), rtol=0, atol=1e-14 * np.linalg.norm(V)):
        W = np.column_stack([V[:, 0].real, V[:, 0].imag])
        return W / np.linalg.norm(W, axis=0)
    return V


def _relative_change(new, old):
    if old is None or len(new) != len(old):
        return np.inf
    return float(np.max(np.abs(new - old) / np.maximum(np.abs(old), 1e-300)))


def _mirrored(shifts):
    vals = []
    for x in shifts:
        x = complex(x)
        vals += [-x] if x.imag == 0 else [-x, -x.conjugate()]
    vals = np.array(vals, dtype=complex)
    return vals[sort_eigenvalues(vals)]


def irka_update(problem, Bperp, Zi, irka_tol=1e-8, n_max=1, shifts=None):
    """Adaptive shift/direction update by a few IRKA sweeps of order 1 or 2.

    Starting from ``V = Zi`` each sweep projects, diagonalizes and, unless
    the Ritz values changed by less than ``irka_tol`` (relative), rebuilds
    ``V`` as the tangential Krylov basis for the mirrored Ritz values.
    After at most ``n_max`` sweeps, ``s = -D[0]`` with direction
    ``conj(Btilde[0])`` is emitted; a Ritz value in the right half-plane is
    used without mirroring, and two real Ritz values on a two-dimensional
    basis emit both pairs.

    ``shifts``, if given, are the shifts that produced ``Zi``; their mirror
    images act as the previous Ritz values in the first convergence test.
    """
    if n_max < 1:
        raise ValueError('n_max must be at least 1')
    V = np.asarray(Zi)
    if V.ndim == 1:
        V = V[:, np.newaxis]
    prev = None if shifts is None else _mirrored(shifts)
    raw = None
    basis_D = None
    converged = False
    iterations = 0
    for _ in range(n_max):
        ritz = project_pair(problem, Bperp, V)
        iterations += 1
        if _relative_change(ritz.D, prev) < irka_tol:
            converged = True
            break
        prev = ritz.D
        Vc, raw = tangential_krylov_basis(problem, Bperp, ritz.D, ritz.Btilde)
        basis_D = ritz.D
        V = _realify(Vc)
    D, Btilde = ritz.D, ritz.Btilde
    reusable = basis_D is not None and np.array_equal(basis_D, D)

    count = 2 if (len(D) == 2 and np.all(np.imag(D) == 0)) else 1
    pairs, solutions = [], []
    for k in range(count):
        d = complex(D[k])
        if abs(d.real) <= 1e-14 * abs(d) or d == 0:
            raise np.linalg.LinAlgError(f'no usable shift: Ritz value {d} lies on the imaginary axis')
        mirrored = d.real < 0
        s = -d if mirrored else d
        b, c = _direction(Btilde[k])
        pair = ShiftPair(s, b)
        pairs.append(pair)
        x = None
        if k == 0 and mirrored and reusable:
            x = c * raw[:, 0]
            if pair.is_real:
                x = x.real
        solutions.append(x)
    return IrkaResult(pairs, solutions, V, ritz, iterations, converged)


class ShiftSource:
    """Queue of ``(ShiftPair, precomputed solve or None)`` refilled on demand."""

    def __init__(self):
        self.pending = deque()

    def next(self, problem, state):
        if not self.pending:
            self._refill(problem, state)
        if not self.pending:
            raise ShiftSourceExhausted('shift source is exhausted')
        return self.pending.popleft()

    def _refill(self, problem, state):
        raise NotImplementedError


class StaticSource(ShiftSource):
    """Emits a fixed list of pairs in order, then is exhausted."""

    def __init__(self, pairs):
        super().__init__()
        for p in pairs:
            if not isinstance(p, ShiftPair):
                p = ShiftPair(*p)
            self.pending.append((p, None))

    def _refill(self, problem, state):
        raise ShiftSourceExhausted('static shift list is exhausted')


class AdaptiveSource(ShiftSource):
    """Initial shift from :func:`initial_shift`, then :func:`irka_update`.

    The update is seeded with all columns produced since the previous
    refill, i.e. one real column, a two-column pair block, or the two
    columns of two real shifts emitted together.
    """

    def __init__(self, n_max=1, irka_tol=1e-8):
        super().__init__()
        if n_max < 1:
            raise ValueError('n_max must be at least 1')
        if irka_tol <= 0:
            raise ValueError('irka_tol must be positive')
        self.n_max = n_max
        self.irka_tol = irka_tol
        self._group_start = None
        self._group_shifts = []
        self.updates = []

    def _refill(self, problem, state):
        if self._group_start is None:
            self.pending.append((initial_shift(problem), None))
        else:
            Zi = state.Z[:, self._group_start:]
            res = irka_update(problem, state.Bperp, Zi, self.irka_tol, self.n_max,
                              shifts=self._group_shifts)
            self.updates.append(res)
            self.pending.extend(zip(res.pairs, res.solutions))
        self._group_start = state.ncols
        self._group_shifts = [p.s for p, _ in self.pending]


def static_source(pairs):
    """A :class:`StaticSource`; pairs are ``ShiftPair`` or ``(s, b)`` tuples."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError('static shift list is empty')
    return StaticSource(pairs)


def _shift_rows(path):
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(x) for x in line.split()]
        except ValueError as exc:
            raise ValueError(f'{path}:{lineno}: {exc}') from exc
        yield lineno, vals


def load_shift_file(path, m):
    """Read shifts from text: one ``Re Im b1Re b1Im ... bmRe bmIm`` row per shift.

    Lines starting with ``#`` and blank lines are ignored. A complex row
    stands for the conjugate pair.
    """
    pairs = []
    for lineno, vals in _shift_rows(path):
        if len(vals) != 2 + 2 * m:
            raise ValueError(f'{path}:{lineno}: expected {2 + 2 * m} numbers, got {len(vals)}')
        s = complex(vals[0], vals[1])
        b = np.array(vals[2::2]) + 1j * np.array(vals[3::2])
        try:
            pairs.append(ShiftPair(s, b))
        except ValueError as exc:
            raise ValueError(f'{path}:{lineno}: {exc}') from exc
    return pairs


def load_shift_values(path):
    """Shifts only, from the leading ``Re Im`` of each row (directions ignored).

    A complex row stands for the conjugate pair, so the result is closed
    under conjugation with pairs adjacent.
    """
    shifts = []
    for lineno, vals in _shift_rows(path):
        if len(vals) < 2:
            raise ValueError(f'{path}:{lineno}: expected at least 2 numbers')
        s = complex(vals[0], vals[1])
        if s.real <= 0:
            raise ValueError(f'{path}:{lineno}: shift {s} does not have positive real part')
        shifts += [s] if s.imag == 0 else [s, s.conjugate()]
    return shifts
