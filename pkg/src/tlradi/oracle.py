"""Projection route to the ADI approximant, used as an independent oracle.

A basis ``V`` with ``A V - E V S = B L`` and diagonal ``S`` in the right
half-plane gives ``P = V X^{-1} V^H`` where ``S^H X + X S = L^H L``. The
basis is never orthogonalized so ``S`` stays diagonal and ``X`` has a
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tlradi.linalg import ORACLE_MAX_ORDER, cauchy_lyap_solve, shifted_solve
from tlradi.state import ShiftPair
from tlradi.tangential import complex_pair_coeffs

__all__ = [
    'KrylovData',
    'conjugate_closure',
    'build_tangential_basis',
    'build_iteration_basis',
    'oracle_phat',
    'oracle_residual_factor',
]

COND_LIMIT = 1e14


@dataclass(frozen=True)
class KrylovData:
    """``V`` (n-by-k), diagonal shifts ``shifts`` (length k), ``L`` (m-by-k)
    with ``A V - E V diag(shifts) = B L``; ``problem`` is kept for the
    residual factor."""

    V: np.ndarray
    shifts: np.ndarray
    L: np.ndarray
    problem: object
    conj_closed: bool = True

    @property
    def k(self):
        return self.shifts.size

    def sylvester_residual(self):
        """Relative Frobenius residual of ``A V - E V S - B L``."""
        P = self.problem
        R = P.A @ self.V - P.E @ self.V * self.shifts[np.newaxis, :] - P.B @ self.L
        scale = max(np.linalg.norm(P.B @ self.L), np.finfo(float).tiny)
        return np.linalg.norm(R) / scale


def conjugate_closure(pairs):
    """Expand complex pairs ``(s, b)`` into ``(s, b), (conj(s), conj(b))``."""
    out = []
    for p in pairs:
        if not isinstance(p, ShiftPair):
            p = ShiftPair(*p)
        out.append(p)
        if not p.is_real:
            out.append(p.conjugate())
    return out


def _check_distinct(shifts):
    shifts = np.asarray(shifts, dtype=complex)
    k = shifts.size
    if k > 1:
        gap = np.abs(shifts[:, None] - shifts[None, :]) + np.diag(np.full(k, np.inf))
        if np.min(gap) <= 1e-12 * np.max(np.abs(shifts)):
            raise ValueError('tangential basis requires pairwise distinct shifts')


def _check_order(problem):
    if problem.n > ORACLE_MAX_ORDER:
        raise ValueError(f'oracle is limited to n <= {ORACLE_MAX_ORDER}, got {problem.n}')


def _basis_from_directions(problem, shifts, L):
    cols = [shifted_solve(problem.A, problem.E, s, problem.B @ L[:, j])
            for j, s in enumerate(shifts)]
    if not cols:
        return np.zeros((problem.n, 0), dtype=complex)
    return np.column_stack(cols).astype(complex)


def build_tangential_basis(problem, pairs, close=True):
    """Tangential rational Krylov basis with columns
    ``sqrt(2 Re s_j) (A - s_j E)^{-1} B b_j`` and ``L[:, j] = sqrt(2 Re s_j) b_j``.

    With ``close=True`` complex pairs are expanded by :func:`conjugate_closure`.
    For ``m = 1`` this spans the same space as T-LR-ADI; for ``m > 1`` the
    iteration uses modified directions, see :func:`build_iteration_basis`.
    """
    _check_order(problem)
    pairs = conjugate_closure(pairs) if close else [
        p if isinstance(p, ShiftPair) else ShiftPair(*p) for p in pairs]
    shifts = np.array([p.s for p in pairs], dtype=complex)
    _check_distinct(shifts)
    L = np.zeros((problem.m, len(pairs)), dtype=complex)
    for j, p in enumerate(pairs):
        L[:, j] = np.sqrt(2 * p.s.real) * p.b
    V = _basis_from_directions(problem, shifts, L)
    closed = close or all(p.is_real for p in pairs)
    return KrylovData(V, shifts, L, problem, conj_closed=closed)


def _step_coupling(p):
    """For one T-LR-ADI step in real arithmetic return ``(D, M, Lstep)``.

    ``D`` holds the directions hitting ``B_perp`` (``[b]`` or ``[b, conj b]``),
    the step's columns are ``W M`` with ``W`` the matching shifted solves,
    and ``Lstep`` is the step's block of the residual factor coefficients.
    """
    if p.is_real:
        c = np.sqrt(2 * p.s.real)
        b = p.b.reshape(-1, 1)
        return b.astype(complex), np.array([[c]], dtype=complex), c * b
    coef = complex_pair_coeffs(p)
    a, be, g = coef.alpha, coef.beta, coef.gamma
    c = np.sqrt(2 * p.s.real)
    b = p.b.astype(complex)
    D = np.column_stack([b, b.conj()])
    # [Re y, Im y] = c [w, conj w] R
    R = c * np.array([[0.5, -0.5j], [0.5, 0.5j]])
    K = np.sqrt(2) / g * np.array([[1.0, be * a.imag], [0.0, be * g ** 2]])
    Lstep = 2 / g * np.sqrt(p.s.real) * np.column_stack(
        [b.real, be * (a.imag * b.real + g ** 2 * b.imag)])
    return D, R @ K, Lstep


def build_iteration_basis(problem, pairs):
    """Tangential basis reproducing the T-LR-ADI subspace for ``m >= 1``.

    Every step solves against the current residual factor, so its column
    lies in ``(A - s E)^{-1} B d`` plus earlier columns. Writing all shifted
    solves as ``W`` gives ``A W - E W T = B D`` with ``T`` upper triangular
    and diagonal equal to the shifts; diagonalizing ``T = Q S Q^{-1}`` yields
    effective directions ``L = D Q`` and a fresh basis of solves with ``B``
    alone. Only the shift/direction sequence is used, never the iterate.
    """
    _check_order(problem)
    pairs = [p if isinstance(p, ShiftPair) else ShiftPair(*p) for p in pairs]
    m = problem.m
    Ds, Ms, Ls, shifts = [], [], [], []
    for p in pairs:
        D, M, Lstep = _step_coupling(p)
        Ds.append(D)
        Ms.append(M)
        Ls.append(Lstep)
        shifts.extend([p.s] if p.is_real else [p.s, p.s.conjugate()])
    shifts = np.array(shifts, dtype=complex)
    _check_distinct(shifts)
    k = shifts.size
    if k == 0:
        return KrylovData(np.zeros((problem.n, 0), dtype=complex), shifts,
                          np.zeros((m, 0), dtype=complex), problem)
    T = np.diag(shifts)
    Dall = np.hstack(Ds)
    offs = np.cumsum([0] + [D.shape[1] for D in Ds])
    for i in range(len(pairs)):
        for j in range(i):
            # E Z_j L_j^H hits direction block i; Z_j = W_j M_j
            T[offs[j]:offs[j + 1], offs[i]:offs[i + 1]] = Ms[j] @ Ls[j].conj().T @ Ds[i]
    # unit upper triangular eigenvectors of T
    Q = np.eye(k, dtype=complex)
    for j in range(k):
        for i in range(j - 1, -1, -1):
            acc = T[i, i + 1:j + 1] @ Q[i + 1:j + 1, j]
            Q[i, j] = acc / (shifts[j] - shifts[i])
    L = Dall @ Q
    V = _basis_from_directions(problem, shifts, L)
    return KrylovData(V, shifts, L, problem, conj_closed=True)


def _reduced_solution(kd):
    X = cauchy_lyap_solve(kd.shifts, kd.L)
    if np.linalg.cond(X) > COND_LIMIT:
        raise np.linalg.LinAlgError('ill-conditioned reduced solution')
    return X


def _drop_imag(M, what):
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    imag = np.linalg.norm(M.imag)
    if imag > 1e-10 * scale:
        raise AssertionError(f'{what} of a conjugation-closed basis has imaginary part {imag / scale:.2e}')
    return M.real


def oracle_phat(kd, return_X=False):
    """``P = V X^{-1} V^H`` with ``X`` from :func:`~tlradi.linalg.cauchy_lyap_solve`.

    Real for conjugation-closed data (checked); optionally also returns ``X``.
    """
    if kd.k == 0:
        P = np.zeros((kd.problem.n, kd.problem.n))
        return (P, np.zeros((0, 0))) if return_X else P
    X = _reduced_solution(kd)
    P = kd.V @ np.linalg.solve(X, kd.V.conj().T)
    P = (P + P.conj().T) / 2
    if kd.conj_closed:
        P = _drop_imag(P, 'oracle approximant')
    return (P, X) if return_X else P


def oracle_residual_factor(kd, X=None):
    """``B_perp = B + E V X^{-1} L^H``; compare via ``B_perp B_perp^H``."""
    problem = kd.problem
    if kd.k == 0:
        return problem.B.copy()
    if X is None:
        X = _reduced_solution(kd)
    Bp = problem.B + problem.E @ kd.V @ np.linalg.solve(X, kd.L.conj().T)
    return Bp
