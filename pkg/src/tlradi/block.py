"""Block low-rank ADI: the classical recurrence, the residual-based form, and
the adaptive B-LR-ADI shift strategy."""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as spla

from tlradi.linalg import shifted_solve, sort_eigenvalues
from tlradi.state import REAL_SHIFT_RTOL, AdiState, residual_norm

__all__ = [
    'group_shifts',
    'block_adi_classic',
    'block_adi_residual',
    'block_step',
    'residual_factor_classic',
    'residual_norm',
    'bladi_run',
    'ritz_shifts',
]

logger = logging.getLogger(__name__)


def group_shifts(shifts):
    """Split a conjugation-closed shift list into real shifts and complex pairs.

    Returns a list of ``(s, is_pair)``; for a pair, ``s`` is the first member
    and its conjugate must follow it immediately.
    """
    shifts = [complex(s) for s in shifts]
    groups = []
    i = 0
    while i < len(shifts):
        s = shifts[i]
        if not np.isfinite(s) or s.real <= 0:
            raise ValueError(f'shift {s} does not have positive real part')
        if abs(s.imag) <= REAL_SHIFT_RTOL * abs(s):
            groups.append((complex(s.real), False))
            i += 1
            continue
        if i + 1 >= len(shifts) or abs(shifts[i + 1] - s.conjugate()) > 1e-12 * abs(s):
            raise ValueError(f'shift list is not closed under conjugation at {s}')
        groups.append((s, True))
        i += 2
    return groups


def block_adi_classic(problem, shifts):
    """Classical low-rank ADI recurrence in complex arithmetic.

    ``Z_1 = sqrt(2 Re s_1) (A - s_1 E)^{-1} B`` and
    ``Z_i = sqrt(Re s_i / Re s_{i-1}) [I + (s_i + conj(s_{i-1})) (A - s_i E)^{-1} E] Z_{i-1}``.
    The residual factor is formed afterwards by
    :func:`residual_factor_classic`. Kept as a reference implementation.
    """
    A, E = problem.A, problem.E
    group_shifts(shifts)
    shifts = [complex(s) for s in shifts]
    state = AdiState.start(problem)
    Zprev = None
    for i, s in enumerate(shifts):
        if i == 0:
            Zi = np.sqrt(2 * s.real) * shifted_solve(A, E, s, problem.B.astype(complex))
        else:
            sp = shifts[i - 1]
            Zi = np.sqrt(s.real / sp.real) * (
                Zprev + (s + sp.conjugate()) * shifted_solve(A, E, s, E @ Zprev))
        Zprev = Zi
        Li = np.sqrt(2 * s.real) * np.eye(problem.m)
        state.blocks.append(Zi)
        state.Lblocks.append(Li)
        state.shift_history.append(s)
    if shifts:
        state.Bperp = residual_factor_classic(problem, state.Z, shifts)
    return state


def residual_factor_classic(problem, Z, shifts):
    """``B_perp = B + E Z L^T`` with ``L = [sqrt(2 Re s_1) I_m, ..., sqrt(2 Re s_k) I_m]``.

    The result is real (imaginary part dropped) when the shifts are closed
    under conjugation.
    """
    m = problem.m
    shifts = [complex(s) for s in shifts]
    Z = np.asarray(Z)
    if Z.shape != (problem.n, m * len(shifts)):
        raise ValueError(f'dimension mismatch: Z has shape {Z.shape}, '
                         f'expected {(problem.n, m * len(shifts))}')
    if not shifts:
        return problem.B.copy()
    L = np.hstack([np.sqrt(2 * s.real) * np.eye(m) for s in shifts])
    Bperp = problem.B + problem.E @ Z @ L.T
    if np.iscomplexobj(Bperp):
        scale = max(np.linalg.norm(Bperp), np.finfo(float).tiny)
        if np.linalg.norm(Bperp.imag) <= 1e-10 * scale:
            Bperp = Bperp.real
    return Bperp


def block_step(problem, state, s, pair=False):
    """One residual-based block step for a real shift or a complex pair.

    A complex pair ``(s, conj(s))`` is processed in real arithmetic; the
    new block has ``2m`` columns ``sqrt(2)/g [Re Y, b (Im a Re Y + g^2 Im Y)]``
    with ``Y = sqrt(2 Re s) (A - s E)^{-1} B_perp``, ``a = Re s / conj(s)``,
    ``b = 1/sqrt(1 - |a|^2)`` and ``g = sqrt(1 + Re a)``.
    """
    A, E = problem.A, problem.E
    m = state.Bperp.shape[1]
    s = complex(s)
    if not pair:
        s = s.real
        Zi = np.sqrt(2 * s) * shifted_solve(A, E, s, state.Bperp)
        Li = np.sqrt(2 * s) * np.eye(m)
        Bperp = state.Bperp + np.sqrt(2 * s) * (E @ Zi)
    else:
        Y = np.sqrt(2 * s.real) * shifted_solve(A, E, s, state.Bperp)
        alpha = s.real / s.conjugate()
        beta = 1 / np.sqrt(1 - abs(alpha) ** 2)
        gamma = np.sqrt(1 + alpha.real)
        Z1 = np.sqrt(2) / gamma * Y.real
        Z2 = np.sqrt(2) / gamma * beta * (alpha.imag * Y.real + gamma ** 2 * Y.imag)
        Zi = np.hstack([Z1, Z2])
        c = 2 / gamma * np.sqrt(s.real)
        Li = c * np.hstack([np.eye(m), beta * alpha.imag * np.eye(m)])
        Bperp = state.Bperp + c * (E @ (Z1 + beta * alpha.imag * Z2))
    state.record(Zi, Li, Bperp, s)
    return state


def block_adi_residual(problem, shifts, state=None, callback=None):
    """Residual-based block ADI over a conjugation-closed shift list.

    ``Z_i = sqrt(2 Re s_i) (A - s_i E)^{-1} B_perp`` followed by
    ``B_perp += sqrt(2 Re s_i) E Z_i``; complex pairs are handled by
    :func:`block_step` in real arithmetic.
    """
    if state is None:
        state = AdiState.start(problem)
    for s, pair in group_shifts(shifts):
        block_step(problem, state, s, pair)
        if callback is not None:
            callback(state)
    return state


def ritz_shifts(problem, V):
    """Mirrored Ritz values of ``(A, E)`` on ``span(V)`` lying in the left half-plane.

    ``V`` is orthonormalized (rank-revealing) first; the returned list keeps
    the deterministic eigenvalue order with conjugate pairs adjacent.
    """
    V = spla.orth(np.asarray(V))
    if V.shape[1] == 0:
        return []
    Ar = V.conj().T @ problem.A @ V
    Er = V.conj().T @ problem.E @ V
    lam = spla.eigvals(np.linalg.solve(Er, Ar))
    lam = lam[sort_eigenvalues(lam)]
    shifts = []
    for x in lam:
        if x.real < 0:
            if abs(x.imag) <= REAL_SHIFT_RTOL * abs(x):
                x = complex(x.real)
            shifts.append(-x)
    return shifts


def _init_shifts(problem, init):
    from tlradi.shifts import smallest_eigenvalues

    if init == 'a':
        shifts = ritz_shifts(problem, problem.B)
        if not shifts or max(abs(s) for s in shifts) == 0:
            raise ValueError("initial strategy 'a' produced no usable shifts "
                             "(projection with B gave no stable Ritz values); use init 'b'")
        return shifts
    if init == 'b':
        return [-x for x in smallest_eigenvalues(problem, problem.m)]
    raise ValueError(f"unknown init strategy {init!r}, expected 'a' or 'b'")


def bladi_run(problem, tol, max_iters=1000, init='b', max_cols=None, callback=None):
    """Adaptive block ADI (B-LR-ADI).

    Each shift set is consumed in order; then the columns produced by its
    final step(s), at most ``2m`` of them, are projected and the mirrored
    stable Ritz values become the next set. Stops when
    ``residual_norm(B_perp) < tol * ||B^T B||_2``, after ``max_iters`` steps,
    or once ``max_cols`` columns are reached.
    """
    if tol <= 0:
        raise ValueError('tol must be positive')
    state = AdiState.start(problem)
    target = tol * residual_norm(problem.B)
    if state.residual < target:
        state.converged = True
        return state
    shifts = _init_shifts(problem, init)
    width = 2 * problem.m
    steps = 0
    while True:
        start = state.ncols
        for s, pair in group_shifts(shifts):
            block_step(problem, state, s, pair)
            steps += 1
            if callback is not None:
                callback(state)
            if state.residual < target:
                state.converged = True
                return state
            if steps >= max_iters or (max_cols is not None and state.ncols >= max_cols):
                logger.info('B-LR-ADI stopped without convergence after %d steps', steps)
                return state
        Zset = state.Z[:, start:]
        shifts = ritz_shifts(problem, Zset[:, -width:])
        if not shifts:
            raise RuntimeError('adaptive block strategy produced no stable Ritz values')
