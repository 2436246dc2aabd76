"""Tangential low-rank ADI (T-LR-ADI).

Each step adds one column for a real shift and two real columns for a
complex-conjugate pair, independent of the number of inputs ``m``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from tlradi.linalg import shifted_solve
from tlradi.state import AdiState, residual_norm

__all__ = [
    'ComplexPairCoefficients',
    'ShiftSourceExhausted',
    'complex_pair_coeffs',
    'tlradi_step',
    'tlradi_step_real',
    'tlradi_step_complex_c',
    'tlradi_step_complex_r',
    'tlradi_run',
]

logger = logging.getLogger(__name__)


class ShiftSourceExhausted(RuntimeError):
    """Raised when a shift source has no further pairs to offer."""


@dataclass(frozen=True)
class ComplexPairCoefficients:
    alpha: complex
    beta: float
    gamma: float


def complex_pair_coeffs(sp):
    """``alpha = b^H conj(b) Re(s)/conj(s)``, ``beta = 1/sqrt(1-|alpha|^2)``,
    ``gamma = sqrt(1 + Re(alpha))``."""
    s, b = complex(sp.s), np.asarray(sp.b)
    if s.imag == 0:
        raise ValueError('complex-pair coefficients need a shift with nonzero imaginary part')
    alpha = complex(np.sum(b.conj() ** 2) * s.real / s.conjugate())
    mod2 = abs(alpha) ** 2
    if mod2 >= 1 - 1e-14:
        raise ValueError(f'|alpha|^2 = {mod2} is numerically 1; use real-shift path')
    return ComplexPairCoefficients(alpha, 1 / np.sqrt(1 - mod2), np.sqrt(1 + alpha.real))


def _direction_solve(problem, state, sp, x):
    if x is None:
        x = shifted_solve(problem.A, problem.E, sp.s, state.Bperp @ sp.b)
    return x


def tlradi_step_real(problem, state, sp, x=None):
    """Real shift: ``z = sqrt(2s) (A - sE)^{-1} B_perp b``,
    ``B_perp += sqrt(2s) E z b^T``.

    ``x``, if given, is a precomputed solution of ``(A - sE) x = B_perp b``.
    """
    if not sp.is_real:
        raise ValueError('tlradi_step_real needs a real shift')
    s = sp.s.real
    c = np.sqrt(2 * s)
    z = c * _direction_solve(problem, state, sp, x)
    z = z.reshape(-1, 1)
    Li = c * sp.b.reshape(-1, 1)
    Bperp = state.Bperp + (problem.E @ z) @ Li.conj().T
    state.record(z, Li, Bperp, sp)
    return state


def tlradi_step_complex_c(problem, state, sp, x=None):
    """Complex pair in complex arithmetic.

    ``y = sqrt(2 Re s) (A - sE)^{-1} B_perp b``, ``Z_i = [y, beta (conj(y) - alpha y)]``
    and ``B_perp += sqrt(2 Re s) E Z_i [b, beta (conj(b) - alpha b)]^H``.
    The state becomes complex; this path exists for cross-checking.
    """
    coef = complex_pair_coeffs(sp)
    alpha, beta = coef.alpha, coef.beta
    c = np.sqrt(2 * sp.s.real)
    y = c * _direction_solve(problem, state, sp, x)
    b = sp.b.astype(complex)
    Zi = np.column_stack([y, beta * (y.conj() - alpha * y)])
    Li = c * np.column_stack([b, beta * (b.conj() - alpha * b)])
    Bperp = state.Bperp + (problem.E @ Zi) @ Li.conj().T
    state.record(Zi, Li, Bperp, sp)
    return state


def tlradi_step_complex_r(problem, state, sp, x=None):
    """Complex pair in real arithmetic.

    ``Z_i = sqrt(2)/gamma [Re y, beta (Im(alpha) Re y + gamma^2 Im y)]`` and
    ``B_perp += (2/gamma) sqrt(Re s) E Z_i [Re b, beta (Im(alpha) Re b + gamma^2 Im b)]^T``.
    """
    coef = complex_pair_coeffs(sp)
    alpha, beta, gamma = coef.alpha, coef.beta, coef.gamma
    y = np.sqrt(2 * sp.s.real) * _direction_solve(problem, state, sp, x)
    b = sp.b.astype(complex)
    Zi = np.sqrt(2) / gamma * np.column_stack(
        [y.real, beta * (alpha.imag * y.real + gamma ** 2 * y.imag)])
    Li = 2 / gamma * np.sqrt(sp.s.real) * np.column_stack(
        [b.real, beta * (alpha.imag * b.real + gamma ** 2 * b.imag)])
    Bperp = state.Bperp + (problem.E @ Zi) @ Li.T
    state.record(Zi, Li, Bperp, sp)
    return state


def tlradi_step(problem, state, sp, x=None):
    """Dispatch on the shift: one real column or a real two-column pair block."""
    if sp.is_real:
        return tlradi_step_real(problem, state, sp, x)
    return tlradi_step_complex_r(problem, state, sp, x)


def tlradi_run(problem, source, tol, max_cols=1000, callback=None):
    """Run T-LR-ADI until ``residual_norm(B_perp) < tol * ||B^T B||_2``.

    Parameters
    ----------
    problem
        The :class:`~tlradi.problem.LyapunovProblem`.
    source
        A shift source (see :mod:`tlradi.shifts`) providing
        ``next(problem, state) -> (ShiftPair, x or None)``.
    tol
        Relative residual tolerance.
    max_cols
        Column budget; reaching it ends the run with ``converged=False``.
    callback
        Called with the state after every step.

    Returns
    -------
    AdiState
        With ``converged`` set accordingly.

    Raises
    ------
    ShiftSourceExhausted
        If the source runs dry; the partial state is attached as ``exc.state``.
    """
    if tol <= 0:
        raise ValueError('tol must be positive')
    if max_cols < 1:
        raise ValueError('max_cols must be at least 1')
    state = AdiState.start(problem)
    target = tol * residual_norm(problem.B)
    if state.residual < target:
        state.converged = True
        return state
    while state.ncols < max_cols:
        try:
            sp, x = source.next(problem, state)
        except ShiftSourceExhausted as exc:
            exc.state = state
            raise
        tlradi_step(problem, state, sp, x)
        if callback is not None:
            callback(state)
        if state.residual < target:
            state.converged = True
            break
    else:
        logger.info('T-LR-ADI reached %d columns without convergence', state.ncols)
    return state
