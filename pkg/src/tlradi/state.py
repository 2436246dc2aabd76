"""Shift/direction pairs and the mutable state of an ADI run."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from tlradi.linalg import sym_max_eig

__all__ = ['REAL_SHIFT_RTOL', 'ShiftPair', 'HistoryEntry', 'AdiState', 'residual_norm']

# |Im s| <= REAL_SHIFT_RTOL * |s| is treated as a real shift.
REAL_SHIFT_RTOL = 1e-12


def _phase_normalize(b):
    """Rotate ``b`` so that its largest-modulus entry is real positive."""
    k = int(np.argmax(np.abs(b)))
    b = b * (abs(b[k]) / b[k])
    b[k] = abs(b[k])
    return b


@dataclass(frozen=True)
class ShiftPair:
    """Shift ``s`` in the open right half-plane with a unit direction ``b``.

    ``b`` is normalized on construction and its global phase is fixed so
    that the largest-modulus entry is real positive; this leaves every
    ADI iterate unchanged. Real shifts need a real direction.
    """

    s: complex
    b: np.ndarray

    def __post_init__(self):
        s = complex(self.s)
        if not np.isfinite(s) or s.real <= 0:
            raise ValueError(f'shift must have positive real part, got {s}')
        b = np.atleast_1d(np.asarray(self.b, dtype=complex)).ravel()
        nrm = np.linalg.norm(b)
        if not np.isfinite(nrm) or nrm == 0:
            raise ValueError('tangential direction must be a nonzero finite vector')
        b = _phase_normalize(b / nrm)
        if abs(s.imag) <= REAL_SHIFT_RTOL * abs(s):
            s = complex(s.real)
            if np.max(np.abs(b.imag)) > 1e-12:
                raise ValueError('a real shift requires a real tangential direction')
            b = b.real
        elif np.all(b.imag == 0):
            b = b.real
        object.__setattr__(self, 's', s)
        object.__setattr__(self, 'b', b)

    @property
    def is_real(self):
        return self.s.imag == 0

    @property
    def m(self):
        return self.b.size

    def conjugate(self):
        return ShiftPair(self.s.conjugate(), np.conj(self.b))


class HistoryEntry(NamedTuple):
    iteration: int
    columns: int
    residual: float
    elapsed: float
    shift: complex


def residual_norm(Bperp):
    """``||R||_2 = max eig(B_perp^H B_perp)`` for the residual ``R = B_perp B_perp^H``."""
    Bperp = np.asarray(Bperp)
    return sym_max_eig(Bperp.conj().T @ Bperp)


@dataclass
class AdiState:
    """Low-rank factor ``Z`` (kept as column blocks) and residual factor ``Bperp``.

    After every completed step ``A Z Z^H E^T + E Z Z^H A^T + B B^T`` equals
    ``Bperp Bperp^H``. ``Lblocks[i]`` satisfies
    ``Bperp = B + E [Z_1, ..., Z_k] [L_1, ..., L_k]^H``.
    """

    Bperp: np.ndarray
    blocks: list = field(default_factory=list)
    Lblocks: list = field(default_factory=list)
    shift_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    converged: bool = False
    start_time: float = field(default_factory=time.perf_counter)

    @classmethod
    def start(cls, problem):
        return cls(Bperp=problem.B.copy())

    @property
    def n(self):
        return self.Bperp.shape[0]

    @property
    def ncols(self):
        return sum(Z.shape[1] for Z in self.blocks)

    @property
    def Z(self):
        if not self.blocks:
            return np.zeros((self.n, 0))
        return np.hstack(self.blocks)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.Bperp) or any(np.iscomplexobj(Z) for Z in self.blocks)

    @property
    def residual(self):
        return residual_norm(self.Bperp)

    def gramian(self, imag_rtol=1e-10):
        """``Z Z^H``; the real part is returned when the imaginary part is negligible."""
        Z = self.Z
        P = Z @ Z.conj().T
        if np.iscomplexobj(P):
            scale = max(np.linalg.norm(P), np.finfo(float).tiny)
            if np.linalg.norm(P.imag) <= imag_rtol * scale:
                P = P.real
        return P

    def record(self, Zi, Li, Bperp, shift):
        """Append one step and log its residual.

        ``shift`` is a :class:`ShiftPair` for tangential steps and a bare
        complex shift for block steps.
        """
        self.blocks.append(Zi)
        self.Lblocks.append(Li)
        self.Bperp = Bperp
        self.shift_history.append(shift)
        self.residual_history.append(HistoryEntry(
            iteration=len(self.residual_history) + 1,
            columns=self.ncols,
            residual=residual_norm(Bperp),
            elapsed=time.perf_counter() - self.start_time,
            shift=complex(shift.s if isinstance(shift, ShiftPair) else shift),
        ))
