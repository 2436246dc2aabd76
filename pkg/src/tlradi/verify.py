"""Cross-checks between the ADI variants, the projection oracle and dense residuals."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from tlradi.block import block_adi_classic, block_adi_residual, block_step
from tlradi.linalg import ORACLE_MAX_ORDER
from tlradi.oracle import build_iteration_basis, oracle_phat, oracle_residual_factor
from tlradi.problem import gen_random_stable
from tlradi.state import AdiState, ShiftPair, residual_norm
from tlradi.tangential import tlradi_step, tlradi_step_complex_c, tlradi_step_complex_r

__all__ = [
    'CheckResult',
    'random_block_shifts',
    'random_pair',
    'random_pairs',
    'check_block_equivalence',
    'check_complex_forms',
    'check_oracle',
    'check_residual_identity',
    'check_block_specialization',
    'check_residual_norm',
    'run_suite',
]


class CheckResult(NamedTuple):
    name: str
    seed: int
    discrepancy: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.discrepancy) and self.discrepancy <= self.tol)

    def line(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f'{status} {self.name:<22} seed={self.seed:<3d} discrepancy={self.discrepancy:.3e} tol={self.tol:.0e}'


def _rel(a, b, scale=None):
    scale = np.linalg.norm(b) if scale is None else scale
    return float(np.linalg.norm(a - b) / max(scale, np.finfo(float).tiny))


def random_block_shifts(rng, count):
    """A conjugation-closed list of roughly ``count`` distinct shifts."""
    shifts = []
    while len(shifts) < count:
        if rng.random() < 0.5 or len(shifts) == count - 1:
            shifts.append(complex(rng.uniform(0.5, 4.0)))
        else:
            s = complex(rng.uniform(0.5, 4.0), rng.uniform(0.3, 3.0))
            shifts += [s, s.conjugate()]
    return shifts


def random_pair(rng, m, complex_shift):
    if complex_shift:
        s = complex(rng.uniform(0.5, 4.0), rng.choice([-1, 1]) * rng.uniform(0.3, 3.0))
        b = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        if m == 1:
            b = np.ones(1)
    else:
        s = rng.uniform(0.5, 4.0)
        b = rng.standard_normal(m)
    return ShiftPair(s, b)


def random_pairs(rng, m, count):
    return [random_pair(rng, m, rng.random() < 0.5) for _ in range(count)]


def check_block_equivalence(problem, shifts, seed=0):
    """Classical and residual-based block ADI give the same approximant."""
    Pc = block_adi_classic(problem, shifts).gramian()
    Pr = block_adi_residual(problem, shifts).gramian()
    return CheckResult('block-equivalence', seed, _rel(Pr, Pc), 1e-10)


def check_complex_forms(problem, pair, seed=0):
    """Complex- and real-arithmetic pair steps agree; the real one stays real."""
    sc = tlradi_step_complex_c(problem, AdiState.start(problem), pair)
    sr = tlradi_step_complex_r(problem, AdiState.start(problem), pair)
    Rc = sc.Bperp @ sc.Bperp.conj().T
    d = max(_rel(sr.gramian(), sc.gramian()),
            _rel(sr.Bperp @ sr.Bperp.T, Rc, np.linalg.norm(problem.B @ problem.B.T)))
    if not (np.isrealobj(sr.Z) and np.isrealobj(sr.Bperp)):
        d = np.inf
    return CheckResult('complex-real-pair', seed, d, 1e-11)


def _run_static(problem, pairs, fault=False):
    state = AdiState.start(problem)
    for p in pairs:
        tlradi_step(problem, state, p)
    if fault and state.blocks:
        state.blocks[0] = 1.01 * state.blocks[0]
    return state


def check_oracle(problem, pairs, seed=0, fault=False):
    """Iterate against the projection oracle, for the approximant and the residual."""
    state = _run_static(problem, pairs, fault)
    kd = build_iteration_basis(problem, pairs)
    P, X = oracle_phat(kd, return_X=True)
    Bo = oracle_residual_factor(kd, X)
    BB = np.linalg.norm(problem.B @ problem.B.T)
    d1 = _rel(state.gramian(), P)
    d2 = _rel(state.Bperp @ state.Bperp.conj().T, Bo @ Bo.conj().T, BB)
    return [CheckResult('oracle-approximant', seed, d1, 1e-9),
            CheckResult('oracle-residual', seed, d2, 1e-9)]


def check_residual_identity(problem, state, seed=0, name='residual-identity'):
    """``A Z Z^H E^T + E Z Z^H A^T + B B^T = B_perp B_perp^H``."""
    R = problem.residual(state.gramian())
    Bp = state.Bperp
    d = _rel(R, Bp @ Bp.conj().T, np.linalg.norm(problem.B @ problem.B.T))
    return CheckResult(name, seed, d, 1e-8)


def check_block_specialization(problem, s, seed=0, rng=None):
    """``m`` tangential steps with one real shift and orthonormal directions
    equal a single block step."""
    rng = np.random.default_rng(seed) if rng is None else rng
    m = problem.m
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    st = AdiState.start(problem)
    for k in range(m):
        tlradi_step(problem, st, ShiftPair(s, Q[:, k]))
    sb = block_step(problem, AdiState.start(problem), s)
    d1 = _rel(st.gramian(), sb.gramian())
    d2 = _rel(st.Bperp @ st.Bperp.T, sb.Bperp @ sb.Bperp.T)
    return CheckResult('block-specialization', seed, max(d1, d2), 1e-11)


def check_residual_norm(problem, state, seed=0):
    """Low-rank residual norm against the spectral norm of the dense residual."""
    dense = np.linalg.norm(problem.residual(state.gramian()), 2)
    lowrank = residual_norm(state.Bperp)
    scale = residual_norm(problem.B)
    return CheckResult('residual-norm', seed, abs(dense - lowrank) / scale, 1e-8)


def run_suite(seeds=range(1, 6), n=30, m=3, steps=4, fault=False, problem=None):
    """Run every check on ``gen_random_stable(n, m, seed)`` for each seed.

    With ``fault=True`` the first block of each tangential iterate is scaled
    by 1.01 after the run, which must make the oracle and residual checks fail.
    The number of steps is capped at the state dimension: more shifts than
    ``n`` leave the reduced solution numerically singular.
    """
    if problem is not None and problem.n > ORACLE_MAX_ORDER:
        raise ValueError(f'verify suite needs n <= {ORACLE_MAX_ORDER}')
    if problem is None and n > ORACLE_MAX_ORDER:
        raise ValueError(f'verify suite needs n <= {ORACLE_MAX_ORDER}')
    results = []
    for seed in seeds:
        P = problem if problem is not None else gen_random_stable(n, m, seed)
        rng = np.random.default_rng(seed)
        k = min(steps, P.n)
        results.append(check_block_equivalence(P, random_block_shifts(rng, k), seed))
        results.append(check_complex_forms(P, random_pair(rng, P.m, True), seed))
        pairs = random_pairs(rng, P.m, k)
        results.extend(check_oracle(P, pairs, seed, fault))
        state = _run_static(P, pairs, fault)
        results.append(check_residual_identity(P, state, seed))
        results.append(check_residual_norm(P, state, seed))
        results.append(check_block_specialization(P, rng.uniform(0.5, 4.0), seed, rng))
    return results
