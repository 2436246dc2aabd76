"""Tangential low-rank ADI for generalized Lyapunov equations."""

from tlradi.block import bladi_run, block_adi_classic, block_adi_residual, block_step
from tlradi.linalg import cauchy_lyap_solve, dense_lyap_oracle, shifted_solve, small_eig
from tlradi.oracle import (
    KrylovData,
    build_iteration_basis,
    build_tangential_basis,
    oracle_phat,
    oracle_residual_factor,
)
from tlradi.problem import LyapunovProblem, gen_heat_1d, gen_random_stable, load_matrix_market
from tlradi.shifts import (
    AdaptiveSource,
    StaticSource,
    initial_shift,
    irka_update,
    load_shift_file,
    static_source,
)
from tlradi.state import AdiState, ShiftPair, residual_norm
from tlradi.tangential import ShiftSourceExhausted, complex_pair_coeffs, tlradi_run, tlradi_step

__version__ = '0.1.0'
