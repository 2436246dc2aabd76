"""Command-line front end: ``solve``, ``compare``, ``verify`` and ``gen``.

Exit codes: 0 success, 1 error, 2 ran out of columns (or shifts) before
reaching the tolerance, 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tlradi.block import bladi_run, block_step, group_shifts
from tlradi.linalg import dense_lyap_oracle
from tlradi.problem import gen_heat_1d, gen_random_stable, load_matrix_market, save_matrix_market
from tlradi.shifts import AdaptiveSource, StaticSource, load_shift_file, load_shift_values
from tlradi.state import AdiState, residual_norm
from tlradi.tangential import ShiftSourceExhausted, tlradi_run
from tlradi.verify import run_suite

logger = logging.getLogger(__name__)

METHODS = ('tangential', 'block-adaptive-a', 'block-adaptive-b', 'block-static')
HISTORY_FIELDS = ['iter', 'cols', 'residual_norm', 'rel_residual', 'elapsed_seconds', 'shift_re', 'shift_im']
ERROR_ORACLE_MAX_N = 200

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_VERIFY_FAILED = 0, 1, 2, 3


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors map to exit status 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f'{self.prog}: error: {message}\n')


def _parse_kv(text, what):
    out = {}
    if not text:
        return out
    for item in text.split(','):
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise CliError(f'malformed {what} parameter {item!r}, expected key=value')
        out[key.strip()] = value.strip()
    return out


def _int(params, key, default=None):
    if key not in params:
        if default is None:
            raise CliError(f'missing parameter {key!r}')
        return default
    try:
        return int(params.pop(key))
    except ValueError:
        raise CliError(f'parameter {key!r} must be an integer') from None


def _no_leftovers(params, what):
    if params:
        raise CliError(f'unknown {what} parameter(s): {", ".join(sorted(params))}')


def parse_problem(spec, seed=0):
    """Build a problem from ``heat1d:n=..,m=..``, ``random:n=..,m=..,seed=..``
    or ``mtx:A=..,E=..,B=..``."""
    kind, _, rest = spec.partition(':')
    params = _parse_kv(rest, 'problem')
    if kind == 'heat1d':
        n, m = _int(params, 'n'), _int(params, 'm', 1)
        s = _int(params, 'seed', seed)
        _no_leftovers(params, 'heat1d')
        return gen_heat_1d(n, m, s)
    if kind == 'random':
        n, m = _int(params, 'n'), _int(params, 'm', 1)
        s = _int(params, 'seed', seed)
        _no_leftovers(params, 'random')
        return gen_random_stable(n, m, s)
    if kind == 'mtx':
        paths = {k: params.pop(k, None) for k in ('A', 'E', 'B')}
        _no_leftovers(params, 'mtx')
        if paths['A'] is None or paths['B'] is None:
            raise CliError('mtx problem needs A=... and B=...')
        return load_matrix_market(paths['A'], paths['E'], paths['B'])
    raise CliError(f'unknown problem kind {kind!r}, expected heat1d, random or mtx')


@dataclass
class ShiftSpec:
    kind: str
    n_max: int = 1
    irka_tol: float = 1e-8
    path: str | None = None


def parse_shifts(spec):
    """``adaptive:nmax=K,tol=..`` or ``file:PATH``."""
    if spec is None:
        return ShiftSpec('adaptive')
    kind, _, rest = spec.partition(':')
    if kind == 'file':
        if not rest:
            raise CliError('file shifts need a path, file:PATH')
        return ShiftSpec('file', path=rest)
    if kind == 'adaptive':
        params = _parse_kv(rest, 'shift')
        n_max = _int(params, 'nmax', 1)
        try:
            tol = float(params.pop('tol', 1e-8))
        except ValueError:
            raise CliError("shift parameter 'tol' must be a number") from None
        _no_leftovers(params, 'adaptive shift')
        if n_max < 1 or tol <= 0:
            raise CliError('adaptive shifts need nmax >= 1 and tol > 0')
        return ShiftSpec('adaptive', n_max, tol)
    raise CliError(f'unknown shift spec {kind!r}, expected adaptive or file')


@dataclass
class RunResult:
    method: str
    state: AdiState
    converged: bool
    note: str
    seconds: float


def run_method(problem, method, shift_spec, tol, max_cols):
    """Run one solver variant and return its final state."""
    if tol <= 0:
        raise CliError('--tol must be positive')
    if max_cols < 1:
        raise CliError('--max-cols must be at least 1')
    if method not in METHODS:
        raise CliError(f'unknown method {method!r}')
    t0 = time.perf_counter()
    note = ''
    if method == 'tangential':
        if shift_spec.kind == 'file':
            source = StaticSource(load_shift_file(shift_spec.path, problem.m))
        else:
            source = AdaptiveSource(shift_spec.n_max, shift_spec.irka_tol)
        try:
            state = tlradi_run(problem, source, tol, max_cols)
        except ShiftSourceExhausted as exc:
            state, note = exc.state, 'shift list exhausted'
    elif method.startswith('block-adaptive'):
        if shift_spec.kind == 'file':
            raise CliError('static shifts cannot be used with block-adaptive methods')
        state = bladi_run(problem, tol, init=method[-1], max_cols=max_cols)
    else:
        if shift_spec.kind != 'file':
            raise CliError('block-static needs --shifts file:PATH')
        state = _block_static(problem, load_shift_values(shift_spec.path), tol, max_cols)
    return RunResult(method, state, state.converged, note, time.perf_counter() - t0)


def _block_static(problem, shifts, tol, max_cols):
    """Block ADI cycling through a fixed shift list."""
    groups = group_shifts(shifts)
    if not groups:
        raise CliError('shift file contains no shifts')
    state = AdiState.start(problem)
    target = tol * residual_norm(problem.B)
    if state.residual < target:
        state.converged = True
        return state
    for s, pair in itertools.cycle(groups):
        block_step(problem, state, s, pair)
        if state.residual < target:
            state.converged = True
            break
        if state.ncols >= max_cols:
            break
    return state


def history_rows(problem, state):
    norm0 = residual_norm(problem.B)
    for h in state.residual_history:
        yield {
            'iter': h.iteration,
            'cols': h.columns,
            'residual_norm': repr(float(h.residual)),
            'rel_residual': repr(float(h.residual / norm0)),
            'elapsed_seconds': f'{h.elapsed:.6f}',
            'shift_re': repr(float(h.shift.real)),
            'shift_im': repr(float(h.shift.imag)),
        }


def _write_csv(path, fields, rows):
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _summary_row(problem, res):
    return {
        'method': res.method,
        'converged': str(res.converged).lower(),
        'final_cols': res.state.ncols,
        'final_rel_residual': repr(float(res.state.residual / residual_norm(problem.B))),
        'total_seconds': f'{res.seconds:.6f}',
        'note': res.note,
    }


SUMMARY_FIELDS = ['method', 'converged', 'final_cols', 'final_rel_residual', 'total_seconds', 'note']


def prefix_errors(state, X):
    """Relative Frobenius error of ``Z Z^T`` against ``X`` after every step."""
    nx = np.linalg.norm(X)
    P = np.zeros_like(X)
    cols = 0
    out = {}
    for Zi in state.blocks:
        P = P + (Zi @ Zi.conj().T).real
        cols += Zi.shape[1]
        out[cols] = np.linalg.norm(P - X) / nx
    return out


def cmd_solve(args):
    problem = parse_problem(args.problem, args.seed)
    res = run_method(problem, args.method, parse_shifts(args.shifts), args.tol, args.max_cols)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / 'history.csv', HISTORY_FIELDS, history_rows(problem, res.state))
    _write_csv(out / 'summary.csv', SUMMARY_FIELDS, [_summary_row(problem, res)])
    status = 'converged' if res.converged else 'not converged'
    print(f'{res.method}: {status} with {res.state.ncols} columns, '
          f'rel_residual={res.state.residual / residual_norm(problem.B):.3e}'
          + (f' ({res.note})' if res.note else ''))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_compare(args):
    methods = args.method or []
    if len(methods) != 2:
        raise CliError('compare needs exactly two --method options')
    specs = args.shifts or [None]
    if len(specs) == 1:
        specs = specs * 2
    if len(specs) != 2:
        raise CliError('compare takes one shared --shifts or one per method')
    problem = parse_problem(args.problem, args.seed)
    labels = methods if methods[0] != methods[1] else [f'{methods[0]}_1', f'{methods[0]}_2']
    results = [run_method(problem, m, parse_shifts(s), args.tol, args.max_cols)
               for m, s in zip(methods, specs)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    X = dense_lyap_oracle(problem) if problem.n <= ERROR_ORACLE_MAX_N else None
    norm0 = residual_norm(problem.B)
    table = {}
    for label, res in zip(labels, results):
        _write_csv(out / f'history_{label}.csv', HISTORY_FIELDS, history_rows(problem, res.state))
        for h in res.state.residual_history:
            table.setdefault(h.columns, {})[f'rel_residual_{label}'] = repr(float(h.residual / norm0))
        if X is not None:
            for cols, err in prefix_errors(res.state, X).items():
                table.setdefault(cols, {})[f'rel_error_{label}'] = repr(float(err))
    fields = ['cols'] + [f'rel_residual_{lb}' for lb in labels]
    if X is not None:
        fields += [f'rel_error_{lb}' for lb in labels]
    _write_csv(out / 'compare.csv', fields,
               ({'cols': c, **table[c]} for c in sorted(table)))
    _write_csv(out / 'summary.csv', SUMMARY_FIELDS,
               [dict(_summary_row(problem, r), method=lb) for lb, r in zip(labels, results)])
    for lb, r in zip(labels, results):
        print(f'{lb}: converged={str(r.converged).lower()} cols={r.state.ncols}')
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def _parse_seeds(text):
    seeds = []
    for part in text.split(','):
        lo, sep, hi = part.partition('-')
        try:
            seeds += list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
        except ValueError:
            raise CliError(f'bad seed list {text!r}') from None
    return seeds


def cmd_verify(args):
    seeds = _parse_seeds(args.seeds) if args.seeds else [args.seed]
    problem = parse_problem(args.problem, args.seed) if args.problem else None
    results = run_suite(seeds, n=args.n, m=args.m, steps=args.steps,
                        fault=args.inject_fault, problem=problem)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f'{len(results) - failed}/{len(results)} checks passed')
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def cmd_gen(args):
    problem = parse_problem(args.problem, args.seed)
    paths = save_matrix_market(problem, args.out)
    print(' '.join(str(p) for p in paths.values()))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog='tlradi', description='Tangential low-rank ADI for generalized Lyapunov equations.')
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def common(p, multi=False):
        p.add_argument('--problem', required=True,
                       help='heat1d:n=..,m=.. | random:n=..,m=..,seed=.. | mtx:A=..,E=..,B=..')
        p.add_argument('--seed', type=int, default=0)
        if multi:
            p.add_argument('--method', action='append', choices=METHODS)
            p.add_argument('--shifts', action='append')
        else:
            p.add_argument('--method', choices=METHODS, default='tangential')
            p.add_argument('--shifts', help='adaptive:nmax=K,tol=.. | file:PATH')
        p.add_argument('--tol', type=float, default=1e-8)
        p.add_argument('--max-cols', type=int, default=1000)
        p.add_argument('--out', default='.')

    common(sub.add_parser('solve', help='run one solver variant'))
    common(sub.add_parser('compare', help='run two variants on one problem'), multi=True)
    v = sub.add_parser('verify', help='run the invariant suite')
    v.add_argument('--problem')
    v.add_argument('--seed', type=int, default=1)
    v.add_argument('--seeds', help='e.g. 1-5 or 1,3,7')
    v.add_argument('--n', type=int, default=30)
    v.add_argument('--m', type=int, default=3)
    v.add_argument('--steps', type=int, default=4)
    v.add_argument('--inject-fault', action='store_true')
    g = sub.add_parser('gen', help='write a generated problem as Matrix Market files')
    g.add_argument('--problem', required=True)
    g.add_argument('--seed', type=int, default=0)
    g.add_argument('--out', default='.')
    return parser


COMMANDS = {'solve': cmd_solve, 'compare': cmd_compare, 'verify': cmd_verify, 'gen': cmd_gen}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, np.linalg.LinAlgError, OSError, RuntimeError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_ERROR
