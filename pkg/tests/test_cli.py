import csv
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tlradi.cli import main, parse_problem, parse_shifts, CliError
from tlradi.problem import LyapunovProblem, gen_heat_1d, gen_random_stable, save_matrix_market
from tlradi.state import residual_norm


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def scalar_files(tmp_path):
    paths = save_matrix_market(LyapunovProblem([[-1.0]], [[1.0]], [[1.0]]), tmp_path / 'scalar')
    return f"mtx:A={paths['A']},E={paths['E']},B={paths['B']}"


class TestParsing:
    def test_heat(self):
        P = parse_problem('heat1d:n=20,m=3')
        assert (P.n, P.m) == (20, 3)

    def test_random_seed(self):
        P = parse_problem('random:n=10,m=2,seed=4')
        assert_allclose(P.A, gen_random_stable(10, 2, seed=4).A)

    @pytest.mark.parametrize('spec', ['heat1d', 'heat1d:n=x', 'heat1d:n=5,q=1', 'spiral:n=4', 'mtx:E=a'])
    def test_bad_problem(self, spec):
        with pytest.raises(CliError):
            parse_problem(spec)

    def test_shift_specs(self):
        s = parse_shifts('adaptive:nmax=3,tol=1e-6')
        assert (s.kind, s.n_max, s.irka_tol) == ('adaptive', 3, 1e-6)
        assert parse_shifts('file:/tmp/x.txt').path == '/tmp/x.txt'
        assert parse_shifts(None).n_max == 1

    @pytest.mark.parametrize('spec', ['adaptive:nmax=0', 'adaptive:tol=-1', 'file:', 'magic'])
    def test_bad_shifts(self, spec):
        with pytest.raises(CliError):
            parse_shifts(spec)


class TestSolve:
    def test_scalar_one_column(self, scalar_files, tmp_path):
        out = tmp_path / 'out'
        code = main(['solve', '--problem', scalar_files, '--shifts', 'adaptive:nmax=1', '--out', str(out)])
        assert code == 0
        summary = read_csv(out / 'summary.csv')[0]
        assert summary['converged'] == 'true'
        assert int(summary['final_cols']) == 1
        hist = read_csv(out / 'history.csv')
        assert float(hist[0]['shift_re']) == pytest.approx(1.0, abs=1e-12)

    def test_heat_converges(self, tmp_path):
        code = main(['solve', '--problem', 'heat1d:n=100,m=2', '--tol', '1e-8', '--out', str(tmp_path)])
        assert code == 0
        summary = read_csv(tmp_path / 'summary.csv')[0]
        assert summary['converged'] == 'true'
        assert int(summary['final_cols']) <= 200
        assert float(summary['final_rel_residual']) < 1e-8

    def test_history_columns_and_normalization(self, tmp_path):
        main(['solve', '--problem', 'heat1d:n=60,m=3', '--out', str(tmp_path)])
        rows = read_csv(tmp_path / 'history.csv')
        assert list(rows[0]) == ['iter', 'cols', 'residual_norm', 'rel_residual',
                                 'elapsed_seconds', 'shift_re', 'shift_im']
        norm0 = np.linalg.norm(gen_heat_1d(60, 3).B, 2) ** 2
        for r in rows:
            assert float(r['rel_residual']) == pytest.approx(float(r['residual_norm']) / norm0, rel=1e-12)
        cols = [int(r['cols']) for r in rows]
        assert cols == sorted(cols) and cols[0] >= 1

    def test_invalid_method(self, tmp_path, capsys):
        code = main(['solve', '--problem', 'heat1d:n=10,m=1', '--method', 'bogus', '--out', str(tmp_path)])
        assert code == 1
        assert 'usage' in capsys.readouterr().err

    def test_invalid_problem_is_error(self, tmp_path):
        assert main(['solve', '--problem', 'heat1d:n=-3', '--out', str(tmp_path)]) == 1

    def test_missing_file_is_error(self, tmp_path):
        spec = f'mtx:A={tmp_path}/missing.mtx,B={tmp_path}/missing.mtx'
        assert main(['solve', '--problem', spec, '--out', str(tmp_path)]) == 1

    def test_max_cols_exit_2(self, tmp_path):
        code = main(['solve', '--problem', 'heat1d:n=100,m=2', '--max-cols', '3', '--out', str(tmp_path)])
        assert code == 2
        assert read_csv(tmp_path / 'summary.csv')[0]['converged'] == 'false'

    def test_static_file(self, tmp_path):
        f = tmp_path / 'shifts.txt'
        f.write_text('# s  b\n1.0 0.0 1.0 0.0\n')
        P = LyapunovProblem([[-1.0]], [[1.0]], [[1.0]])
        paths = save_matrix_market(P, tmp_path / 'p')
        spec = f"mtx:A={paths['A']},B={paths['B']}"
        code = main(['solve', '--problem', spec, '--shifts', f'file:{f}', '--out', str(tmp_path)])
        assert code == 0

    def test_static_file_exhausted(self, tmp_path):
        f = tmp_path / 'shifts.txt'
        f.write_text('0.5 0 1 0 0 0\n2.0 0 0 0 1 0\n')
        code = main(['solve', '--problem', 'heat1d:n=50,m=2', '--shifts', f'file:{f}', '--out', str(tmp_path)])
        assert code == 2
        assert read_csv(tmp_path / 'summary.csv')[0]['note'] == 'shift list exhausted'

    def test_static_with_block_adaptive_rejected(self, tmp_path):
        f = tmp_path / 'shifts.txt'
        f.write_text('1 0 1 0\n')
        code = main(['solve', '--problem', 'heat1d:n=20,m=1', '--method', 'block-adaptive-b',
                     '--shifts', f'file:{f}', '--out', str(tmp_path)])
        assert code == 1

    def test_block_static(self, tmp_path):
        f = tmp_path / 'shifts.txt'
        f.write_text('1 0\n10 0\n100 0\n1000 0\n')
        code = main(['solve', '--problem', 'heat1d:n=40,m=2', '--method', 'block-static',
                     '--shifts', f'file:{f}', '--max-cols', '400', '--out', str(tmp_path)])
        assert code in (0, 2)
        rows = read_csv(tmp_path / 'history.csv')
        assert {float(r['shift_re']) for r in rows} <= {1.0, 10.0, 100.0, 1000.0}

    @pytest.mark.parametrize('method', ['block-adaptive-a', 'block-adaptive-b'])
    def test_block_adaptive(self, method, tmp_path):
        code = main(['solve', '--problem', 'heat1d:n=60,m=2', '--method', method, '--out', str(tmp_path)])
        assert code == 0

    def test_deterministic_output(self, tmp_path):
        outs = []
        for k in range(2):
            d = tmp_path / str(k)
            main(['solve', '--problem', 'random:n=40,m=2,seed=3', '--shifts', 'adaptive:nmax=2',
                  '--out', str(d)])
            outs.append([{k: v for k, v in r.items() if k != 'elapsed_seconds'}
                         for r in read_csv(d / 'history.csv')])
        assert outs[0] == outs[1]


class TestCompare:
    def test_tangential_vs_block(self, tmp_path):
        code = main(['compare', '--problem', 'heat1d:n=100,m=4', '--method', 'tangential',
                     '--method', 'block-adaptive-b', '--shifts', 'adaptive:nmax=2', '--out', str(tmp_path)])
        assert code == 0
        summary = {r['method']: r for r in read_csv(tmp_path / 'summary.csv')}
        assert int(summary['tangential']['final_cols']) <= int(summary['block-adaptive-b']['final_cols'])
        rows = read_csv(tmp_path / 'compare.csv')
        assert {'cols', 'rel_residual_tangential', 'rel_error_block-adaptive-b'} <= set(rows[0])
        assert (tmp_path / 'history_tangential.csv').exists()

    def test_single_input_coincidence(self, tmp_path):
        code = main(['compare', '--problem', 'random:n=40,m=1,seed=2', '--method', 'tangential',
                     '--method', 'block-adaptive-b', '--shifts', 'adaptive:nmax=1', '--out', str(tmp_path)])
        assert code == 0
        t = read_csv(tmp_path / 'history_tangential.csv')
        b = read_csv(tmp_path / 'history_block-adaptive-b.csv')
        assert len(t) == len(b)
        for rt, rb in zip(t, b):
            assert rt['cols'] == rb['cols']
            assert float(rt['rel_residual']) == pytest.approx(float(rb['rel_residual']), abs=1e-10)
            assert float(rt['shift_re']) == pytest.approx(float(rb['shift_re']), rel=1e-10)

    def test_same_method_twice(self, tmp_path):
        main(['compare', '--problem', 'heat1d:n=50,m=2', '--method', 'tangential',
              '--method', 'tangential', '--out', str(tmp_path)])
        rows = read_csv(tmp_path / 'compare.csv')
        for r in rows:
            assert r['rel_residual_tangential_1'] == r['rel_residual_tangential_2']

    def test_needs_two_methods(self, tmp_path):
        assert main(['compare', '--problem', 'heat1d:n=10,m=1', '--method', 'tangential',
                     '--out', str(tmp_path)]) == 1

    def test_no_error_column_for_large_n(self, tmp_path):
        main(['compare', '--problem', 'heat1d:n=210,m=1', '--method', 'tangential',
              '--method', 'block-adaptive-b', '--out', str(tmp_path)])
        assert not any(k.startswith('rel_error') for k in read_csv(tmp_path / 'compare.csv')[0])


class TestVerify:
    def test_default_seeds(self, capsys):
        assert main(['verify', '--seeds', '1-5']) == 0
        out = capsys.readouterr().out
        assert 'FAIL' not in out and '35/35' in out

    def test_fault_injection(self, capsys):
        assert main(['verify', '--seeds', '1-2', '--inject-fault']) == 3
        assert 'FAIL' in capsys.readouterr().out

    def test_degenerate_size(self):
        assert main(['verify', '--n', '1', '--m', '1', '--seeds', '1-3']) == 0

    def test_problem_too_large(self):
        assert main(['verify', '--problem', 'heat1d:n=400,m=1']) == 1

    def test_bad_seed_list(self):
        assert main(['verify', '--seeds', 'a-b']) == 1


class TestGen:
    def test_round_trip(self, tmp_path):
        assert main(['gen', '--problem', 'random:n=12,m=2,seed=7', '--out', str(tmp_path)]) == 0
        P = parse_problem(f'mtx:A={tmp_path}/A.mtx,E={tmp_path}/E.mtx,B={tmp_path}/B.mtx')
        Q = gen_random_stable(12, 2, seed=7)
        assert_allclose(P.A, Q.A)
        assert_allclose(P.E, Q.E)
        assert_allclose(P.B, Q.B)
        assert residual_norm(P.B) == pytest.approx(residual_norm(Q.B))


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, '-m', 'tlradi', 'solve', '--problem', 'heat1d:n=30,m=1',
                           '--out', str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert 'converged' in proc.stdout
