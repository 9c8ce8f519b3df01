from fractions import Fraction

import pytest

import cli
from src.documents import dumps, loads

PAIRS = {'block_of': [0, 0, 1, 1]}


def zero_two_problem(selection=(0.5, 1, 1.5, 1)):
    return {
        'command': 'bang-bang',
        'space': {'weights': [1, 1, 1, 1]},
        'partition': PAIRS,
        'payload': {'polytope_map': [[[0], [2]]] * 4, 'selection': list(selection)},
    }


@pytest.fixture
def workdir(tmp_path):
    class Workdir:
        def write(self, name, data):
            path = tmp_path / name
            path.write_text(dumps(data), encoding='utf-8')
            return str(path)

        def read(self, name):
            return loads((tmp_path / name).read_text(encoding='utf-8'))

        def path(self, name):
            return str(tmp_path / name)

        def call(self, *argv):
            return cli.main([*argv, '--nobanner'])

    return Workdir()


def run_and_verify(workdir, command, problem, tamper=None):
    source = workdir.write('problem.json', problem)
    assert workdir.call(command, '-i', source, '-o', workdir.path('report.json')) == 0
    report = workdir.read('report.json')
    if tamper is not None:
        tamper(report)
    target = workdir.write('report.json', report)
    return workdir.call('verify', '-i', source, '--report', target, '-o', workdir.path('verify.json'))


def test_cond_exp_report(workdir):
    problem = {'space': {'weights': [1, 1, 1, 1]}, 'partition': PAIRS, 'payload': {'function': [1, 2, 3, 4]}}
    source = workdir.write('problem.json', problem)
    assert workdir.call('cond-exp', '-i', source, '-o', workdir.path('out.json')) == 0
    report = workdir.read('out.json')
    assert report['command'] == 'cond-exp'
    assert report['outputs']['cond_exp'] == [[1.5], [3.5]]
    assert all(check['deviation'] <= check['bound'] for check in report['checks'])


def test_exact_flag_writes_rationals(workdir):
    problem = {'space': {'weights': [1, 1, 1, 1]}, 'partition': PAIRS, 'payload': {'function': [1, 2, 3, 4]}}
    source = workdir.write('problem.json', problem)
    assert workdir.call('cond-exp', '-i', source, '-o', workdir.path('out.json'), '--exact') == 0
    report = workdir.read('out.json')
    assert report['parameters']['exact'] is True
    assert report['outputs']['cond_exp'] == [[Fraction(3, 2)], [Fraction(7, 2)]]


def test_bang_bang_then_verify(workdir):
    assert run_and_verify(workdir, 'bang-bang', zero_two_problem()) == 0
    result = workdir.read('verify.json')
    assert result['verified_command'] == 'bang-bang'
    assert result['checks'] > 0


def test_partition_then_verify_exact(workdir):
    problem = {'space': {'weights': [3, 1, 2, 2]}, 'partition': PAIRS,
               'payload': {'h': [1, 2, 3, 4], 'alpha': [['1/3', '2/3']] * 4},
               'parameters': {'exact': True}}
    assert run_and_verify(workdir, 'partition', problem) == 0


def test_tampered_residual_fails(workdir):
    problem = {'space': {'weights': [1, 1, 1, 1]}, 'partition': PAIRS,
               'payload': {'h': [1, 2, 3, 4], 'alpha': [[0.5, 0.5]] * 4}}

    def tamper(report):
        report['outputs']['residual'][0][0][0] += 0.1

    assert run_and_verify(workdir, 'partition', problem, tamper) == 4


def test_tampered_achieved_fails(workdir):
    def tamper(report):
        report['outputs']['achieved'][0][0] += 1

    assert run_and_verify(workdir, 'bang-bang', zero_two_problem(), tamper) == 4


def test_tampered_pieces_fail(workdir):
    def tamper(report):
        report['outputs']['pieces'] = [report['outputs']['pieces'][1], report['outputs']['pieces'][0]]

    assert run_and_verify(workdir, 'bang-bang', zero_two_problem(), tamper) == 4


def test_digest_mismatch(workdir):
    source = workdir.write('problem.json', zero_two_problem())
    assert workdir.call('bang-bang', '-i', source, '-o', workdir.path('report.json')) == 0
    other = workdir.write('problem.json', zero_two_problem((1, 1, 1, 1)))
    assert workdir.call('verify', '-i', other, '--report', workdir.path('report.json')) == 4


def test_schema_errors_exit_two(workdir):
    source = workdir.write('problem.json', {'payload': {}})
    assert workdir.call('cond-exp', '-i', source) == 2
    assert workdir.call('cond-exp', '-i', workdir.path('missing.json')) == 2
    assert workdir.call('verify', '-i', source) == 2
    assert workdir.call('no-such-command') == 2


def test_selection_outside_hull_exits_three(workdir):
    source = workdir.write('problem.json', zero_two_problem((0.5, 3, 1.5, 1)))
    assert workdir.call('bang-bang', '-i', source, '-o', workdir.path('report.json')) == 3


def test_generate_then_run(workdir):
    target = workdir.path('generated.json')
    assert workdir.call('generate', '--kind', 'partition', '--seed', '3', '-o', target) == 0
    document = workdir.read('generated.json')
    assert document['command'] == 'partition'
    assert workdir.call('partition', '-i', target, '-o', workdir.path('report.json')) == 0
    assert workdir.call('verify', '-i', target, '--report', workdir.path('report.json'),
                        '-o', workdir.path('verify.json')) == 0
