from fractions import Fraction

import numpy as np
import pytest

from src.documents import digest, dumps, loads, parse_set, read_problem, set_of
from src.errors import CellAlignmentError, InputError, SchemaError, UnknownCellError
from src.spaces import build_grid


def document(**extra):
    doc = {'space': {'weights': [1, 1, 1, 1]}, 'partition': {'block_of': [0, 0, 1, 1]},
           'payload': {'function': [1, 2, 3, 4]}}
    doc.update(extra)
    return doc


def test_loads_rationals_and_rejects_non_finite():
    assert loads('{"x": {"num": 1, "den": 3}}') == {'x': Fraction(1, 3)}
    with pytest.raises(SchemaError):
        loads('[NaN]')
    with pytest.raises(SchemaError):
        loads('{"num": 1, "den": 0}')
    with pytest.raises(SchemaError):
        loads('{"broken": ')


def test_dumps_is_canonical():
    text = dumps({'b': np.array([Fraction(1, 2), Fraction(3)], dtype=object), 'a': np.float64(0.25)})
    assert text.endswith('\n')
    assert text.index('"a"') < text.index('"b"')
    assert loads(text) == {'a': 0.25, 'b': [Fraction(1, 2), Fraction(3)]}
    assert dumps(loads(text)) == text


def test_digest_ignores_key_order():
    assert digest({'a': 1, 'b': [1, 2]}) == digest({'b': [1, 2], 'a': 1})
    assert digest({'a': 1}) != digest({'a': 2})


def test_read_problem_defaults():
    problem = read_problem(document())
    assert problem.parameters == {'tol': 1e-9, 'exact': False, 'mode': 'splittable', 'diagonal_only': False}
    assert problem.partition.block_count == 2
    assert problem.grid.weights.tolist() == [0.25] * 4


def test_command_line_overrides_document():
    doc = document(parameters={'tol': 1e-6, 'exact': True})
    problem = read_problem(doc)
    assert problem.arith.exact and problem.arith.tol == 1e-6
    problem = read_problem(doc, tol=1e-3, exact=False, mode='atomic', diagonal_only=True)
    assert problem.parameters == {'tol': 1e-3, 'exact': False, 'mode': 'atomic', 'diagonal_only': True}


def test_blocks_and_block_of_are_equivalent():
    by_blocks = read_problem(document(partition={'blocks': [[0, 1], [2, 3]]}))
    by_cells = read_problem(document())
    assert by_blocks.partition.block_of == by_cells.partition.block_of
    assert read_problem(document(partition=None)).partition.block_count == 1


@pytest.mark.parametrize('doc', [
    [],
    {'payload': {}},
    {'space': {'weights': 3}},
    {'space': {'weights': [1, 1]}, 'parameters': {'tol': 0}},
    {'space': {'weights': [1, 1]}, 'partition': {}},
])
def test_malformed_documents(doc):
    with pytest.raises(SchemaError):
        read_problem(doc)


def test_digest_tracks_document(exact):
    problem = read_problem(document())
    assert problem.digest == digest(document())
    assert read_problem(document(), exact=True).digest == problem.digest


def test_parse_set(uniform4):
    E = parse_set([[0, 0, 0.125], [2, '1/8', '1/8']], uniform4)
    assert E.mass(uniform4) == pytest.approx(0.25)
    with pytest.raises(SchemaError):
        parse_set({'cell': 0}, uniform4)
    with pytest.raises(SchemaError):
        parse_set([[0, 0]], uniform4)
    with pytest.raises(SchemaError):
        parse_set([[0, 0, -0.1]], uniform4)
    with pytest.raises(UnknownCellError):
        parse_set([[7, 0, 0.1]], uniform4)
    with pytest.raises(InputError):
        parse_set([[0, 0.2, 0.1]], uniform4)


def test_parse_set_atomic():
    grid = build_grid([1, 1], 'atomic')
    with pytest.raises(CellAlignmentError):
        parse_set([[0, 0, 0.25]], grid)
    assert parse_set([[1, 0, 0.5]], grid).cells == (1,)


def test_set_defaults_to_whole_space():
    problem = read_problem(document())
    assert set_of(problem).mass(problem.grid) == pytest.approx(1)


def test_exact_decimal_literals():
    problem = read_problem(document(payload={'set': [[0, 0, 0.1]]}), exact=True)
    assert set_of(problem).intervals == ((0, Fraction(0), Fraction(1, 10)),)
