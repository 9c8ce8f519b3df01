from fractions import Fraction

import numpy as np
import pytest

from src.bangbang import bang_bang, integral_bang_bang, pointset_bang_bang
from src.condexp import SimpleFunction, ce_measure
from src.errors import HullMembershipError
from src.oracle import direct_integrate, direct_integrate_selection
from src.polytope import PolytopeMap, extreme_points
from src.spaces import BlockPartition, RefinedSet, build_grid


def level_set(selection, value):
    """{f = value}，value 为标量极点"""
    triples = []
    for i, piece in enumerate(selection.pieces):
        for cell, offset, length in piece.intervals:
            if selection.values[cell, i, 0] == value:
                triples.append((cell, offset, length))
    return RefinedSet(len(selection.values), tuple(triples))


def segment_map(grid, low, high):
    return PolytopeMap.from_lists([[[low], [high]]] * grid.size, grid)


@pytest.mark.parametrize('first, second', [(0, 1), (1, 0)])
def test_symmetric_case_puts_first_vertex_on_left_halves(uniform4, pairs, first, second):
    T = segment_map(uniform4, first, second)
    h = SimpleFunction.constant(0.5, uniform4)
    selection, report = bang_bang(T, h, pairs, uniform4)
    assert report.achieved[:, 0].tolist() == pytest.approx([0.5, 0.5])
    assert report.deviation <= 1e-9
    split, f = selection.to_function(uniform4)
    assert split.grid.size == 8
    assert f.values[:, 0].tolist() == [first, second] * 4


def test_symmetric_case_conditional_only(uniform4, pairs):
    T = segment_map(uniform4, 0, 1)
    selection, report = bang_bang(T, SimpleFunction.constant(0.5, uniform4), pairs, uniform4)
    assert report.target[:, 0].tolist() == pytest.approx([0.5, 0.5])
    assert selection.conditional(pairs, uniform4)[:, 0].tolist() == pytest.approx([0.5, 0.5])


@pytest.mark.parametrize('exact_mode', [False, True])
def test_zero_two_example(arith, exact, exact_mode, pairs):
    mode = exact if exact_mode else arith
    grid = build_grid([1, 1, 1, 1], arith=mode)
    T = segment_map(grid, 0, 2)
    h = SimpleFunction.from_values([Fraction(1, 2), 1, Fraction(3, 2), 1], grid)
    selection, report = bang_bang(T, h, pairs, grid)
    top = ce_measure(level_set(selection, 2), pairs, grid).values[:, 0]
    if exact_mode:
        assert report.target[:, 0].tolist() == [Fraction(3, 4), Fraction(5, 4)]
        assert top.tolist() == [Fraction(3, 8), Fraction(5, 8)]
        assert report.deviation == 0
    else:
        assert report.target[:, 0].tolist() == pytest.approx([0.75, 1.25])
        assert top.tolist() == pytest.approx([0.375, 0.625])
        assert report.deviation <= 1e-9
    np.testing.assert_allclose(np.asarray(direct_integrate_selection(selection, pairs, grid).values, dtype=float),
                               np.asarray(direct_integrate(h, pairs, grid).values, dtype=float), atol=1e-9)
    assert set(np.asarray(selection.values, dtype=float).ravel()) <= {0.0, 2.0}


def test_extreme_selection_is_identity(uniform4, pairs):
    T = segment_map(uniform4, 0, 1)
    h = SimpleFunction.from_values([0, 1, 1, 0], uniform4)
    selection, report = bang_bang(T, h, pairs, uniform4)
    split, f = selection.to_function(uniform4)
    assert split.grid.size == 4
    assert f.values[:, 0].tolist() == [0, 1, 1, 0]
    for k in range(4):
        assert sum(1 for piece in selection.pieces if k in piece.cells) == 1
    assert report.deviation == 0


def test_full_matrix_moments_hold(rng):
    grid = build_grid(rng.integers(1, 6, 6))
    C = BlockPartition((0, 0, 1, 1, 2, 2))
    vertices = [rng.integers(-3, 4, (4, 2)) for _ in range(6)]
    lam = rng.dirichlet(np.ones(4), 6)
    h = SimpleFunction.from_values([lam[k] @ vertices[k] for k in range(6)], grid)
    T = PolytopeMap.from_lists([v.tolist() for v in vertices], grid)
    selection, report = bang_bang(T, h, C, grid)
    decomposition = report.decomposition
    p = decomposition.slots
    for i in range(p):
        for j in range(p):
            slot = decomposition.slot(j)
            lhs = direct_integrate(slot, C, grid, E=selection.pieces[i]).values
            rhs = direct_integrate(SimpleFunction(decomposition.weights[:, i:i + 1] * slot.values), C, grid).values
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_atomic_deviation_within_bound(rng):
    grid = build_grid(rng.integers(1, 10, 8), 'atomic')
    C = BlockPartition((0, 0, 0, 0, 1, 1, 1, 1))
    vertices = [rng.integers(-2, 3, (3, 2)) for _ in range(8)]
    lam = rng.dirichlet(np.ones(3), 8)
    h = SimpleFunction.from_values([lam[k] @ vertices[k] for k in range(8)], grid)
    T = PolytopeMap.from_lists([v.tolist() for v in vertices], grid)
    _, full = bang_bang(T, h, C, grid)
    _, diagonal = bang_bang(T, h, C, grid, diagonal_only=True)
    assert full.deviation <= full.deviation_bound
    assert diagonal.deviation <= diagonal.deviation_bound
    assert diagonal.deviation_bound < full.deviation_bound


def test_pointset_drops_interior_points(exact):
    grid = build_grid([1, 2, 1], arith=exact)
    C = BlockPartition.trivial(3)
    P = PolytopeMap.from_lists([[[0, 0], [1, 0], [0, 1], [Fraction(1, 4), Fraction(1, 4)]]] * 3, grid)
    s = SimpleFunction.from_values([[Fraction(1, 3), Fraction(1, 3)]] * 3, grid)
    selection, report = pointset_bang_bang(P, s, C, grid)
    assert [piece.mass(grid) for piece in selection.pieces] == [Fraction(1, 3)] * 3
    assert selection.provenance.tolist() == [[0, 1, 2]] * 3
    assert report.deviation == 0


def test_integral_version(uniform4):
    T = segment_map(uniform4, 0, 1)
    _, report = integral_bang_bang(T, SimpleFunction.constant(0.5, uniform4), uniform4)
    assert report.achieved.shape == (1, 1)
    assert report.achieved[0, 0] == pytest.approx(0.5)


def test_integral_random_instance(rng):
    grid = build_grid(rng.integers(1, 9, 8))
    vertices = [rng.integers(-4, 5, (5, 2)) for _ in range(8)]
    lam = rng.dirichlet(np.ones(5), 8)
    h = SimpleFunction.from_values([lam[k] @ vertices[k] for k in range(8)], grid)
    T = PolytopeMap.from_lists([v.tolist() for v in vertices], grid)
    selection, report = integral_bang_bang(T, h, grid)
    C = BlockPartition.trivial(8)
    np.testing.assert_allclose(direct_integrate_selection(selection, C, grid).values,
                               direct_integrate(h, C, grid).values, atol=1e-9)


def test_selection_outside_hull_names_cell(uniform4, pairs):
    T = segment_map(uniform4, 0, 1)
    h = SimpleFunction.from_values([0.5, 2, 0.5, 0.5], uniform4)
    with pytest.raises(HullMembershipError) as info:
        bang_bang(T, h, pairs, uniform4)
    assert info.value.cell == 1


@pytest.mark.parametrize('seed', range(20))
def test_extreme_selection_is_fixed_point(exact, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 7))
    grid = build_grid(rng.integers(1, 6, m), arith=exact)
    _, block_of = np.unique(rng.integers(0, 3, m), return_inverse=True)
    C = BlockPartition(tuple(int(b) for b in block_of), int(block_of.max()) + 1)
    vertices = [rng.integers(-3, 4, (4, 2)).tolist() for _ in range(m)]
    T = PolytopeMap.from_lists(vertices, grid)
    chosen = []
    for k in range(m):
        ext = extreme_points(T.vertices[k], exact)
        chosen.append(ext[int(rng.integers(len(ext)))])
    h = SimpleFunction(exact.array(chosen))
    selection, report = bang_bang(T, h, C, grid)
    split, f = selection.to_function(grid)
    assert split.grid.size == m
    assert (f.values == h.values).all()
    assert report.deviation == 0


def test_random_selections_stay_inside_hull():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(1, 6))
        grid = build_grid(rng.integers(1, 6, m))
        C = BlockPartition.trivial(m)
        vertices = [rng.integers(-4, 5, (int(rng.integers(2, 6)), 2)).astype(float) for _ in range(m)]
        h = SimpleFunction.from_values([rng.dirichlet(np.ones(len(v))) @ v for v in vertices], grid)
        T = PolytopeMap.from_lists([v.tolist() for v in vertices], grid)
        _, report = bang_bang(T, h, C, grid)
        assert report.deviation <= report.deviation_bound + 1e-9
