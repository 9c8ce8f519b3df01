from fractions import Fraction

import numpy as np
import pytest

from src.errors import DimensionError, HullMembershipError, InputError, WeightError
from src.oracle import direct_integrate_strategy
from src.purify import (
    ActionSet,
    IntegrandFamily,
    YoungMeasure,
    barycenter,
    density_step,
    purify,
    support_polytope,
    to_dirac,
)
from src.spaces import BlockPartition, build_grid

AB = ActionSet(('a', 'b'))


def young(grid, rows, actions=AB):
    return YoungMeasure.from_values(actions, rows, grid)


def family(grid, values, actions=AB):
    return IntegrandFamily.from_values(values, grid, actions)


def test_action_labels_are_distinct():
    with pytest.raises(InputError):
        ActionSet(('a', 'a'))
    with pytest.raises(InputError):
        AB.index('z')
    assert AB.index('b') == 1


def test_young_measure_validation(uniform4):
    with pytest.raises(WeightError):
        young(uniform4, [[0.5, 0.6]] * 4)
    with pytest.raises(WeightError):
        young(uniform4, [[1.5, -0.5]] * 4)
    with pytest.raises(DimensionError):
        young(uniform4, [[1, 0]] * 3)


def test_barycenter_dot_product(uniform4):
    delta = young(uniform4, [[0.3, 0.7]] * 4)
    V = family(uniform4, [[0, 1]] * 4)
    assert barycenter(delta, V, uniform4).values[:, 0].tolist() == pytest.approx([0.7] * 4)


def test_barycenter_dirac_and_symmetric(uniform4):
    V = family(uniform4, [[[1, 2], [-1, -2]]] * 4)
    dirac = YoungMeasure.dirac(AB, ['b', 'a', 'a', 'b'], uniform4)
    assert barycenter(dirac, V, uniform4).values.tolist() == [[-1, -2], [1, 2], [1, 2], [-1, -2]]
    uniform = young(uniform4, [[0.5, 0.5]] * 4)
    np.testing.assert_allclose(barycenter(uniform, V, uniform4).values, 0, atol=1e-12)


def test_support_polytope_excludes_zero_mass(uniform4):
    abc = ActionSet(('a', 'b', 'c'))
    delta = young(uniform4, [[0.5, 0.5, 0]] * 4, abc)
    V = family(uniform4, [[1, 2, 3]] * 4, abc)
    T = support_polytope(delta, V, uniform4)
    assert [len(v) for v in T.vertices] == [2] * 4
    dirac = YoungMeasure.dirac(abc, ['c'] * 4, uniform4)
    assert [len(v) for v in support_polytope(dirac, V, uniform4).vertices] == [1] * 4


def test_purify_dirac_is_unchanged(uniform4, pairs):
    V = family(uniform4, [[0, 1], [2, 5], [1, 1], [3, -1]])
    delta = YoungMeasure.dirac(AB, ['a', 'b', 'b', 'a'], uniform4)
    strategy, report = purify(delta, V, pairs, uniform4)
    labels = [row[3] for row in strategy.assignments()]
    assert labels == ['a', 'b', 'b', 'a']
    assert report.deviation == 0


def test_purify_two_actions(exact):
    grid = build_grid([1, 1, 1, 1], arith=exact)
    C = BlockPartition.trivial(4)
    delta = young(grid, [[Fraction(3, 10), Fraction(7, 10)]] * 4)
    V = family(grid, [[0, 1]] * 4)
    strategy, report = purify(delta, V, C, grid)
    assert strategy.pieces[0].mass(grid) == Fraction(3, 10)
    assert strategy.pieces[1].mass(grid) == Fraction(7, 10)
    assert report.pure[0, 0] == Fraction(7, 10)
    assert report.mixed[0, 0] == Fraction(7, 10)
    assert report.deviation == 0


def test_unsupported_action_never_chosen(uniform4, pairs):
    abc = ActionSet(('a', 'b', 'c'))
    delta = young(uniform4, [[0.5, 0.5, 0]] * 4, abc)
    V = family(uniform4, [[0, 1, 10]] * 4, abc)
    strategy, report = purify(delta, V, pairs, uniform4)
    assert strategy.pieces[2].is_empty
    assert all(row[3] != 'c' for row in strategy.assignments())
    assert report.deviation <= 1e-9


def test_duplicate_values_pick_smallest_action(uniform4, trivial4):
    delta = young(uniform4, [[0.5, 0.5]] * 4)
    V = family(uniform4, [[2, 2]] * 4)
    strategy, _ = purify(delta, V, trivial4, uniform4)
    assert strategy.pieces[1].is_empty
    assert strategy.pieces[0].mass(uniform4) == pytest.approx(1)


def test_density_step_constant_family(uniform4, pairs):
    delta = young(uniform4, [[0.2, 0.8], [0.5, 0.5], [1, 0], [0.1, 0.9]])
    V = family(uniform4, [[[1], [1]]] * 4)
    _, report = density_step(delta, V, pairs, uniform4)
    assert report.deviation <= 1e-12


def test_density_step_three_integrands(rng):
    grid = build_grid(rng.integers(1, 9, 8))
    C = BlockPartition((0, 0, 1, 1, 2, 2, 3, 3))
    actions = ActionSet(('x', 'y', 'z', 'w'))
    raw = rng.integers(1, 5, (8, 4))
    delta = young(grid, raw / raw.sum(axis=1, keepdims=True), actions)
    phis = family(grid, rng.integers(-3, 4, (8, 4, 3)), actions)
    strategy, report = density_step(delta, phis, C, grid)
    for i in range(3):
        column = IntegrandFamily(phis.values[:, :, i:i + 1])
        pure = direct_integrate_strategy(strategy, column, C, grid).values
        mixed = report.mixed[:, i:i + 1]
        np.testing.assert_allclose(pure, mixed, atol=1e-9)


def test_atomic_purify_within_bound(rng):
    grid = build_grid(rng.integers(1, 9, 8), 'atomic')
    C = BlockPartition.trivial(8)
    raw = rng.integers(0, 4, (8, 2)) + 1
    delta = young(grid, raw / raw.sum(axis=1, keepdims=True))
    V = family(grid, rng.integers(-2, 3, (8, 2, 1)))
    strategy, report = purify(delta, V, C, grid)
    assert report.deviation <= report.deviation_bound
    for piece in strategy.pieces:
        piece.check(grid)


def test_to_dirac_round_trip(uniform4, pairs):
    delta = young(uniform4, [[0.25, 0.75]] * 4)
    V = family(uniform4, [[0, 1]] * 4)
    strategy, _ = purify(delta, V, pairs, uniform4)
    split, dirac = to_dirac(strategy, uniform4)
    assert split.grid.size == 8
    assert set(np.asarray(dirac.probabilities, dtype=float).sum(axis=1)) == {1.0}
    fine_V = family(split.grid, split.lift_values(V.values))
    again, report = purify(dirac, fine_V, split.lift_partition(pairs), split.grid)
    assert report.deviation == 0
    for a in range(2):
        assert split.project_set(again.pieces[a]).intervals == strategy.pieces[a].intervals


def test_barycenter_outside_support_polytope_is_rejected(uniform4):
    delta = young(uniform4, [[0.5, 0.5]] * 4)
    V = family(uniform4, [[0, 1]] * 4)
    object.__setattr__(delta, 'probabilities', np.array([[0.0, 0.5]] * 4))
    with pytest.raises(HullMembershipError):
        barycenter(delta, V, uniform4)
