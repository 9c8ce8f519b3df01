from fractions import Fraction

import numpy as np
import pytest

from src.condexp import SimpleFunction, cond_exp, weighted_ce_measure
from src.errors import BudgetExceededError, DimensionError, WeightError
from src.oracle import direct_integrate, enumerate_atomic_partitions
from src.spaces import BlockPartition, RefinedSet, build_grid


def test_enumeration_two_atoms():
    grid = build_grid([0.6, 0.4], 'atomic')
    alpha = SimpleFunction(np.full((2, 2), 0.5))
    best = enumerate_atomic_partitions(grid, 2, SimpleFunction.constant(1, grid), alpha, BlockPartition.trivial(2))
    assert best.residual == pytest.approx(0.1)
    assert sorted(best.assignment) == [0, 1]


def test_enumeration_equal_thirds():
    grid = build_grid([1, 1, 1], 'atomic')
    alpha = SimpleFunction(np.full((3, 3), 1 / 3))
    best = enumerate_atomic_partitions(grid, 3, SimpleFunction.constant(1, grid), alpha, BlockPartition.trivial(3))
    assert best.evaluated == 27
    assert best.residual == pytest.approx(0, abs=1e-12)
    assert sorted(best.assignment) == [0, 1, 2]


def test_enumeration_degenerate_alpha(exact):
    grid = build_grid([1, 2, 3], 'atomic', exact)
    alpha = SimpleFunction.from_values([[1, 0]] * 3, grid)
    h = SimpleFunction.from_values([1, -2, 5], grid)
    best = enumerate_atomic_partitions(grid, 2, h, alpha, BlockPartition.trivial(3))
    assert best.residual == 0
    assert best.assignment == (0, 0, 0)


def test_enumeration_blocks_are_independent(exact):
    grid = build_grid([1, 1, 1, 1], 'atomic', exact)
    alpha = SimpleFunction.from_values([[Fraction(1, 2)] * 2] * 4, grid)
    best = enumerate_atomic_partitions(grid, 2, SimpleFunction.constant(1, grid), alpha, BlockPartition((0, 0, 1, 1)))
    assert best.evaluated == 8
    assert best.residual == 0


def test_enumeration_budget(uniform4):
    alpha = SimpleFunction(np.full((4, 2), 0.5))
    with pytest.raises(BudgetExceededError):
        enumerate_atomic_partitions(uniform4, 2, SimpleFunction.constant(1, uniform4), alpha,
                                    BlockPartition.trivial(4), budget=8)


def test_enumeration_checks_alpha(uniform4, trivial4):
    h = SimpleFunction.constant(1, uniform4)
    with pytest.raises(DimensionError):
        enumerate_atomic_partitions(uniform4, 3, h, SimpleFunction(np.full((4, 2), 0.5)), trivial4)
    with pytest.raises(WeightError):
        enumerate_atomic_partitions(uniform4, 2, h, SimpleFunction(np.array([[1.5, -0.5]] * 4)), trivial4)


def test_direct_integrate_trivial_cases(uniform4, pairs):
    zero = SimpleFunction.constant(0, uniform4)
    ones = SimpleFunction.constant(1, uniform4)
    assert direct_integrate(zero, pairs, uniform4).values[:, 0].tolist() == [0, 0]
    whole = RefinedSet.whole(uniform4)
    assert direct_integrate(ones, pairs, uniform4, E=whole).values[:, 0].tolist() == pytest.approx([1, 1])


def test_direct_integrate_agrees_with_cond_exp(rng):
    grid = build_grid(rng.integers(1, 20, 9))
    C = BlockPartition((0, 1, 2, 0, 1, 2, 0, 1, 2))
    f = SimpleFunction(rng.normal(size=(9, 3)))
    np.testing.assert_allclose(direct_integrate(f, C, grid).values, cond_exp(f, C, grid).values, atol=1e-12)
    E = RefinedSet.whole(grid).left_fraction(0.3)
    np.testing.assert_allclose(direct_integrate(f, C, grid, E=E).values,
                               weighted_ce_measure(f, E, C, grid).values, atol=1e-12)


def test_direct_integrate_other_measure(uniform4, pairs):
    f = SimpleFunction.from_values([1, 2, 3, 4], uniform4)
    measure = np.array([0.5, 0.5, 0.0, 0.0])
    result = direct_integrate(f, pairs, uniform4, measure=measure).values[:, 0]
    assert result.tolist() == pytest.approx([1.5, 0])
    left = RefinedSet(4, ((0, 0.0, 0.125),))
    assert direct_integrate(f, pairs, uniform4, E=left, measure=measure).values[0, 0] == pytest.approx(0.25)


def test_direct_integrate_shape_checked(uniform4, pairs):
    with pytest.raises(DimensionError):
        direct_integrate(SimpleFunction(np.ones((3, 1))), pairs, uniform4)
