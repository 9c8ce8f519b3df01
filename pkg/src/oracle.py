"""
独立的暴力验证器：原子划分穷举与直接积分

直接积分从原始区间质量重新计算条件期望，求和顺序与 condexp 不同（逆序 + fsum），
供 verify 命令与性质测试使用。
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

import config
from .condexp import BlockFunction, SimpleFunction
from .errors import BudgetExceededError, DimensionError, WeightError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnumerationResult:
    residual: object
    assignment: tuple
    evaluated: int


def _total(values, exact):
    values = list(values)
    if exact:
        return sum(values, 0)
    return math.fsum(float(v) for v in values)


def enumerate_atomic_partitions(grid, p, h, alpha, C, budget=None):
    """
    穷举所有单元到片段的分配，返回最小的最大残差及其分配

    单元视为原子；残差按块独立，因此逐块穷举后拼接。

    Args:
        grid (Grid): 网格
        p (int): 片段数
        h (SimpleFunction): (m, D) 矩函数
        alpha (SimpleFunction): (m, p) 权重
        C (BlockPartition): 子 σ-代数
        budget (int): 允许的 p^m 上限，默认取 config.ENUMERATION_BUDGET

    Returns:
        EnumerationResult: 最优残差、分配（每个单元的片段号）与评估次数
    """
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    m = grid.size
    if p ** m > budget:
        raise BudgetExceededError('穷举规模超出预算', f'p^m={p ** m} budget={budget}')
    C.check(grid)
    h.check(grid)
    alpha.check(grid)
    if alpha.dim != p:
        raise DimensionError('α 的片段数与 p 不一致', f'alpha={alpha.dim} p={p}')
    if any(v < 0 for v in alpha.values.flat):
        raise WeightError('α 存在负值')
    exact = grid.arith.exact
    w = grid.weights
    D = h.dim

    best_overall = grid.arith.zero
    assignment = [0] * m
    evaluated = 0
    for cells in C.blocks:
        block_mass = _total((w[k] for k in reversed(cells)), exact)
        targets = [[_total((alpha.values[k, i] * w[k] * h.values[k, j] for k in cells), exact)
                    for j in range(D)] for i in range(p)]
        best = None
        best_choice = None
        for choice in itertools.product(range(p), repeat=len(cells)):
            evaluated += 1
            worst = grid.arith.zero
            for i in range(p):
                for j in range(D):
                    got = _total((w[k] * h.values[k, j] for k, c in zip(cells, choice) if c == i), exact)
                    worst = max(worst, abs(got - targets[i][j]) / block_mass)
            if best is None or worst < best:
                best, best_choice = worst, choice
        for k, c in zip(cells, best_choice):
            assignment[k] = c
        best_overall = max(best_overall, best)
    logger.debug(f'穷举完成：评估 {evaluated} 个分配，最优残差 {float(best_overall):.6g}')
    return EnumerationResult(best_overall, tuple(assignment), evaluated)


def _cell_masses(grid, E, measure):
    weights = grid.weights if measure is None else measure
    if E is None:
        return {k: weights[k] for k in range(grid.size)}
    masses = {}
    for cell, _, length in reversed(E.intervals):
        scaled = length if measure is None else length * measure[cell] / grid.weights[cell]
        masses[cell] = masses.get(cell, 0) + scaled
    return masses


def direct_integrate(f, C, grid, E=None, measure=None):
    """
    直接计算 E(f χ_E|𝒞)，可选地换用另一个单元测度 measure

    分母为零（该测度下的零测度块）时结果记为 0。
    """
    values = np.asarray(f.values)
    if values.shape[0] != grid.size:
        raise DimensionError('函数与网格单元数不一致')
    exact = grid.arith.exact
    weights = grid.weights if measure is None else measure
    masses = _cell_masses(grid, E, measure)
    out = grid.arith.zeros((C.block_count, values.shape[1]))
    for b, cells in enumerate(C.blocks):
        denom = _total((weights[k] for k in reversed(cells)), exact)
        if denom == 0:
            continue
        for j in range(values.shape[1]):
            num = _total((masses.get(k, 0) * values[k, j] for k in reversed(cells)), exact)
            out[b, j] = num / denom
    return BlockFunction(out)


def direct_integrate_selection(selection, C, grid):
    """极点选择的 E(f|𝒞)"""
    total = grid.arith.zeros((C.block_count, selection.values.shape[2]))
    for i, piece in enumerate(selection.pieces):
        part = direct_integrate(SimpleFunction(selection.values[:, i, :]), C, grid, E=piece)
        total = total + part.values
    return BlockFunction(total)


def direct_integrate_strategy(strategy, V, C, grid):
    """纯策略的 E(f.V|𝒞)"""
    total = grid.arith.zeros((C.block_count, V.dim))
    for a, piece in enumerate(strategy.pieces):
        part = direct_integrate(SimpleFunction(V.values[:, a, :]), C, grid, E=piece)
        total = total + part.values
    return BlockFunction(total)
