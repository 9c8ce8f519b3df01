"""
有限行动集上的 Young 测度纯化，以及有限被积函数族上的稠密性演示
"""
import logging
from dataclasses import dataclass

import numpy as np

from .bangbang import bang_bang
from .condexp import SimpleFunction, cond_exp, weighted_ce_measure
from .errors import ActionMatchError, DimensionError, HullMembershipError, InputError, WeightError
from .polytope import PolytopeMap, in_hull
from .spaces import CellSplit, RefinedSet, cuts_of, split_cells

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise InputError('行动集不能为空')
        if len(set(labels)) != len(labels):
            raise InputError('行动标签不能重复', f'labels={list(labels)}')
        object.__setattr__(self, 'labels', labels)

    def __len__(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError as e:
            raise InputError('未知的行动标签', repr(label)) from e


@dataclass(frozen=True, eq=False)
class YoungMeasure:
    """每个单元上行动集的概率向量，probabilities 形状为 (m, |A|)"""

    actions: ActionSet
    probabilities: np.ndarray

    @classmethod
    def from_values(cls, actions, probabilities, grid):
        arith = grid.arith
        probs = arith.array(probabilities)
        if probs.ndim != 2 or probs.shape != (grid.size, len(actions)):
            raise DimensionError('Young 测度形状必须为 (单元数, 行动数)',
                                 f'shape={probs.shape} expected={(grid.size, len(actions))}')
        if any(v < 0 for v in probs.flat):
            raise WeightError('Young 测度存在负概率')
        for k in range(grid.size):
            if not arith.close(probs[k].sum(), arith.one):
                raise WeightError('Young 测度每个单元的概率和必须为 1', f'cell={k}')
        return cls(actions, probs)

    @classmethod
    def dirac(cls, actions, choices, grid):
        probs = grid.arith.zeros((grid.size, len(actions)))
        for k, label in enumerate(choices):
            probs[k, actions.index(label)] = grid.arith.one
        return cls(actions, probs)

    def support(self, k):
        return [a for a in range(len(self.actions)) if self.probabilities[k, a] > 0]


@dataclass(frozen=True, eq=False)
class IntegrandFamily:
    """V(k, a) ∈ R^n，values 形状为 (m, |A|, n)"""

    values: np.ndarray

    @classmethod
    def from_values(cls, values, grid, actions):
        arr = grid.arith.array(values)
        if arr.ndim == 2:
            arr = arr.reshape(arr.shape + (1,))
        if arr.ndim != 3 or arr.shape[:2] != (grid.size, len(actions)):
            raise DimensionError('被积函数族形状必须为 (单元数, 行动数, 维数)',
                                 f'shape={arr.shape} expected={(grid.size, len(actions))}')
        if arr.shape[2] == 0:
            raise InputError('被积函数族不能为空')
        return cls(arr)

    @property
    def dim(self):
        return self.values.shape[2]

    def action(self, a):
        return SimpleFunction(self.values[:, a, :])


@dataclass(frozen=True, eq=False)
class PureStrategy:
    """纯策略：每个行动对应一个 RefinedSet，各集合构成 Ω 的划分"""

    actions: ActionSet
    pieces: tuple

    def conditional(self, V, C, grid):
        """E(f.V|𝒞)"""
        total = grid.arith.zeros((C.block_count, V.dim))
        for a, piece in enumerate(self.pieces):
            if piece.is_empty:
                continue
            total = total + weighted_ce_measure(V.action(a), piece, C, grid).values
        return total

    def assignments(self):
        """按 (单元, 偏移) 排序的 (cell, offset, length, label) 列表"""
        rows = [(cell, offset, length, self.actions.labels[a])
                for a, piece in enumerate(self.pieces) for cell, offset, length in piece.intervals]
        return sorted(rows, key=lambda row: (row[0], row[1]))


@dataclass(frozen=True, eq=False)
class PurifyReport:
    mixed: np.ndarray
    pure: np.ndarray
    deviation: object
    deviation_bound: object
    bang_bang: object


def _check_shapes(delta, V, grid):
    if delta.probabilities.shape[0] != grid.size or V.values.shape[0] != grid.size:
        raise DimensionError('Young 测度、被积函数族与网格单元数不一致')
    if V.values.shape[1] != len(delta.actions):
        raise DimensionError('被积函数族的行动数与 Young 测度不一致',
                             f'family={V.values.shape[1]} actions={len(delta.actions)}')


def barycenter(delta, V, grid):
    """
    p̄(k) = Σ_a δ(k,a)·V(k,a)，并断言 p̄(k) 落在支撑多面体内
    """
    _check_shapes(delta, V, grid)
    arith = grid.arith
    values = arith.zeros((grid.size, V.dim))
    for k in range(grid.size):
        values[k] = delta.probabilities[k] @ V.values[k]
        inside, _, direction = in_hull(values[k], V.values[k, delta.support(k)], arith)
        if not inside:
            raise HullMembershipError('重心不在支撑多面体内', cell=k, point=values[k], direction=direction)
    return SimpleFunction(values)


def support_polytope(delta, V, grid):
    """每个单元的顶点集 {V(k,a) : δ(k,a) > 0}"""
    _check_shapes(delta, V, grid)
    vertices = []
    for k in range(grid.size):
        support = delta.support(k)
        if not support:
            raise WeightError('Young 测度在单元上没有支撑', f'cell={k}')
        vertices.append(V.values[k, support])
    return PolytopeMap(V.dim, tuple(vertices))


def _match_action(delta, V, k, point, arith):
    for a in delta.support(k):
        if arith.close(V.values[k, a], point):
            return a
    return None


def purify(delta, V, C, grid, diagonal_only=False):
    """
    纯化：构造纯策略 f，f(ω) ∈ supp(δ_ω)，且 E(δ.V|𝒞) = E(f.V|𝒞)

    先取重心 p̄ 与支撑多面体 T，对 (T, p̄) 做 bang-bang，再在每个片段与单元上
    选取 V 值与片段极点一致且 δ 质量为正的行动（下标最小者优先）。

    Returns:
        tuple: (PureStrategy, PurifyReport)
    """
    arith = grid.arith
    C.check(grid)
    pbar = barycenter(delta, V, grid)
    T = support_polytope(delta, V, grid)
    selection, bb_report = bang_bang(T, pbar, C, grid, diagonal_only)

    triples = [[] for _ in delta.actions.labels]
    for i, piece in enumerate(selection.pieces):
        for cell, spans in piece.by_cell.items():
            a = _match_action(delta, V, cell, selection.values[cell, i], arith)
            if a is None:
                raise ActionMatchError('片段极点找不到对应的受支撑行动', f'cell={cell} piece={i}')
            triples[a].extend((cell, offset, length) for offset, length in spans)
    strategy = PureStrategy(delta.actions, tuple(RefinedSet(grid.size, tuple(t)) for t in triples))

    mixed = cond_exp(pbar, C, grid).values
    pure = strategy.conditional(V, C, grid)
    deviation = arith.max_abs(pure - mixed)
    logger.info(f'纯化完成：{len(delta.actions)} 个行动，偏差 {float(deviation):.3e}')
    report = PurifyReport(mixed, pure, deviation, bb_report.deviation_bound, bb_report)
    return strategy, report


def density_step(delta, phis, C, grid, diagonal_only=False):
    """
    有限被积函数族 {φ_1, …, φ_n} 上的一步稠密性：返回的 Dirac-Young 测度在每个
    E(·.φ_i|𝒞) 上与 δ 一致
    """
    if phis.dim == 0:
        raise InputError('被积函数族不能为空')
    return purify(delta, phis, C, grid, diagonal_only)


def to_dirac(strategy, grid):
    """
    纯策略对应的 Dirac-Young 测度：在片段边界处切分网格，每个细单元只有一个行动

    Returns:
        tuple: (CellSplit, YoungMeasure)
    """
    if grid.splittable:
        split = split_cells(grid, cuts_of(*strategy.pieces))
    else:
        split = CellSplit(grid, grid, tuple(range(grid.size)), (grid.arith.zero,) * grid.size)
    fine = split.grid
    probs = grid.arith.zeros((fine.size, len(strategy.actions)))
    for a, piece in enumerate(strategy.pieces):
        for j in split.lift_set(piece).aligned_cells(fine):
            probs[j, a] = grid.arith.one
    return split, YoungMeasure(strategy.actions, probs)
