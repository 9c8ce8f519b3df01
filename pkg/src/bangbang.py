"""
条件期望的 bang-bang 流水线：Carathéodory 分解 → Lyapunov 划分 → 按片段粘合极点选择
"""
import logging
from dataclasses import dataclass

import numpy as np

from .condexp import SimpleFunction, cond_exp, weighted_ce_measure
from .lyapunov import lyapunov_partition, partition_by_piece_moments
from .polytope import PolytopeMap, decompose_selection, extreme_indices
from .spaces import BlockPartition, CellSplit, cuts_of, split_cells

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExtremeSelection:
    """
    片段 i 上取值 values[k, i]（单元 k 处的极点），provenance[k, i] 为该极点在顶点列表中的下标

    片段编号与 Carathéodory 槽位一一对应，空片段保留。
    """

    pieces: tuple
    values: np.ndarray
    provenance: np.ndarray

    def conditional(self, C, grid):
        """E(f|𝒞) = Σ_i E(h_i χ_{B_i}|𝒞)"""
        total = None
        for i, piece in enumerate(self.pieces):
            part = weighted_ce_measure(SimpleFunction(self.values[:, i, :]), piece, C, grid).values
            total = part if total is None else total + part
        return total

    def to_function(self, grid):
        """在片段边界处切分网格，返回 (CellSplit, 细网格上的简单函数)"""
        if grid.splittable:
            split = split_cells(grid, cuts_of(*self.pieces))
        else:
            split = CellSplit(grid, grid, tuple(range(grid.size)), (grid.arith.zero,) * grid.size)
        fine = split.grid
        values = grid.arith.zeros((fine.size, self.values.shape[2]))
        for i, piece in enumerate(self.pieces):
            for j in split.lift_set(piece).aligned_cells(fine):
                values[j] = self.values[split.parent[j], i]
        return split, SimpleFunction(values)


@dataclass(frozen=True, eq=False)
class BangBangReport:
    target: np.ndarray
    achieved: np.ndarray
    deviation: object
    deviation_bound: object
    partition: object
    decomposition: object


def bang_bang(T, h, C, grid, diagonal_only=False):
    """
    给定多面体映射 T 的选择 h，构造极点选择 f 使 E(f|𝒞) = E(h|𝒞)

    默认使用完整矩 (h_1, …, h_{n+1})，保证所有 (i, j) 等式成立；
    diagonal_only 时片段 i 只匹配 h_i（D = n），原子模式下界更小。

    输出是确定的：片段 i 取分解的第 i 个槽位，槽位按 T(k) 中极点的给定顺序排列；
    每个单元内片段按序号从左到右堆叠，所以对称情形下第一个极点占据各单元的左半部分。

    Args:
        T (PolytopeMap): 多面体映射
        h (SimpleFunction): T 的选择
        C (BlockPartition): 子 σ-代数
        grid (Grid): 网格
        diagonal_only (bool): 只匹配对角矩

    Returns:
        tuple: (ExtremeSelection, BangBangReport)
    """
    arith = grid.arith
    decomposition = decompose_selection(T, h, grid)
    alpha = decomposition.alpha()
    m, p, n = decomposition.points.shape
    if diagonal_only:
        partition = partition_by_piece_moments(decomposition.points, alpha, C, grid)
    else:
        moments = SimpleFunction(decomposition.points.reshape(m, p * n))
        partition = lyapunov_partition(moments, alpha, C, grid)
    selection = ExtremeSelection(partition.pieces, decomposition.points, decomposition.support)

    target = cond_exp(h, C, grid).values
    achieved = selection.conditional(C, grid)
    deviation = arith.max_abs(achieved - target)
    deviation_bound = p * partition.residual_bound + decomposition.residual
    logger.info(f'bang-bang 完成：{p} 个片段，偏差 {float(deviation):.3e}，界 {float(deviation_bound):.3e}')
    report = BangBangReport(target, achieved, deviation, deviation_bound, partition, decomposition)
    return selection, report


def pointset_bang_bang(P, s, C, grid, diagonal_only=False):
    """
    点集版本：对 co(P) 做 bang-bang，输出值落在 ext(co(P)) ⊆ P 中

    provenance 指向 P 中的原始下标。
    """
    arith = grid.arith
    P.check(grid)
    ext = [extreme_indices(points, arith) for points in P.vertices]
    hull = PolytopeMap(P.dim, tuple(points[idx] for points, idx in zip(P.vertices, ext)))
    selection, report = bang_bang(hull, s, C, grid, diagonal_only)
    provenance = np.array([[ext[k][j] for j in row] for k, row in enumerate(selection.provenance)], dtype=int)
    return ExtremeSelection(selection.pieces, selection.values, provenance), report


def integral_bang_bang(T, h, grid, diagonal_only=False):
    """平凡 𝒞（单个块）时的 bang-bang：∫ f dμ = ∫ h dμ"""
    return bang_bang(T, h, BlockPartition.trivial(grid.size), grid, diagonal_only)
