"""
简单函数上的条件期望算子，以及条件期望向量测度 G_𝒞 与 fG_𝒞
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """逐单元取常值的 R^d 值函数，values 形状为 (m, d)"""

    values: np.ndarray

    @classmethod
    def from_values(cls, values, grid):
        arr = grid.arith.array(values)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] == 0:
            raise DimensionError('函数取值必须是 (单元数, 维数) 的二维数组', f'shape={arr.shape}')
        if arr.shape[0] != grid.size:
            raise DimensionError('函数取值的单元数与网格不一致', f'function={arr.shape[0]} grid={grid.size}')
        return cls(arr)

    @classmethod
    def constant(cls, value, grid, dim=1):
        return cls(grid.arith.full((grid.size, dim), value))

    @property
    def size(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    def column(self, j):
        return SimpleFunction(self.values[:, j:j + 1])

    def times(self, other):
        """逐单元乘积，标量函数可与向量函数相乘"""
        if self.dim != 1 and other.dim != 1 and self.dim != other.dim:
            raise DimensionError('函数维数不匹配', f'{self.dim} vs {other.dim}')
        return SimpleFunction(self.values * other.values)

    def check(self, grid):
        if self.size != grid.size:
            raise DimensionError('函数与网格单元数不一致', f'function={self.size} grid={grid.size}')
        return self


@dataclass(frozen=True, eq=False)
class BlockFunction:
    """𝒞-可测简单函数：每个块一个 R^d 向量，values 形状为 (B, d)"""

    values: np.ndarray

    @property
    def dim(self):
        return self.values.shape[1]

    def lift(self, C):
        if self.values.shape[0] != C.block_count:
            raise DimensionError('块函数与块划分的块数不一致',
                                 f'function={self.values.shape[0]} blocks={C.block_count}')
        return SimpleFunction(self.values[list(C.block_of)])


def lift(F, C):
    """把块函数提升为单元上的简单函数"""
    return F.lift(C)


def _block_average(cell_values, C, grid):
    """cell_values 为 (m, d) 的逐单元质量加权量，返回按块求和后除以块质量"""
    masses = C.block_masses(grid)
    out = grid.arith.zeros((C.block_count, cell_values.shape[1]))
    for b, cells in enumerate(C.blocks):
        out[b] = cell_values[list(cells)].sum(axis=0) / masses[b]
    return BlockFunction(out)


def cond_exp(f, C, grid):
    """
    条件期望 E(f|𝒞)：每个块上的加权平均

    Args:
        f (SimpleFunction): 网格上的函数
        C (BlockPartition): 子 σ-代数
        grid (Grid): 网格

    Returns:
        BlockFunction: 每块的条件期望
    """
    C.check(grid)
    f.check(grid)
    return _block_average(grid.weights[:, None] * f.values, C, grid)


def ce_measure(E, C, grid):
    """G_𝒞(E) = E(χ_E|𝒞)，每块取 μ(E∩b)/μ(b)"""
    C.check(grid)
    E.check(grid)
    return _block_average(E.masses(grid)[:, None], C, grid)


def weighted_ce_measure(f, E, C, grid):
    """fG_𝒞(E) = E(fχ_E|𝒞)，子单元质量乘以 f 在该单元上的常值"""
    C.check(grid)
    E.check(grid)
    f.check(grid)
    return _block_average(E.masses(grid)[:, None] * f.values, C, grid)


def integrate_against(g, f, E, C, grid):
    """
    ∫_E g dF_𝒞，按 g 的水平集经由测度计算：Σ_v v·F_𝒞(E ∩ {g = v})

    结果应与 weighted_ce_measure(g⊙f, E) 一致。
    """
    if g.dim != 1:
        raise InputError('被积函数 g 必须是标量函数', f'dim={g.dim}')
    g.check(grid)
    levels = {}
    for k, v in enumerate(g.values[:, 0]):
        levels.setdefault(v, []).append(k)
    out = grid.arith.zeros((C.block_count, f.dim))
    for v, cells in levels.items():
        if v == 0:
            continue
        part = weighted_ce_measure(f, E.restrict_to_cells(cells), C, grid)
        out = out + v * part.values
    return BlockFunction(out)


def is_null(f, E, C, grid):
    """E 是否为 fG_𝒞-零集：f 在 E 有质量的每个单元上为零"""
    C.check(grid)
    f.check(grid)
    masses = E.check(grid).masses(grid)
    for k in range(grid.size):
        if masses[k] > 0 and not grid.arith.close(f.values[k], grid.arith.zero):
            return False
    return True
