"""
离散化概率空间：网格（可分 / 原子两种模式）、以块划分表示的子 σ-代数、
以单元内子区间描述的可测集，以及粗细诊断与 σ-代数加细
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .arith import Arith
from .errors import (
    AtomicModeError,
    CellAlignmentError,
    DimensionError,
    InputError,
    NullSetError,
    UnknownCellError,
)

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    SPLITTABLE = 'splittable'
    ATOMIC = 'atomic'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise InputError('不支持的空间模式', repr(value)) from e


class Cell(NamedTuple):
    index: int
    weight: object
    start: object


@dataclass(frozen=True, eq=False)
class Grid:
    """
    有序单元构成的离散概率空间

    可分模式下单元 k 是 [0,1) 中的半开区间 [c_k, c_k + w_k)，集合可以切开单元；
    原子模式下单元不可再分。
    """

    weights: np.ndarray
    mode: Mode = Mode.SPLITTABLE
    arith: Arith = field(default_factory=Arith)
    anchors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=self.arith.dtype)
        if weights.ndim != 1 or weights.size == 0:
            raise InputError('网格至少需要一个单元')
        anchors = self.arith.zeros(weights.size)
        running = self.arith.zero
        for k, w in enumerate(weights):
            if not w > 0:
                raise InputError('单元权重必须为正', f'cell={k} weight={w}')
            anchors[k] = running
            running = running + w
        if not self.arith.close(running, self.arith.one):
            raise InputError('单元权重之和必须为 1', f'total={running}')
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'mode', Mode.parse(self.mode))
        object.__setattr__(self, 'anchors', anchors)

    @property
    def size(self):
        return int(self.weights.size)

    @property
    def splittable(self):
        return self.mode is Mode.SPLITTABLE

    @property
    def cells(self):
        return tuple(Cell(k, self.weights[k], self.anchors[k]) for k in range(self.size))

    def interval(self, k):
        """单元 k 在 [0,1) 中的位置 (起点, 终点)"""
        return self.anchors[k], self.anchors[k] + self.weights[k]


def build_grid(weights, mode=Mode.SPLITTABLE, arith=None):
    """
    由正权重序列构造网格（自动归一化）

    Args:
        weights (Sequence): 正的单元权重
        mode (Mode or str): splittable 或 atomic
        arith (Arith): 数值模式，默认浮点

    Returns:
        Grid: 归一化后的网格
    """
    arith = arith or Arith()
    if weights is None or len(weights) == 0:
        raise InputError('权重序列不能为空')
    values = arith.array(list(weights))
    if values.ndim != 1:
        raise InputError('权重必须是一维序列')
    for k, w in enumerate(values):
        if not w > 0:
            raise InputError('单元权重必须为正', f'cell={k} weight={w}')
    total = values.sum()
    grid = Grid(values / total, Mode.parse(mode), arith)
    logger.debug(f'构造网格：{grid.size} 个单元，模式 {grid.mode.value}，精确={arith.exact}')
    return grid


@dataclass(frozen=True)
class BlockPartition:
    """子 σ-代数：单元到块的满射"""

    block_of: tuple
    block_count: int = None

    def __post_init__(self):
        block_of = tuple(int(b) for b in self.block_of)
        if not block_of:
            raise InputError('块划分不能为空')
        count = max(block_of) + 1 if self.block_count is None else int(self.block_count)
        if any(b < 0 or b >= count for b in block_of):
            raise InputError('块编号越界', f'block_count={count}')
        missing = sorted(set(range(count)) - set(block_of))
        if missing:
            raise InputError('块划分必须是满射，存在空块', f'empty_blocks={missing}')
        object.__setattr__(self, 'block_of', block_of)
        object.__setattr__(self, 'block_count', count)

    @classmethod
    def trivial(cls, size):
        return cls((0,) * size, 1)

    @classmethod
    def discrete(cls, size):
        return cls(tuple(range(size)), size)

    @classmethod
    def from_blocks(cls, blocks, size):
        block_of = [None] * size
        for b, cells in enumerate(blocks):
            for k in cells:
                if not 0 <= k < size:
                    raise UnknownCellError('块中引用了不存在的单元', f'cell={k}')
                if block_of[k] is not None:
                    raise InputError('单元出现在多个块中', f'cell={k}')
                block_of[k] = b
        if any(b is None for b in block_of):
            raise InputError('存在未分配到任何块的单元')
        return cls(tuple(block_of), len(blocks))

    @property
    def size(self):
        return len(self.block_of)

    @cached_property
    def blocks(self):
        members = [[] for _ in range(self.block_count)]
        for k, b in enumerate(self.block_of):
            members[b].append(k)
        return tuple(tuple(cells) for cells in members)

    def check(self, grid):
        if self.size != grid.size:
            raise DimensionError('块划分与网格单元数不一致', f'partition={self.size} grid={grid.size}')

    def block_masses(self, grid):
        self.check(grid)
        return np.array([grid.weights[list(cells)].sum() for cells in self.blocks], dtype=grid.arith.dtype)

    def refines(self, other):
        """self 的每个块是否都包含在 other 的某个块中"""
        return all(len({other.block_of[k] for k in cells}) == 1 for cells in self.blocks)


def _overlap(a, la, b, lb):
    """两个区间 [a, a+la) 与 [b, b+lb) 的交，尽量保留原始长度避免舍入漂移"""
    a_end, b_end = a + la, b + lb
    start = a if a >= b else b
    end = a_end if a_end <= b_end else b_end
    if not end > start:
        return None
    if start == a and end == a_end:
        return a, la
    if start == b and end == b_end:
        return b, lb
    return start, end - start


def _normalize(triples):
    per_cell = {}
    for cell, offset, length in triples:
        if not length > 0:
            continue
        per_cell.setdefault(int(cell), []).append((offset, length))
    out = []
    for cell in sorted(per_cell):
        spans = sorted(per_cell[cell], key=lambda span: span[0])
        cur_start, cur_len = spans[0]
        for start, length in spans[1:]:
            end = cur_start + cur_len
            if start == end:
                cur_len = cur_len + length
            elif start < end:
                new_end = start + length
                if new_end > end:
                    cur_len = new_end - cur_start
            else:
                out.append((cell, cur_start, cur_len))
                cur_start, cur_len = start, length
        out.append((cell, cur_start, cur_len))
    return tuple(out)


@dataclass(frozen=True)
class RefinedSet:
    """
    可测集：每个单元内若干个互不相交的子区间 (cell, offset, length)，offset 相对单元起点

    原子模式下只允许整单元。
    """

    size: int
    intervals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'intervals', _normalize(self.intervals))

    @classmethod
    def empty(cls, size):
        return cls(size, ())

    @classmethod
    def whole(cls, grid):
        return cls(grid.size, tuple((k, grid.arith.zero, grid.weights[k]) for k in range(grid.size)))

    @classmethod
    def from_cells(cls, grid, cells):
        cells = sorted(set(int(k) for k in cells))
        for k in cells:
            if not 0 <= k < grid.size:
                raise UnknownCellError('集合引用了不存在的单元', f'cell={k}')
        return cls(grid.size, tuple((k, grid.arith.zero, grid.weights[k]) for k in cells))

    @cached_property
    def by_cell(self):
        grouped = {}
        for cell, offset, length in self.intervals:
            grouped.setdefault(cell, []).append((offset, length))
        return grouped

    @property
    def cells(self):
        return tuple(sorted(self.by_cell))

    @property
    def is_empty(self):
        return not self.intervals

    def check(self, grid):
        """校验集合与网格相容"""
        if self.size != grid.size:
            raise DimensionError('集合与网格单元数不一致', f'set={self.size} grid={grid.size}')
        for cell, offset, length in self.intervals:
            if not 0 <= cell < grid.size:
                raise UnknownCellError('集合引用了不存在的单元', f'cell={cell}')
            end = offset + length
            if offset < 0 or not grid.arith.within(end, grid.weights[cell]):
                raise InputError('子区间超出单元范围', f'cell={cell} offset={offset} mass={length}')
        if not grid.splittable:
            for cell, spans in self.by_cell.items():
                if len(spans) != 1 or spans[0][0] != 0 or spans[0][1] != grid.weights[cell]:
                    raise CellAlignmentError('原子模式下集合只能由整单元组成', f'cell={cell}')
        return self

    def masses(self, grid):
        out = grid.arith.zeros(grid.size)
        for cell, _, length in self.intervals:
            out[cell] = out[cell] + length
        return out

    def mass(self, grid):
        return self.masses(grid).sum()

    def triples(self):
        return [list(t) for t in self.intervals]

    def union(self, other):
        return RefinedSet(self.size, self.intervals + other.intervals)

    def intersection(self, other):
        out = []
        for cell, spans in self.by_cell.items():
            for a, la in spans:
                for b, lb in other.by_cell.get(cell, ()):
                    ov = _overlap(a, la, b, lb)
                    if ov is not None:
                        out.append((cell, ov[0], ov[1]))
        return RefinedSet(self.size, tuple(out))

    def difference(self, other):
        out = []
        for cell, spans in self.by_cell.items():
            holes = sorted(other.by_cell.get(cell, ()), key=lambda span: span[0])
            for start, length in spans:
                pieces = [(start, length)]
                for h_start, h_len in holes:
                    h_end = h_start + h_len
                    next_pieces = []
                    for p_start, p_len in pieces:
                        p_end = p_start + p_len
                        if h_end <= p_start or h_start >= p_end:
                            next_pieces.append((p_start, p_len))
                            continue
                        if h_start > p_start:
                            next_pieces.append((p_start, h_start - p_start))
                        if h_end < p_end:
                            next_pieces.append((h_end, p_end - h_end))
                    pieces = next_pieces
                out.extend((cell, s, ln) for s, ln in pieces)
        return RefinedSet(self.size, tuple(out))

    def complement(self, grid):
        return RefinedSet.whole(grid).difference(self)

    def restrict_to_cells(self, cells):
        keep = set(cells)
        return RefinedSet(self.size, tuple(t for t in self.intervals if t[0] in keep))

    def aligned_cells(self, grid):
        """被集合完整覆盖的单元"""
        masses = self.masses(grid)
        return tuple(k for k in range(grid.size)
                     if masses[k] > 0 and grid.arith.close(masses[k], grid.weights[k]))

    def is_cell_aligned(self, grid):
        masses = self.masses(grid)
        for k in range(grid.size):
            if masses[k] > 0 and not grid.arith.close(masses[k], grid.weights[k]) \
                    and not grid.arith.close(masses[k], grid.arith.zero):
                return False
        return True

    def issubset(self, other, grid):
        return grid.arith.close(self.difference(other).mass(grid), grid.arith.zero)

    def left_fraction(self, fraction):
        """每个单元内取该集合质量的左侧 fraction 部分"""
        out = []
        for cell, spans in self.by_cell.items():
            remaining = sum((ln for _, ln in spans[1:]), spans[0][1]) * fraction
            for start, length in spans:
                if not remaining > 0:
                    break
                take = length if length <= remaining else remaining
                out.append((cell, start, take))
                remaining = remaining - take
        return RefinedSet(self.size, tuple(out))

    def boundaries(self):
        """每个单元内的区间端点，供 split_cells 使用"""
        cuts = {}
        for cell, offset, length in self.intervals:
            cuts.setdefault(cell, set()).update((offset, offset + length))
        return cuts


@dataclass(frozen=True, eq=False)
class CellSplit:
    """把网格单元细分后的映射：新单元 -> 原单元及其在原单元内的起点"""

    source: Grid
    grid: Grid
    parent: tuple
    start: tuple

    def lift_values(self, values):
        return np.asarray(values)[list(self.parent)]

    def lift_partition(self, C):
        C.check(self.source)
        return BlockPartition(tuple(C.block_of[k] for k in self.parent), C.block_count)

    def lift_set(self, E):
        E.check(self.source)
        out = []
        for j, (k, s) in enumerate(zip(self.parent, self.start)):
            w = self.grid.weights[j]
            for offset, length in E.by_cell.get(k, ()):
                ov = _overlap(offset, length, s, w)
                if ov is not None:
                    out.append((j, ov[0] - s, ov[1]))
        return RefinedSet(self.grid.size, tuple(out))

    def project_set(self, F):
        return RefinedSet(self.source.size,
                          tuple((self.parent[j], self.start[j] + o, ln) for j, o, ln in F.intervals))

    def children(self, k):
        return tuple(j for j, p in enumerate(self.parent) if p == k)


def split_cells(grid, cuts):
    """
    在给定的单元内偏移处切开单元（仅可分模式）

    Args:
        grid (Grid): 可分网格
        cuts (Mapping[int, Iterable]): 单元 -> 单元内切点偏移

    Returns:
        CellSplit: 新网格及映射
    """
    if not grid.splittable:
        raise AtomicModeError('原子模式的单元不可切分')
    arith = grid.arith
    weights, parent, start = [], [], []
    for k in range(grid.size):
        w = grid.weights[k]
        points = []
        for c in sorted(cuts.get(k, ())):
            if c < 0 or not arith.within(c, w):
                raise InputError('切点超出单元范围', f'cell={k} cut={c}')
            last = points[-1] if points else arith.zero
            if arith.is_zero(c - last) or arith.is_zero(w - c):
                continue
            points.append(c)
        bounds = [arith.zero] + points + [w]
        for a, b in zip(bounds[:-1], bounds[1:]):
            weights.append(b - a)
            parent.append(k)
            start.append(a)
    fine = Grid(np.array(weights, dtype=arith.dtype), grid.mode, arith)
    logger.debug(f'单元切分：{grid.size} -> {fine.size} 个单元')
    return CellSplit(grid, fine, tuple(parent), tuple(start))


def cuts_of(*sets):
    """合并多个集合的区间端点"""
    cuts = {}
    for E in sets:
        for cell, points in E.boundaries().items():
            cuts.setdefault(cell, set()).update(points)
    return cuts


def halve_cells(grid):
    """每个单元对半分为两个单元（两种模式均可，得到更细的空间）"""
    arith = grid.arith
    half = arith.half()
    weights, parent, start = [], [], []
    for k in range(grid.size):
        w = grid.weights[k]
        weights.extend([w * half, w - w * half])
        parent.extend([k, k])
        start.extend([arith.zero, w * half])
    fine = Grid(np.array(weights, dtype=arith.dtype), grid.mode, arith)
    return CellSplit(grid, fine, tuple(parent), tuple(start))


def refine_partition(C, E, grid):
    """
    σ(𝒞 ∪ {E}) 对应的块划分：每个块 b 拆为 b∩E 与 b∩Ē，去掉空的部分

    Args:
        C (BlockPartition): 原划分
        E (RefinedSet): 与单元对齐的集合
        grid (Grid): 网格

    Returns:
        BlockPartition: 加细后的划分
    """
    C.check(grid)
    E.check(grid)
    if not E.is_cell_aligned(grid):
        raise CellAlignmentError('refine_partition 需要与单元对齐的集合，请先调用 split_cells')
    inside = set(E.aligned_cells(grid))
    block_of = [None] * grid.size
    count = 0
    for cells in C.blocks:
        for part in ([k for k in cells if k in inside], [k for k in cells if k not in inside]):
            if not part:
                continue
            for k in part:
                block_of[k] = count
            count += 1
    return BlockPartition(tuple(block_of), count)


@dataclass(frozen=True, eq=False)
class CoarsenessVerdict:
    is_coarser: bool
    witness: RefinedSet
    queried: RefinedSet
    conditional: np.ndarray
    reference: np.ndarray


def coarseness_check(grid, C, E=None):
    """
    μ-更粗诊断

    可分模式：对查询集合 E（默认 Ω）取每个单元内 E 的左半部分 E₀，
    它在每个与 E 相交的块上满足 μ(E₀|𝒞) = μ(E|𝒞)/2，严格介于 0 与 μ(E|𝒞) 之间。
    原子模式：返回 E 中权重最小的单元作为原子见证，结论为否。

    Returns:
        CoarsenessVerdict: 结论与见证
    """
    from .condexp import ce_measure

    C.check(grid)
    E = RefinedSet.whole(grid) if E is None else E.check(grid)
    if not E.mass(grid) > 0:
        raise NullSetError('查询集合的测度必须为正')
    if grid.splittable:
        witness = E.left_fraction(grid.arith.half())
        is_coarser = True
    else:
        cells = E.aligned_cells(grid)
        atom = min(cells, key=lambda k: (grid.weights[k], k))
        witness = RefinedSet.from_cells(grid, [atom])
        is_coarser = False
    conditional = ce_measure(witness, C, grid).values[:, 0]
    reference = ce_measure(E, C, grid).values[:, 0]
    logger.info(f'粗细诊断完成：is_coarser={is_coarser}')
    return CoarsenessVerdict(is_coarser, witness, E, conditional, reference)


def validate_witness(grid, C, E, E0):
    """
    校验用户给出的见证：E₀ ⊆ E，且存在某个块 b 使 0 < μ(E₀∩b) < μ(E∩b)
    """
    C.check(grid)
    E.check(grid)
    E0.check(grid)
    if not E0.issubset(E, grid):
        return False
    inner = E0.masses(grid)
    outer = E.masses(grid)
    margin = grid.arith.zero if grid.arith.exact else grid.arith.tol
    for cells in C.blocks:
        m0 = inner[list(cells)].sum()
        m = outer[list(cells)].sum()
        if m0 > margin and m - m0 > margin:
            return True
    return False
