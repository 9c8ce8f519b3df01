"""
有限维凸几何：有限点集的极点、凸包成员判定，以及选择函数的 Carathéodory 分解
"""
import logging
from dataclasses import dataclass

import numpy as np

from .condexp import SimpleFunction
from .errors import DimensionError, HullMembershipError, InputError
from .linalg import convex_weights, lifted_matrix, reduce_support

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PolytopeMap:
    """逐单元的顶点集（V-表示），vertices[k] 形状为 (s_k, n)"""

    dim: int
    vertices: tuple

    @classmethod
    def from_lists(cls, vertex_lists, grid):
        if len(vertex_lists) != grid.size:
            raise DimensionError('多面体映射的单元数与网格不一致',
                                 f'polytope={len(vertex_lists)} grid={grid.size}')
        per_cell = []
        dim = None
        for k, points in enumerate(vertex_lists):
            arr = grid.arith.array(points)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            if arr.ndim != 2 or arr.shape[0] == 0:
                raise InputError('每个单元至少需要一个顶点', f'cell={k}')
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise DimensionError('各单元顶点维数不一致', f'cell={k} dim={arr.shape[1]} expected={dim}')
            per_cell.append(arr)
        return cls(dim, tuple(per_cell))

    @property
    def size(self):
        return len(self.vertices)

    def check(self, grid):
        if self.size != grid.size:
            raise DimensionError('多面体映射与网格单元数不一致', f'polytope={self.size} grid={grid.size}')
        return self


@dataclass(frozen=True, eq=False)
class CaratheodoryResult:
    weights: np.ndarray
    support: tuple
    points: np.ndarray


@dataclass(frozen=True, eq=False)
class CaratheodoryDecomposition:
    """
    逐单元分解，统一为 n+1 个槽位

    weights (m, n+1)、points (m, n+1, n)、support (m, n+1) 为顶点下标；
    不足 n+1 个时以权重 0 补齐，补齐槽位复用第一个支撑顶点。
    """

    weights: np.ndarray
    points: np.ndarray
    support: np.ndarray
    support_size: tuple
    residual: object

    @property
    def slots(self):
        return self.weights.shape[1]

    def alpha(self):
        return SimpleFunction(self.weights)

    def slot(self, i):
        return SimpleFunction(self.points[:, i, :])


def _unique_indices(points):
    seen = set()
    keep = []
    for i, row in enumerate(points):
        key = tuple(row)
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    return keep


def extreme_indices(vertices, arith):
    """
    极点在输入中的下标（去掉完全重复的点后，保留不能由其余点凸组合表示的点）
    """
    points = np.asarray(vertices)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InputError('点集不能为空')
    unique = _unique_indices(points)
    if len(unique) == 1:
        return unique
    keep = []
    for i in unique:
        others = [j for j in unique if j != i]
        weights, _ = convex_weights(points[others], points[i], arith)
        if weights is None:
            keep.append(i)
    return keep


def extreme_points(vertices, arith):
    """有限点集的极点"""
    points = np.asarray(vertices)
    return points[extreme_indices(points, arith)]


def in_hull(point, vertices, arith):
    """
    判定 point 是否在 vertices 的凸包内

    Returns:
        tuple: (是否在凸包内, 凸组合权重, 分离方向)
    """
    weights, direction = convex_weights(np.asarray(vertices), np.asarray(point), arith)
    return weights is not None, weights, direction


def caratheodory_decompose(point, vertices, n=None, arith=None):
    """
    把凸包内的点写成至多 n+1 个极点的凸组合

    先求任一可行凸组合，再沿 [V; 1] 的核方向做比值检验，
    直到支撑规模不超过 n+1。

    Args:
        point (np.ndarray): (n,) 目标点
        vertices (np.ndarray): (s, n) 顶点
        n (int): 维数，默认取顶点维数
        arith (Arith): 数值模式

    Returns:
        CaratheodoryResult: 正权重、支撑顶点下标（对应输入顺序）与对应顶点
    """
    vertices = np.asarray(vertices)
    point = np.asarray(point)
    n = vertices.shape[1] if n is None else n
    if point.shape != (vertices.shape[1],):
        raise DimensionError('点与顶点的维数不一致', f'point={point.shape} vertices={vertices.shape}')
    ext = extreme_indices(vertices, arith)
    V = vertices[ext]
    weights, direction = convex_weights(V, point, arith)
    if weights is None:
        raise HullMembershipError('点不在顶点集的凸包内', point=point, direction=direction)
    x = reduce_support(lifted_matrix(V, arith), weights, arith, max_support=n + 1)
    floor = 0 if arith.exact else arith.pivot_tol
    positions = [j for j in range(len(ext)) if x[j] > floor]
    w = np.array([x[j] for j in positions], dtype=arith.dtype)
    if not arith.exact:
        w = w / w.sum()
    chosen = V[positions]
    if not arith.close(w @ chosen, point):
        raise HullMembershipError('凸组合重构误差超出容差', point=point)
    return CaratheodoryResult(w, tuple(ext[j] for j in positions), chosen)


def decompose_selection(T, s, grid):
    """
    逐单元 Carathéodory 分解，统一补齐到 n+1 个槽位

    Args:
        T (PolytopeMap): 多面体映射
        s (SimpleFunction): T 的选择
        grid (Grid): 网格

    Returns:
        CaratheodoryDecomposition: 分解结果
    """
    T.check(grid)
    s.check(grid)
    if s.dim != T.dim:
        raise DimensionError('选择函数与多面体维数不一致', f'selection={s.dim} polytope={T.dim}')
    arith = grid.arith
    n = T.dim
    m = grid.size
    weights = arith.zeros((m, n + 1))
    points = arith.zeros((m, n + 1, n))
    support = np.zeros((m, n + 1), dtype=int)
    sizes = []
    residual = arith.zero
    for k in range(m):
        try:
            result = caratheodory_decompose(s.values[k], T.vertices[k], n, arith)
        except HullMembershipError as e:
            raise HullMembershipError(f'单元 {k} 的选择不在多面体内', cell=k, point=s.values[k],
                                      direction=e.direction) from e
        size = len(result.support)
        sizes.append(size)
        for i in range(n + 1):
            src = i if i < size else 0
            weights[k, i] = result.weights[i] if i < size else arith.zero
            points[k, i] = result.points[src]
            support[k, i] = result.support[src]
        err = arith.max_abs(weights[k] @ points[k] - s.values[k])
        residual = max(residual, err)
    logger.debug(f'选择分解完成：{m} 个单元，最大支撑 {max(sizes)}，重构误差 {float(residual):.3e}')
    return CaratheodoryDecomposition(weights, points, support, tuple(sizes), residual)
