"""
有限维线性代数工具：行化简、核向量、支撑约简（核主元 + 比值检验）以及凸组合可行性
浮点模式使用部分主元，精确模式使用首个非零主元
"""
import logging
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog, nnls

logger = logging.getLogger(__name__)


def _scale(M):
    if M.size == 0:
        return 1.0
    return max(1.0, float(np.abs(M).max()))


def row_reduce(M, arith):
    """
    化为行最简形

    Args:
        M (np.ndarray): 二维矩阵（不会被修改）
        arith (Arith): 数值模式

    Returns:
        tuple: (R, pivots)，pivots 为 (行, 列) 列表
    """
    R = np.array(M, dtype=arith.dtype, copy=True)
    rows, cols = R.shape
    scale = _scale(R) if not arith.exact else 1.0
    pivots = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        if arith.exact:
            sel = next((i for i in range(row, rows) if R[i, col] != 0), None)
        else:
            sel = row + int(np.argmax(np.abs(R[row:, col])))
            if arith.is_zero(R[sel, col], scale):
                sel = None
        if sel is None:
            continue
        if sel != row:
            R[[row, sel]] = R[[sel, row]]
        R[row] = R[row] / R[row, col]
        factors = R[:, col].copy()
        factors[row] = 0
        others = (factors != 0).astype(bool)
        if others.any():
            R[others] = R[others] - np.outer(factors[others], R[row])
        if not arith.exact:
            R[np.abs(R) <= arith.pivot_tol * scale] = 0.0
        pivots.append((row, col))
        row += 1
    return R, pivots


def kernel_vector(M, arith):
    """
    返回 M 的一个非零核向量；列满秩时返回 None
    """
    rows, cols = M.shape
    if cols == 0:
        return None
    if rows == 0:
        z = arith.zeros(cols)
        z[0] = arith.one
        return z
    R, pivots = row_reduce(M, arith)
    pivot_cols = {c for _, c in pivots}
    free = next((c for c in range(cols) if c not in pivot_cols), None)
    if free is None:
        return None
    z = arith.zeros(cols)
    z[free] = arith.one
    for r, c in pivots:
        z[c] = -R[r, free]
    return z


def _positive(value, arith):
    if arith.exact:
        return value > 0
    return value > arith.pivot_tol


def reduce_support(A, x, arith, max_support=None):
    """
    沿 A 的核方向移动 x，直到支撑列线性无关（基本解）

    保持 A x 不变、x ≥ 0；比值检验中并列时下标最小者离开支撑。

    Args:
        A (np.ndarray): 约束矩阵 (r, s)
        x (np.ndarray): 非负可行点 (s,)
        arith (Arith): 数值模式
        max_support (int): 可选，支撑规模不超过该值即停止

    Returns:
        np.ndarray: 约简后的非负向量
    """
    x = np.array(x, dtype=arith.dtype, copy=True)
    scale = _scale(x) if not arith.exact else 1.0
    iterations = 0
    while True:
        support = [j for j in range(len(x)) if x[j] > 0]
        if max_support is not None and len(support) <= max_support:
            break
        z = kernel_vector(A[:, support], arith)
        if z is None:
            break
        if not any(_positive(v, arith) for v in z):
            z = -z
        leave = None
        theta = None
        for pos, j in enumerate(support):
            if not _positive(z[pos], arith):
                continue
            ratio = x[j] / z[pos]
            if theta is None or ratio < theta:
                theta, leave = ratio, j
        if leave is None:
            break
        for pos, j in enumerate(support):
            x[j] = x[j] - theta * z[pos]
        x[leave] = arith.zero
        if not arith.exact:
            x[x <= arith.pivot_tol * scale] = 0.0
        iterations += 1
    logger.debug(f'支撑约简完成，迭代 {iterations} 次，剩余支撑 {int(np.count_nonzero(x))}')
    return x


def _phase_one(A, b):
    """
    精确 Phase-I 单纯形（Bland 最小下标规则），求 A x = b, x ≥ 0 的基本可行解

    Returns:
        np.ndarray or None: 可行时返回 x，否则 None
    """
    rows, cols = A.shape
    T = np.full((rows + 1, cols + rows + 1), Fraction(0), dtype=object)
    for i in range(rows):
        sign = -1 if b[i] < 0 else 1
        T[i, :cols] = A[i] * sign
        T[i, cols + i] = Fraction(1)
        T[i, -1] = b[i] * sign
    # 目标行：最小化人工变量之和
    for j in range(cols):
        T[rows, j] = -sum(T[i, j] for i in range(rows))
    T[rows, -1] = -sum(T[i, -1] for i in range(rows))
    basis = [cols + i for i in range(rows)]

    while True:
        entering = next((j for j in range(cols) if T[rows, j] < 0), None)
        if entering is None:
            break
        leave_row = None
        best = None
        for i in range(rows):
            if T[i, entering] > 0:
                ratio = T[i, -1] / T[i, entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave_row]):
                    best, leave_row = ratio, i
        if leave_row is None:
            # 目标有下界，Phase-I 不会无界
            break
        T[leave_row] = T[leave_row] / T[leave_row, entering]
        for i in range(rows + 1):
            if i != leave_row and T[i, entering] != 0:
                T[i] = T[i] - T[i, entering] * T[leave_row]
        basis[leave_row] = entering

    if T[rows, -1] != 0:
        return None
    x = np.full(cols, Fraction(0), dtype=object)
    for i, var in enumerate(basis):
        if var < cols:
            x[var] = T[i, -1]
    return x


def _feasible(A, b, w, tol):
    return w is not None and bool(np.all(w >= -tol)) and float(np.linalg.norm(A @ w - b)) <= tol


def _linprog_weights(A, b, arith):
    """nnls 不收敛时的可行性线性规划；在返回解的支撑上用最小二乘修正舍入"""
    result = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=(0, None), method='highs')
    if result.status != 0 or result.x is None:
        return None
    x = np.maximum(result.x, 0.0)
    support = np.flatnonzero(x > arith.pivot_tol)
    if support.size:
        y, *_ = np.linalg.lstsq(A[:, support], b, rcond=None)
        if np.all(y >= 0):
            x = np.zeros(A.shape[1])
            x[support] = y
    return x


def convex_weights(points, target, arith):
    """
    求 target 关于 points 的一个凸组合权重

    浮点模式在提升系统 [V; 1] λ = [p; 1] 上调用 nnls，并自行重算残差；
    nnls 给出的解不满足时改用 linprog 判定可行性。精确模式使用 Phase-I 单纯形。

    Args:
        points (np.ndarray): (s, n) 点集
        target (np.ndarray): (n,) 目标点
        arith (Arith): 数值模式

    Returns:
        tuple: (weights or None, direction or None)
    """
    points = np.asarray(points)
    s = points.shape[0]
    if arith.exact:
        A = np.vstack([points.T, np.full((1, s), Fraction(1), dtype=object)])
        b = np.concatenate([np.asarray(target, dtype=object), [Fraction(1)]])
        x = _phase_one(A, b)
        return x, None

    A = np.vstack([points.T.astype(float), np.ones((1, s))])
    b = np.concatenate([np.asarray(target, dtype=float), [1.0]])
    tol = arith.tol * _scale(A)
    w, _ = nnls(A, b)
    if _feasible(A, b, w, tol):
        return np.maximum(w, 0.0), None
    x = _linprog_weights(A, b, arith)
    if _feasible(A, b, x, tol):
        logger.debug('nnls 残差不符，改用 linprog 的可行解')
        return np.maximum(x, 0.0), None
    residual = b - A @ w
    return None, residual[:-1]


def lifted_matrix(points, arith):
    """堆叠点坐标与一行 1，构成 Carathéodory 约简的约束矩阵"""
    points = np.asarray(points)
    ones = np.full((1, points.shape[0]), arith.one, dtype=arith.dtype)
    return np.vstack([np.asarray(points.T, dtype=arith.dtype), ones])

