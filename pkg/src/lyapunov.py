"""
构造性的 Lyapunov 层：可分模式下的精确划分、原子模式下带证书界的划分、
半集、零化见证以及多测度版本

每个块上求解运输系统
    Σ_i t_{i,k} = w_k,    Σ_{k∈b} t_{i,k} h(k) = Σ_{k∈b} α_i(k) w_k h(k)
种子 t_{i,k} = α_i(k)·w_k 总是可行。
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

import config
from .condexp import SimpleFunction, ce_measure, weighted_ce_measure
from .errors import AtomicModeError, DimensionError, NullSetError, WeightError
from .linalg import reduce_support
from .spaces import RefinedSet, cuts_of, halve_cells, refine_partition, split_cells

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PartitionResult:
    """
    pieces: p 个 RefinedSet 构成 Ω（或 within 集合）的划分
    residual: (p, B, D)，E(χ_{B_i} h|𝒞) − E(α_i h|𝒞)
    residual_bound: 原子模式为 p·D·w_max·H_max，可分模式为 τ（精确模式为 0）
    fractional_cells: 每个块在取整前的分数单元个数
    measure_residuals: 多测度版本中每个测度的 (d, p, B) 残差
    measure_bounds: 每个测度的证书界，原子模式为 residual_bound·max_b μ(b)/μ_i(b)
    """

    pieces: tuple
    residual: np.ndarray
    residual_bound: object
    fractional_cells: tuple
    mode: str
    measure_residuals: np.ndarray = None
    measure_bounds: tuple = None

    @property
    def max_residual(self):
        return np.abs(self.residual).max() if self.residual.size else 0


@dataclass(frozen=True, eq=False)
class TransportSystem:
    cells: tuple
    matrix: np.ndarray
    seed: np.ndarray
    rhs: np.ndarray
    pieces: int


@dataclass(frozen=True, eq=False)
class HalfSet:
    set: RefinedSet
    residual: np.ndarray
    residual_bound: object
    partition: PartitionResult


@dataclass(frozen=True, eq=False)
class AnnihilatorWitness:
    """g 定义在切分后的网格 split.grid 上；support 为 g 可能非零的集合"""

    g: SimpleFunction
    split: object
    support: RefinedSet
    norm_inf: object
    residual: np.ndarray
    threshold: object


@dataclass(frozen=True)
class RefinementRow:
    round: int
    cells: int
    bound: object
    residual: object


def transport_system(moments, alpha, base, cells, arith):
    """
    单个块上的运输系统

    Args:
        moments (np.ndarray): (m, p, D)，第 i 块片段匹配 moments[:, i, :]
        alpha (np.ndarray): (m, p) 权重
        base (np.ndarray): (m,) 单元的基准质量
        cells (tuple): 块内参与求解的单元
        arith (Arith): 数值模式

    Returns:
        TransportSystem: 约束矩阵、种子与右端项
    """
    c = len(cells)
    p = alpha.shape[1]
    D = moments.shape[2]
    A = arith.zeros((c + p * D, p * c))
    seed = arith.zeros(p * c)
    rhs = arith.zeros(c + p * D)
    for local, k in enumerate(cells):
        rhs[local] = base[k]
        for i in range(p):
            v = i * c + local
            amount = alpha[k, i] * base[k]
            A[local, v] = arith.one
            seed[v] = amount
            for j in range(D):
                A[c + i * D + j, v] = moments[k, i, j]
                rhs[c + i * D + j] = rhs[c + i * D + j] + amount * moments[k, i, j]
    return TransportSystem(tuple(cells), A, seed, rhs, p)


def _block_contributions(system, arith):
    """
    原子分配的块内数据：contrib[l, i] 为单元 l 整体归入片段 i 时对矩和的贡献，target 为 (p, D) 目标矩和
    """
    c = len(system.cells)
    p = system.pieces
    D = (system.matrix.shape[0] - c) // p
    contrib = arith.zeros((c, p, D))
    for local in range(c):
        for i in range(p):
            column = system.matrix[c + i * D:c + (i + 1) * D, i * c + local]
            contrib[local, i] = system.rhs[local] * column
    target = np.array(system.rhs[c:], dtype=arith.dtype).reshape(p, D)
    return contrib, target


def _assignment_residual(assign, contrib, target):
    R = -target
    for local, i in enumerate(assign):
        R[i] = R[i] + contrib[local, i]
    return R


def _argmin(scores, arith):
    flat = scores.ravel()
    if arith.exact:
        index = min(range(flat.size), key=flat.__getitem__)
    else:
        index = int(np.argmin(flat))
    return np.unravel_index(index, scores.shape), flat[index]


def _exhaustive_assignment(contrib, target, arith):
    """枚举块内全部 p^c 个分配，并列时取字典序最小者"""
    c, p, _ = contrib.shape
    assignments = np.array(list(itertools.product(range(p), repeat=c)), dtype=int)
    R = np.repeat(-target[None], len(assignments), axis=0)
    for local in range(c):
        chosen = assignments[:, local, None] == np.arange(p)
        R = R + chosen[:, :, None] * contrib[local][None]
    scores = np.abs(R).reshape(len(assignments), -1).max(axis=1)
    (index,), score = _argmin(scores, arith)
    return assignments[index].copy(), score


def _descend(assign, contrib, target, arith):
    """
    局部下降：每步在所有单元移动与跨片段交换中取最大残差最小者，
    没有严格改进或步数用尽时停止
    """
    c, p, _ = contrib.shape
    assign = assign.copy()
    eps = arith.zero if arith.exact else arith.pivot_tol * max(float(arith.max_abs(contrib)), 1.0)
    R = _assignment_residual(assign, contrib, target)
    score = arith.max_abs(R)
    for _ in range(4 * c * p):
        rows = np.abs(R).max(axis=1)
        best = None
        for a in range(p):
            ma = np.flatnonzero(assign == a)
            if ma.size == 0:
                continue
            for b in range(p):
                if b == a:
                    continue
                mb = np.flatnonzero(assign == b)
                rest = max((rows[o] for o in range(p) if o not in (a, b)), default=arith.zero)
                # 把 ma 中的单元移到 b
                new_a = R[a] - contrib[ma, a]
                new_b = R[b] + contrib[ma, b]
                scores = np.maximum(np.maximum(np.abs(new_a).max(axis=1), np.abs(new_b).max(axis=1)), rest)
                (pos,), value = _argmin(scores, arith)
                if best is None or value < best[0]:
                    best = (value, ((ma[pos], b),))
                if b < a or mb.size == 0:
                    continue
                # 交换 ma 与 mb 中的各一个单元
                new_a = R[a] - contrib[ma, a][:, None] + contrib[mb, a][None]
                new_b = R[b] - contrib[mb, b][None] + contrib[ma, b][:, None]
                scores = np.maximum(np.maximum(np.abs(new_a).max(axis=2), np.abs(new_b).max(axis=2)), rest)
                (i, j), value = _argmin(scores, arith)
                if value < best[0]:
                    best = (value, ((ma[i], b), (mb[j], a)))
        if best is None or not best[0] < score - eps:
            break
        for local, piece in best[1]:
            assign[local] = piece
        R = _assignment_residual(assign, contrib, target)
        score = arith.max_abs(R)
    return assign, score


def _improve_rounding(system, assign, arith):
    """
    原子取整后的改进：块较小时穷举，否则局部下降；只接受严格降低块内最大矩残差的分配，
    因此证书界仍然有效
    """
    contrib, target = _block_contributions(system, arith)
    c, p, _ = contrib.shape
    start = arith.max_abs(_assignment_residual(assign, contrib, target))
    if p ** c <= config.ROUNDING_SEARCH_BUDGET:
        candidate, score = _exhaustive_assignment(contrib, target, arith)
    else:
        candidate, score = _descend(assign, contrib, target, arith)
    if score < start:
        logger.debug(f'取整改进：块内最大矩残差 {float(start):.3e} -> {float(score):.3e}')
        return candidate
    return assign


def _solve_block(system, arith, atomic, basic):
    c = len(system.cells)
    p = system.pieces
    x = system.seed
    if atomic or basic:
        x = reduce_support(system.matrix, x, arith)
    t = np.array(x, dtype=arith.dtype).reshape(p, c)
    floor = 0 if arith.exact else arith.pivot_tol
    fractional = [local for local in range(c) if sum(1 for i in range(p) if t[i, local] > floor) > 1]
    if atomic:
        # 取整：每个单元整体归入分量最大的片段，并列取下标最小者
        assign = np.array([max(range(p), key=lambda i: (t[i, local], -i)) for local in range(c)], dtype=int)
        assign = _improve_rounding(system, assign, arith)
    amounts = {}
    for local, k in enumerate(system.cells):
        column = list(t[:, local])
        if atomic:
            total = system.rhs[local]
            column = [total if i == assign[local] else arith.zero for i in range(p)]
        amounts[k] = column
    return amounts, len(fractional)


def _stack(spans, lengths, arith):
    """按片段顺序把长度依次堆叠进 spans，最后一个正长度片段占满剩余部分"""
    out = [[] for _ in lengths]
    order = [i for i, ln in enumerate(lengths) if ln > 0]
    if not order:
        return out
    cursor = 0
    used = arith.zero
    for i in order[:-1]:
        need = lengths[i]
        while need > 0 and cursor < len(spans):
            start, width = spans[cursor]
            avail = width - used
            if need < avail:
                out[i].append((start + used, need))
                used = used + need
                need = arith.zero
            else:
                out[i].append((start + used, avail))
                need = need - avail
                cursor += 1
                used = arith.zero
            if not arith.exact and need <= arith.pivot_tol:
                need = arith.zero
    last = order[-1]
    for idx in range(cursor, len(spans)):
        start, width = spans[idx]
        offset = start + used if idx == cursor else start
        rest = width - used if idx == cursor else width
        if rest > 0:
            out[last].append((offset, rest))
    return out


def _validate_alpha(alpha, grid):
    alpha.check(grid)
    arith = grid.arith
    values = alpha.values
    if arith.exact:
        if any(v < 0 for v in values.flat):
            raise WeightError('α 存在负值')
    else:
        if (values < -arith.tol).any():
            raise WeightError('α 存在负值', f'min={float(values.min())}')
        values = np.maximum(values, 0.0)
    for k in range(grid.size):
        if not arith.close(values[k].sum(), arith.one):
            raise WeightError('α 每个单元的和必须为 1', f'cell={k} sum={values[k].sum()}')
    return values


def _solve(moments, alpha, C, grid, base, block_mass, spans, scale=None, basic=False):
    """
    逐块求解并按块序号合并，然后按几何位置堆叠出各片段

    base 为求解所用的单元质量（0 表示单元不参与求解），spans 为单元内可供堆叠的区间，
    scale 为几何长度与 base 质量之比（None 表示两者一致）。
    """
    arith = grid.arith
    atomic = not grid.splittable
    m = grid.size
    p = alpha.shape[1]
    D = moments.shape[2]

    systems = {}
    for b, cells in enumerate(C.blocks):
        active = tuple(k for k in cells if base[k] > 0)
        if active:
            systems[b] = transport_system(moments, alpha, base, active, arith)

    results = {}
    with ThreadPoolExecutor(max_workers=config.SOLVER_THREADS) as executor:
        future_dict = {
            executor.submit(_solve_block, system, arith, atomic, basic): b
            for b, system in systems.items()
        }
        for future in as_completed(future_dict):
            b = future_dict[future]
            try:
                results[b] = future.result()
            except Exception as e:
                logger.error(f'块 {b} 求解失败: {e}')
                raise
            logger.debug(f'块 {b} 求解完成，分数单元 {results[b][1]} 个')

    amounts = {}
    fractional = []
    for b in range(C.block_count):
        block_amounts, count = results.get(b, ({}, 0))
        amounts.update(block_amounts)
        fractional.append(count)

    triples = [[] for _ in range(p)]
    for k in range(m):
        cell_spans = spans.get(k)
        if not cell_spans:
            continue
        if k in amounts:
            lengths = amounts[k] if scale is None else [a * scale[k] for a in amounts[k]]
        else:
            width = sum((ln for _, ln in cell_spans[1:]), cell_spans[0][1])
            lengths = [alpha[k, i] * width for i in range(p)]
            if atomic:
                winner = max(range(p), key=lambda i: (alpha[k, i], -i))
                lengths = [width if i == winner else arith.zero for i in range(p)]
        for i, parts in enumerate(_stack(cell_spans, lengths, arith)):
            triples[i].extend((k, offset, length) for offset, length in parts)
    pieces = tuple(RefinedSet(m, tuple(t)) for t in triples)

    residual = arith.zeros((p, C.block_count, D))
    piece_base = []
    for piece in pieces:
        masses = piece.masses(grid)
        if scale is not None:
            masses = np.array([masses[k] / scale[k] if base[k] > 0 else arith.zero for k in range(m)],
                              dtype=arith.dtype)
        piece_base.append(masses)
    for b, cells in enumerate(C.blocks):
        idx = list(cells)
        for i in range(p):
            delta = piece_base[i][idx] - alpha[idx, i] * base[idx]
            residual[i, b] = (delta[:, None] * moments[idx, i, :]).sum(axis=0) / block_mass[b]

    if atomic:
        w_max = max(base[k] / block_mass[b] for b, cells in enumerate(C.blocks) for k in cells)
        active = [k for k in range(m) if base[k] > 0]
        h_max = np.abs(moments[active]).max() if active else arith.zero
        bound = p * D * w_max * h_max
    else:
        bound = arith.zero if arith.exact else arith.tol

    result = PartitionResult(pieces, residual, bound, tuple(fractional), grid.mode.value)
    logger.info(f'Lyapunov 划分完成：{C.block_count} 个块，{p} 个片段，'
                f'最大残差 {float(result.max_residual):.3e}，界 {float(bound):.3e}')
    return result


def _partition(moments, alpha, C, grid, within, basic):
    C.check(grid)
    within = RefinedSet.whole(grid) if within is None else within.check(grid)
    return _solve(moments, alpha, C, grid, within.masses(grid), C.block_masses(grid),
                  within.by_cell, basic=basic)


def lyapunov_partition(h, alpha, C, grid, within=None, basic=False):
    """
    Lyapunov 划分：求片段 B_1..B_p 使 E(χ_{B_i} h|𝒞) = E(α_i h|𝒞)

    Args:
        h (SimpleFunction): (m, D) 矩函数
        alpha (SimpleFunction): (m, p) 非负权重，每个单元和为 1
        C (BlockPartition): 子 σ-代数
        grid (Grid): 网格
        within (RefinedSet): 可选，只在该集合内划分
        basic (bool): 可分模式下先约简为基本解，使每块至多 p·D 个单元被切开

    Returns:
        PartitionResult: 划分及残差
    """
    h.check(grid)
    values = _validate_alpha(alpha, grid)
    moments = np.repeat(h.values[:, None, :], values.shape[1], axis=1)
    return _partition(moments, values, C, grid, within, basic)


def partition_by_piece_moments(moments, alpha, C, grid, within=None, basic=False):
    """第 i 个片段只匹配自己的矩函数 moments[:, i, :]"""
    values = _validate_alpha(alpha, grid)
    moments = np.asarray(moments)
    if moments.ndim != 3 or moments.shape[:2] != values.shape:
        raise DimensionError('矩函数形状必须为 (单元数, 片段数, 维数)',
                             f'moments={moments.shape} alpha={values.shape}')
    return _partition(moments, values, C, grid, within, basic)


def half_set(h, E, C, grid):
    """
    半集：F ⊂ E 使 E(hχ_F|𝒞) = E(hχ_E|𝒞)/2

    Returns:
        HalfSet: F、F 的残差 (B, D) 与证书界
    """
    alpha = SimpleFunction(grid.arith.full((grid.size, 2), grid.arith.half()))
    result = lyapunov_partition(h, alpha, C, grid, within=E)
    return HalfSet(result.pieces[0], result.residual[0], result.residual_bound, result)


def realize_fraction(phi, h, E, C, grid):
    """
    取值 φ ∈ [0,1] 的分数目标由真实集合实现：F ⊆ E 使 E(hχ_F|𝒞) = E(hφχ_E|𝒞)

    Returns:
        HalfSet: F 及其残差
    """
    arith = grid.arith
    phi.check(grid)
    if phi.dim != 1:
        raise DimensionError('φ 必须是标量函数', f'dim={phi.dim}')
    column = phi.values[:, 0]
    if any(v < 0 or v > 1 for v in column):
        raise WeightError('φ 必须取值于 [0,1]')
    values = arith.zeros((grid.size, 2))
    for k, v in enumerate(column):
        values[k, 0] = v
        values[k, 1] = arith.one - v
    result = lyapunov_partition(h, SimpleFunction(values), C, grid, within=E)
    return HalfSet(result.pieces[0], result.residual[0], result.residual_bound, result)


def annihilator_witness(f, E, C, grid):
    """
    零化见证：有界非零 g，支撑在 E 内，且 E(f g χ_E|𝒞) = 0

    f 在 E 的某个正测度部分恒为零时直接取 g = χ_{E′}；否则取阈值 ε 为 |f| 在 E 上
    按质量的中位数，E′ = E ∩ {|f| ≥ ε}，E₀ 为 E′ 在每个单元内的左半部分，
    D = σ(𝒞 ∪ {E′})，g₀ = χ_{E₀} − E(χ_{E₀}|D)。标量 f 取 g = g₀/f，向量 f 直接取 g₀。

    Args:
        f (SimpleFunction): 标量或向量函数
        E (RefinedSet): 正测度集合
        C (BlockPartition): 子 σ-代数
        grid (Grid): 可分网格

    Returns:
        AnnihilatorWitness: 见证及其校验残差
    """
    if not grid.splittable:
        raise AtomicModeError('原子模式下一般不存在零化见证（Lyapunov 性质不成立）')
    arith = grid.arith
    C.check(grid)
    f.check(grid)
    E.check(grid)
    masses = E.masses(grid)
    if not masses.sum() > 0:
        raise NullSetError('集合 E 的测度必须为正')

    carrying = [k for k in range(grid.size) if masses[k] > 0]
    size = {k: arith.max_abs(f.values[k]) for k in carrying}
    zero_cells = [k for k in carrying if arith.close(f.values[k], arith.zero)]

    if zero_cells:
        threshold = arith.zero
        E1 = E.restrict_to_cells(zero_cells)
        split = split_cells(grid, cuts_of(E1))
        support = split.lift_set(E1)
        values = arith.zeros((split.grid.size, 1))
        for j in support.aligned_cells(split.grid):
            values[j, 0] = arith.one
        g = SimpleFunction(values)
    else:
        ordered = sorted(carrying, key=lambda k: (-size[k], k))
        half_mass = masses.sum() * arith.half()
        running = arith.zero
        threshold = size[ordered[-1]]
        for k in ordered:
            running = running + masses[k]
            if running >= half_mass:
                threshold = size[k]
                break
        E1 = E.restrict_to_cells([k for k in carrying if size[k] >= threshold])
        E0 = E1.left_fraction(arith.half())
        split = split_cells(grid, cuts_of(E1, E0))
        fine = split.grid
        support = split.lift_set(E1)
        D = refine_partition(split.lift_partition(C), support, fine)
        E0_fine = split.lift_set(E0)
        indicator = arith.zeros((fine.size, 1))
        for j in E0_fine.aligned_cells(fine):
            indicator[j, 0] = arith.one
        g0 = indicator - ce_measure(E0_fine, D, fine).lift(D).values
        inside = set(support.aligned_cells(fine))
        for j in range(fine.size):
            if j not in inside:
                g0[j, 0] = arith.zero
        if f.dim == 1:
            f_fine = split.lift_values(f.values)
            for j in inside:
                g0[j, 0] = g0[j, 0] / f_fine[j, 0]
        g = SimpleFunction(g0)

    fine = split.grid
    f_fine = SimpleFunction(split.lift_values(f.values))
    residual = weighted_ce_measure(f_fine.times(g), split.lift_set(E), split.lift_partition(C), fine).values
    norm_inf = arith.max_abs(g.values)
    logger.info(f'零化见证构造完成：阈值 {float(threshold):.6g}，‖g‖∞ = {float(norm_inf):.6g}，'
                f'残差 {float(arith.max_abs(residual)):.3e}')
    return AnnihilatorWitness(g, split, support, norm_inf, residual, threshold)


def lyapunov_partition_multi(measures, functions, alpha, C, grid, basic=False):
    """
    多测度 Lyapunov 划分

    各测度归一化后取平均 μ，密度 h_i = μ_i/μ，在 μ 下对矩 H = (f_1 h_1, …, f_d h_d)
    求划分；结果对每个 i、j 满足 E^{μ_i}(f_i χ_{B_j}|𝒞) = E^{μ_i}(f_i α_j|𝒞)。

    Args:
        measures (array-like): (d, m) 各测度的单元质量
        functions (array-like): (d, m) 每个测度对应的标量函数
        alpha (SimpleFunction): (m, p) 权重
        C (BlockPartition): 子 σ-代数
        grid (Grid): 网格（决定几何位置）

    Returns:
        PartitionResult: measure_residuals 形状为 (d, p, B)
    """
    arith = grid.arith
    C.check(grid)
    mu_i = arith.array(measures)
    fs = arith.array(functions)
    if mu_i.ndim != 2 or mu_i.shape[1] != grid.size:
        raise DimensionError('测度必须为 (测度数, 单元数)', f'shape={mu_i.shape}')
    if fs.shape != mu_i.shape:
        raise DimensionError('函数与测度形状不一致', f'functions={fs.shape} measures={mu_i.shape}')
    if any(v < 0 for v in mu_i.flat):
        raise WeightError('测度的单元质量必须非负')
    d = mu_i.shape[0]
    for i in range(d):
        total = mu_i[i].sum()
        if not total > 0:
            raise NullSetError('测度的总质量必须为正', f'measure={i}')
        mu_i[i] = mu_i[i] / total
    mu = mu_i.sum(axis=0) / d
    block_mass = C.block_masses(grid)
    for b, cells in enumerate(C.blocks):
        block_mass[b] = mu[list(cells)].sum()
        if not block_mass[b] > 0:
            raise NullSetError('平均测度下存在零测度的块', f'block={b}')

    values = _validate_alpha(alpha, grid)
    p = values.shape[1]
    H = arith.zeros((grid.size, d))
    scale = arith.zeros(grid.size)
    for k in range(grid.size):
        if mu[k] > 0:
            scale[k] = grid.weights[k] / mu[k]
            for i in range(d):
                H[k, i] = fs[i, k] * (mu_i[i, k] / mu[k])
    moments = np.repeat(H[:, None, :], p, axis=1)
    whole = RefinedSet.whole(grid)
    result = _solve(moments, values, C, grid, mu, block_mass, whole.by_cell, scale=scale, basic=basic)

    measure_residuals = arith.zeros((d, p, C.block_count))
    piece_masses = [piece.masses(grid) for piece in result.pieces]
    for i in range(d):
        for b, cells in enumerate(C.blocks):
            idx = list(cells)
            denom = mu_i[i, idx].sum()
            if not denom > 0:
                continue
            for j in range(p):
                lhs = sum((piece_masses[j][k] / grid.weights[k] * mu_i[i, k] * fs[i, k] for k in idx),
                          arith.zero)
                rhs = sum((values[k, j] * mu_i[i, k] * fs[i, k] for k in idx), arith.zero)
                measure_residuals[i, j, b] = (lhs - rhs) / denom
    measure_bounds = []
    for i in range(d):
        if grid.splittable:
            measure_bounds.append(result.residual_bound)
            continue
        ratios = [block_mass[b] / mu_i[i, list(cells)].sum() for b, cells in enumerate(C.blocks)
                  if mu_i[i, list(cells)].sum() > 0]
        measure_bounds.append(result.residual_bound * max(ratios))
    return PartitionResult(result.pieces, result.residual, result.residual_bound, result.fractional_cells,
                           result.mode, measure_residuals, tuple(measure_bounds))


def refinement_study(h, alpha, C, grid, rounds=4):
    """
    反复把每个单元对半切分，记录每一轮的证书界与实际残差

    Returns:
        tuple[RefinementRow]: 第 0 轮为原网格
    """
    rows = []
    for r in range(rounds + 1):
        result = lyapunov_partition(h, alpha, C, grid)
        rows.append(RefinementRow(r, grid.size, result.residual_bound, result.max_residual))
        logger.debug(f'加细第 {r} 轮：{grid.size} 个单元，界 {float(result.residual_bound):.3e}')
        if r == rounds:
            break
        split = halve_cells(grid)
        h = SimpleFunction(split.lift_values(h.values))
        alpha = SimpleFunction(split.lift_values(alpha.values))
        C = split.lift_partition(C)
        grid = split.grid
    return tuple(rows)
