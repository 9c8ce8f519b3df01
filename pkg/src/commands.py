"""
命令分发：每个命令由一个求解函数（产生 outputs）和一个校验函数（由 outputs 经 oracle
独立重算等式两侧，产生 checks）组成。verify 复用同一组校验函数。
"""
import logging
import time

import numpy as np

import config
from .bangbang import ExtremeSelection, bang_bang, integral_bang_bang, pointset_bang_bang
from .condexp import SimpleFunction, ce_measure, cond_exp, integrate_against, weighted_ce_measure
from .documents import encode_set, function_of, parse_set, plain, set_of
from .errors import InputError, SchemaError, VerificationError
from .lyapunov import annihilator_witness, half_set, lyapunov_partition, lyapunov_partition_multi
from .oracle import direct_integrate, direct_integrate_selection, direct_integrate_strategy
from .polytope import PolytopeMap, extreme_indices
from .purify import ActionSet, IntegrandFamily, PureStrategy, YoungMeasure, density_step, purify
from .spaces import BlockPartition, RefinedSet, coarseness_check, split_cells, validate_witness

logger = logging.getLogger(__name__)


def _exact_bound(problem):
    return problem.arith.zero if problem.arith.exact else problem.arith.tol


def _check(problem, name, lhs, rhs, bound):
    arith = problem.arith
    lhs = arith.array(plain(lhs))
    rhs = arith.array(plain(rhs))
    if lhs.shape != rhs.shape:
        raise VerificationError('等式两侧形状不一致', f'{name}: {lhs.shape} vs {rhs.shape}')
    deviation = arith.max_abs(lhs - rhs)
    return {'name': name, 'lhs': plain(lhs), 'rhs': plain(rhs), 'deviation': plain(deviation),
            'bound': plain(arith.number(plain(bound)))}


def _count(problem, name, violations):
    return _check(problem, name, violations, 0, 0)


def _ones(grid):
    return SimpleFunction.constant(1, grid)


def _validity(problem, pieces, base):
    total = problem.arith.zeros(problem.grid.size)
    for piece in pieces:
        total = total + piece.masses(problem.grid)
    return _check(problem, 'partition_validity', total, base, _exact_bound(problem))


def _parse_pieces(problem, outputs, key='pieces'):
    try:
        return [parse_set(triples, problem.grid) for triples in outputs[key]]
    except KeyError as e:
        raise SchemaError('报告缺少字段', key) from e


# ---------------------------------------------------------------- cond-exp

def _run_cond_exp(problem):
    f = function_of(problem, 'function')
    return {'cond_exp': cond_exp(f, problem.partition, problem.grid).values}


def _checks_cond_exp(problem, outputs):
    f = function_of(problem, 'function')
    rhs = direct_integrate(f, problem.partition, problem.grid).values
    return [_check(problem, 'cond_exp', outputs['cond_exp'], rhs, _exact_bound(problem))]


# ---------------------------------------------------------------- ce-measure

def _run_ce_measure(problem):
    grid, C = problem.grid, problem.partition
    E = set_of(problem)
    outputs = {'ce_measure': ce_measure(E, C, grid).values}
    f = function_of(problem, 'function', required=False)
    if f is not None:
        outputs['weighted'] = weighted_ce_measure(f, E, C, grid).values
        g = function_of(problem, 'g', required=False)
        if g is not None:
            outputs['integral'] = integrate_against(g, f, E, C, grid).values
    return outputs


def _checks_ce_measure(problem, outputs):
    grid, C = problem.grid, problem.partition
    E = set_of(problem)
    bound = _exact_bound(problem)
    checks = [_check(problem, 'ce_measure', outputs['ce_measure'],
                     direct_integrate(_ones(grid), C, grid, E=E).values, bound)]
    f = function_of(problem, 'function', required=False)
    if f is not None:
        checks.append(_check(problem, 'weighted', outputs['weighted'],
                             direct_integrate(f, C, grid, E=E).values, bound))
        g = function_of(problem, 'g', required=False)
        if g is not None:
            checks.append(_check(problem, 'integral', outputs['integral'],
                                 direct_integrate(g.times(f), C, grid, E=E).values, bound))
    return checks


# ---------------------------------------------------------------- partition

def _run_partition(problem):
    grid, C, payload = problem.grid, problem.partition, problem.payload
    alpha = function_of(problem, 'alpha')
    if 'measures' in payload:
        if 'functions' not in payload:
            raise SchemaError('多测度划分需要 functions 字段')
        result = lyapunov_partition_multi(payload['measures'], payload['functions'], alpha, C, grid)
    else:
        h = function_of(problem, 'h')
        within = set_of(problem) if 'set' in payload else None
        result = lyapunov_partition(h, alpha, C, grid, within=within)
    outputs = {
        'pieces': [encode_set(piece) for piece in result.pieces],
        'residual': result.residual,
        'residual_bound': result.residual_bound,
        'fractional_cells': list(result.fractional_cells),
        'max_residual': result.max_residual,
    }
    if result.measure_residuals is not None:
        outputs['measure_residuals'] = result.measure_residuals
        outputs['measure_bounds'] = list(result.measure_bounds)
    return outputs


def _normalized_measures(problem):
    arith = problem.arith
    measures = arith.array(problem.payload['measures'])
    return [row / row.sum() for row in measures]


def _checks_partition(problem, outputs):
    grid, C, payload = problem.grid, problem.partition, problem.payload
    arith = problem.arith
    alpha = function_of(problem, 'alpha')
    pieces = _parse_pieces(problem, outputs)
    if len(pieces) != alpha.dim:
        raise VerificationError('片段数与 α 不一致', f'pieces={len(pieces)} alpha={alpha.dim}')
    bound0 = _exact_bound(problem)

    if 'measures' in payload:
        checks = [_validity(problem, pieces, grid.weights)]
        functions = arith.array(payload['functions'])
        recomputed = []
        for i, mu in enumerate(_normalized_measures(problem)):
            f_i = SimpleFunction(functions[i].reshape(-1, 1))
            rows = []
            for j, piece in enumerate(pieces):
                lhs = direct_integrate(f_i, C, grid, E=piece, measure=mu).values
                rhs = direct_integrate(SimpleFunction(alpha.values[:, j:j + 1] * f_i.values), C, grid,
                                       measure=mu).values
                checks.append(_check(problem, f'measure_{i}_piece_{j}', lhs, rhs, outputs['measure_bounds'][i]))
                rows.append((lhs - rhs)[:, 0])
            recomputed.append(rows)
        checks.append(_check(problem, 'measure_residuals', outputs['measure_residuals'], recomputed, bound0))
        return checks

    h = function_of(problem, 'h')
    within = set_of(problem) if 'set' in payload else RefinedSet.whole(grid)
    checks = [_validity(problem, pieces, within.masses(grid))]
    recomputed = []
    for i, piece in enumerate(pieces):
        lhs = direct_integrate(h, C, grid, E=piece).values
        rhs = direct_integrate(SimpleFunction(alpha.values[:, i:i + 1] * h.values), C, grid, E=within).values
        checks.append(_check(problem, f'piece_{i}', lhs, rhs, outputs['residual_bound']))
        recomputed.append(lhs - rhs)
    checks.append(_check(problem, 'residual', outputs['residual'], recomputed, bound0))
    return checks


# ---------------------------------------------------------------- half-set

def _run_half_set(problem):
    h = function_of(problem, 'h')
    result = half_set(h, set_of(problem), problem.partition, problem.grid)
    return {'set': encode_set(result.set), 'residual': result.residual, 'residual_bound': result.residual_bound}


def _checks_half_set(problem, outputs):
    grid, C = problem.grid, problem.partition
    h = function_of(problem, 'h')
    E = set_of(problem)
    F = parse_set(outputs['set'], grid)
    bound0 = _exact_bound(problem)
    lhs = direct_integrate(h, C, grid, E=F).values
    rhs = direct_integrate(h, C, grid, E=E).values * grid.arith.half()
    return [
        _check(problem, 'subset', F.difference(E).mass(grid), 0, bound0),
        _check(problem, 'half', lhs, rhs, outputs['residual_bound']),
        _check(problem, 'residual', outputs['residual'], lhs - rhs, bound0),
    ]


# ---------------------------------------------------------------- annihilator

def _run_annihilator(problem):
    f = function_of(problem, 'function')
    witness = annihilator_witness(f, set_of(problem), problem.partition, problem.grid)
    return {
        'parent': list(witness.split.parent),
        'start': list(witness.split.start),
        'g': witness.g.values[:, 0],
        'support': encode_set(witness.support),
        'norm_inf': witness.norm_inf,
        'threshold': witness.threshold,
        'residual': witness.residual,
    }


def _checks_annihilator(problem, outputs):
    grid, C, arith = problem.grid, problem.partition, problem.arith
    f = function_of(problem, 'function')
    E = set_of(problem)
    parent = [int(k) for k in outputs['parent']]
    start = [arith.number(s) for s in outputs['start']]
    cuts = {}
    for k, s in zip(parent, start):
        if s != 0:
            cuts.setdefault(k, set()).add(s)
    split = split_cells(grid, cuts)
    if list(split.parent) != parent:
        raise VerificationError('报告中的单元切分无法复现')
    fine = split.grid
    g = arith.array(outputs['g'])
    if g.shape != (fine.size,):
        raise VerificationError('g 的长度与切分后的网格不一致', f'g={g.shape} cells={fine.size}')
    g = SimpleFunction(g.reshape(-1, 1))
    E_fine = split.lift_set(E)
    inside = set(E_fine.aligned_cells(fine))
    outside = [arith.max_abs(g.values[j]) for j in range(fine.size) if j not in inside]
    norm = arith.max_abs(g.values)
    f_fine = SimpleFunction(split.lift_values(f.values))
    bound0 = _exact_bound(problem)
    annihilation = direct_integrate(f_fine.times(g), split.lift_partition(C), fine, E=E_fine).values
    return [
        _check(problem, 'annihilation', annihilation, np.zeros(annihilation.shape, dtype=int), bound0),
        _check(problem, 'support', max(outside, default=arith.zero), 0, bound0),
        _check(problem, 'norm', norm, outputs['norm_inf'], bound0),
        _count(problem, 'nonzero', 0 if norm > 0 else 1),
    ]


# ---------------------------------------------------------------- bang-bang

def _polytope_key(command):
    return 'point_sets' if command == 'pointset-bang-bang' else 'polytope_map'


def _bang_bang_runner(command):
    def run(problem):
        grid, C = problem.grid, problem.partition
        key = _polytope_key(command)
        if key not in problem.payload:
            raise SchemaError(f'payload 缺少字段 {key}')
        T = PolytopeMap.from_lists(problem.payload[key], grid)
        h = function_of(problem, 'selection')
        diagonal = problem.parameters['diagonal_only']
        if command == 'pointset-bang-bang':
            selection, report = pointset_bang_bang(T, h, C, grid, diagonal)
        elif command == 'integral-bang-bang':
            selection, report = integral_bang_bang(T, h, grid, diagonal)
        else:
            selection, report = bang_bang(T, h, C, grid, diagonal)
        return {
            'pieces': [encode_set(piece) for piece in selection.pieces],
            'values': selection.values,
            'provenance': selection.provenance,
            'alpha': report.decomposition.weights,
            'target': report.target,
            'achieved': report.achieved,
            'deviation': report.deviation,
            'deviation_bound': report.deviation_bound,
            'residual': report.partition.residual,
            'residual_bound': report.partition.residual_bound,
        }
    return run


def _bang_bang_checker(command):
    def checks_for(problem, outputs):
        grid, C, arith = problem.grid, problem.partition, problem.arith
        if command == 'integral-bang-bang':
            C = BlockPartition.trivial(grid.size)
        T = PolytopeMap.from_lists(problem.payload[_polytope_key(command)], grid)
        h = function_of(problem, 'selection')
        pieces = _parse_pieces(problem, outputs)
        values = arith.array(outputs['values'])
        alpha = arith.array(outputs['alpha'])
        provenance = np.array(outputs['provenance'], dtype=int)
        m, p, n = values.shape
        if len(pieces) != p or alpha.shape != (m, p) or provenance.shape != (m, p):
            raise VerificationError('极点选择的形状不一致')
        bound0 = _exact_bound(problem)

        violations = 0
        for i, piece in enumerate(pieces):
            for k in piece.cells:
                ext = extreme_indices(T.vertices[k], arith)
                j = provenance[k, i]
                if j not in ext or not arith.close(T.vertices[k][j], values[k, i]):
                    violations += 1
        selection = ExtremeSelection(tuple(pieces), values, provenance)
        lhs = direct_integrate_selection(selection, C, grid).values
        rhs = direct_integrate(h, C, grid).values
        checks = [
            _validity(problem, pieces, grid.weights),
            _count(problem, 'extreme_membership', violations),
            _check(problem, 'alpha_sum', alpha.sum(axis=1), np.ones(m, dtype=int), bound0),
            _count(problem, 'alpha_sign', sum(1 for v in alpha.flat if v < 0)),
            _check(problem, 'decomposition', np.einsum('kp,kpn->kn', alpha, values)
                   if not arith.exact else [alpha[k] @ values[k] for k in range(m)], h.values, bound0),
            _check(problem, 'bang_bang', lhs, rhs, outputs['deviation_bound']),
            _check(problem, 'achieved', outputs['achieved'], lhs, bound0),
            _check(problem, 'target', outputs['target'], rhs, bound0),
        ]
        pairs = [(i, i) for i in range(p)] if problem.parameters['diagonal_only'] else \
            [(i, j) for i in range(p) for j in range(p)]
        lhs_pairs, rhs_pairs = [], []
        for i, j in pairs:
            slot = SimpleFunction(values[:, j, :])
            lhs_pairs.append(direct_integrate(slot, C, grid, E=pieces[i]).values)
            rhs_pairs.append(direct_integrate(SimpleFunction(alpha[:, i:i + 1] * slot.values), C, grid).values)
        name = 'diagonal_moments' if problem.parameters['diagonal_only'] else 'full_matrix'
        checks.append(_check(problem, name, lhs_pairs, rhs_pairs, outputs['residual_bound']))
        # 报告中的 residual 按 (片段, 块, 槽位·维数) 排列
        diffs = [lhs - rhs for lhs, rhs in zip(lhs_pairs, rhs_pairs)]
        if not problem.parameters['diagonal_only']:
            diffs = [np.concatenate(diffs[i * p:(i + 1) * p], axis=1) for i in range(p)]
        checks.append(_check(problem, 'residual', outputs['residual'], diffs, bound0))
        return checks
    return checks_for


# ---------------------------------------------------------------- purify

def _young_measure(problem):
    entry = problem.payload.get('young_measure')
    if not isinstance(entry, dict):
        raise SchemaError('payload 缺少 young_measure')
    actions = ActionSet(tuple(entry.get('actions') or ()))
    return YoungMeasure.from_values(actions, entry.get('probabilities'), problem.grid)


def _family_key(command):
    return 'phis' if command == 'density-step' else 'integrands'


def _family(problem, command, actions):
    key = _family_key(command)
    if key not in problem.payload:
        raise SchemaError(f'payload 缺少字段 {key}')
    return IntegrandFamily.from_values(problem.payload[key], problem.grid, actions)


def _purify_runner(command):
    def run(problem):
        grid, C = problem.grid, problem.partition
        delta = _young_measure(problem)
        V = _family(problem, command, delta.actions)
        step = density_step if command == 'density-step' else purify
        strategy, report = step(delta, V, C, grid, problem.parameters['diagonal_only'])
        return {
            'assignments': [list(row) for row in strategy.assignments()],
            'mixed': report.mixed,
            'pure': report.pure,
            'deviation': report.deviation,
            'deviation_bound': report.deviation_bound,
        }
    return run


def _purify_checker(command):
    def checks_for(problem, outputs):
        grid, C, arith = problem.grid, problem.partition, problem.arith
        delta = _young_measure(problem)
        V = _family(problem, command, delta.actions)
        triples = [[] for _ in delta.actions.labels]
        for row in outputs['assignments']:
            if not isinstance(row, list) or len(row) != 4:
                raise SchemaError('assignments 元素必须是 [cell, offset, mass, label]', repr(row))
            try:
                a = delta.actions.index(row[3])
            except InputError as e:
                raise VerificationError('报告引用了未知行动', repr(row[3])) from e
            triples[a].append(row[:3])
        pieces = [parse_set(t, grid) for t in triples]
        strategy = PureStrategy(delta.actions, tuple(pieces))
        violations = sum(1 for a, piece in enumerate(pieces) for k in piece.cells
                         if not delta.probabilities[k, a] > 0)
        pbar = arith.zeros((grid.size, V.dim))
        for k in range(grid.size):
            for a in range(len(delta.actions)):
                pbar[k] = pbar[k] + delta.probabilities[k, a] * V.values[k, a]
        lhs = direct_integrate_strategy(strategy, V, C, grid).values
        rhs = direct_integrate(SimpleFunction(pbar), C, grid).values
        bound0 = _exact_bound(problem)
        return [
            _validity(problem, pieces, grid.weights),
            _count(problem, 'support', violations),
            _check(problem, 'purify', lhs, rhs, outputs['deviation_bound']),
            _check(problem, 'pure', outputs['pure'], lhs, bound0),
            _check(problem, 'mixed', outputs['mixed'], rhs, bound0),
        ]
    return checks_for


# ---------------------------------------------------------------- coarseness

def _run_coarseness(problem):
    E = set_of(problem)
    verdict = coarseness_check(problem.grid, problem.partition, E)
    return {
        'is_coarser': verdict.is_coarser,
        'witness': encode_set(verdict.witness),
        'conditional': verdict.conditional,
        'reference': verdict.reference,
    }


def _checks_coarseness(problem, outputs):
    grid, C = problem.grid, problem.partition
    E = set_of(problem)
    witness = parse_set(outputs['witness'], grid)
    bound0 = _exact_bound(problem)
    conditional = direct_integrate(_ones(grid), C, grid, E=witness).values[:, 0]
    reference = direct_integrate(_ones(grid), C, grid, E=E).values[:, 0]
    checks = [
        _check(problem, 'verdict', int(bool(outputs['is_coarser'])), int(grid.splittable), 0),
        _check(problem, 'conditional', outputs['conditional'], conditional, bound0),
        _check(problem, 'reference', outputs['reference'], reference, bound0),
    ]
    if grid.splittable:
        checks.append(_check(problem, 'half_mass', conditional, reference * grid.arith.half(), bound0))
        checks.append(_count(problem, 'witness', 0 if validate_witness(grid, C, E, witness) else 1))
    else:
        whole = len(witness.aligned_cells(grid)) == 1 and len(witness.cells) == 1
        checks.append(_count(problem, 'atom', 0 if whole else 1))
    return checks


HANDLERS = {
    'cond-exp': (_run_cond_exp, _checks_cond_exp),
    'ce-measure': (_run_ce_measure, _checks_ce_measure),
    'partition': (_run_partition, _checks_partition),
    'half-set': (_run_half_set, _checks_half_set),
    'annihilator': (_run_annihilator, _checks_annihilator),
    'bang-bang': (_bang_bang_runner('bang-bang'), _bang_bang_checker('bang-bang')),
    'integral-bang-bang': (_bang_bang_runner('integral-bang-bang'), _bang_bang_checker('integral-bang-bang')),
    'pointset-bang-bang': (_bang_bang_runner('pointset-bang-bang'), _bang_bang_checker('pointset-bang-bang')),
    'purify': (_purify_runner('purify'), _purify_checker('purify')),
    'density-step': (_purify_runner('density-step'), _purify_checker('density-step')),
    'coarseness': (_run_coarseness, _checks_coarseness),
}


def recompute_checks(command, problem, outputs):
    try:
        return HANDLERS[command][1](problem, outputs)
    except KeyError as e:
        raise SchemaError('报告缺少字段', str(e)) from e


def run(command, problem):
    """
    执行一个命令并生成报告

    Args:
        command (str): 命令名，见 HANDLERS
        problem (Problem): 已解析的问题

    Returns:
        dict: 报告文档
    """
    if command not in HANDLERS:
        raise InputError('未知的命令', f'{command} 可选 {sorted(HANDLERS)}')
    start = time.perf_counter()
    logger.info(f'开始执行命令 {command}')
    outputs = plain(HANDLERS[command][0](problem))
    checks = recompute_checks(command, problem, outputs)
    for check in checks:
        if not problem.arith.within(problem.arith.number(check['deviation']), problem.arith.number(check['bound'])):
            logger.warning(f'校验项 {check["name"]} 超出界：{check["deviation"]} > {check["bound"]}')
    report = {
        'command': command,
        'version': config.VERSION,
        'report_version': config.REPORT_VERSION,
        'input_digest': problem.digest,
        'parameters': problem.parameters,
        'outputs': outputs,
        'checks': checks,
        'wall_time': round(time.perf_counter() - start, 6),
    }
    logger.info(f'命令 {command} 完成，共 {len(checks)} 项校验')
    return report
