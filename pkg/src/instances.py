"""
随机问题生成（--seed），所有数值均为有理数，便于同一份文档在浮点与精确模式下复用
"""
import logging
from fractions import Fraction

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

KINDS = (
    'cond-exp', 'ce-measure', 'partition', 'partition-multi', 'half-set', 'annihilator',
    'bang-bang', 'integral-bang-bang', 'pointset-bang-bang', 'purify', 'density-step', 'coarseness',
)


def _normalize(ints):
    total = sum(int(v) for v in ints)
    return [Fraction(int(v), total) for v in ints]


def random_weights(rng, m):
    return [int(v) for v in rng.integers(1, 10, m)]


def random_partition(rng, m, blocks):
    blocks = max(1, min(blocks, m))
    block_of = np.concatenate([rng.permutation(blocks), rng.integers(0, blocks, m - blocks)])
    rng.shuffle(block_of)
    return [int(b) for b in block_of]


def random_set(rng, weights, mode):
    """每个单元以一定概率取一段子区间（原子模式取整单元），至少包含一个单元"""
    cells = [k for k in range(len(weights)) if rng.random() < 0.6] or [int(rng.integers(len(weights)))]
    triples = []
    for k in cells:
        w = weights[k]
        if mode == 'atomic':
            triples.append([k, Fraction(0), w])
            continue
        length = int(rng.integers(1, 9))
        offset = int(rng.integers(0, 9 - length))
        triples.append([k, w * offset / 8, w * length / 8])
    return triples


def random_alpha(rng, m, p):
    return [_normalize(rng.integers(0, 5, p) + (np.arange(p) == rng.integers(p))) for _ in range(m)]


def random_polytope(rng, n, count):
    return [[int(x) for x in row] for row in rng.integers(-4, 5, (count, n))]


def random_interior(rng, vertices):
    lam = _normalize(rng.integers(1, 5, len(vertices)))
    dim = len(vertices[0])
    return [sum((lam[i] * vertices[i][j] for i in range(len(vertices))), Fraction(0)) for j in range(dim)]


def random_young_measure(rng, m, actions):
    rows = []
    for _ in range(m):
        raw = rng.integers(0, 4, actions)
        if raw.sum() == 0:
            raw[rng.integers(actions)] = 1
        rows.append(_normalize(raw))
    return rows


def random_family(rng, m, actions, n):
    return [[[int(x) for x in row] for row in cell] for cell in rng.integers(-3, 4, (m, actions, n))]


def random_problem(kind, seed=0, mode='splittable'):
    """
    生成指定类型的随机问题文档

    Args:
        kind (str): 问题类型，见 KINDS
        seed (int): 随机种子
        mode (str): splittable 或 atomic（零化见证总是可分）

    Returns:
        tuple: (命令名, 问题文档 dict)
    """
    if kind not in KINDS:
        raise InputError('未知的问题类型', f'kind={kind} 可选 {list(KINDS)}')
    rng = np.random.default_rng(seed)
    if kind == 'annihilator':
        mode = 'splittable'
    m = int(rng.integers(4, 9))
    raw = random_weights(rng, m)
    weights = _normalize(raw)
    document = {
        'space': {'weights': raw, 'mode': mode},
        'partition': {'block_of': random_partition(rng, m, int(rng.integers(1, 4)))},
        'payload': {},
    }
    payload = document['payload']
    command = kind

    if kind == 'cond-exp':
        payload['function'] = [[int(x) for x in row] for row in rng.integers(-5, 6, (m, 2))]
    elif kind == 'ce-measure':
        payload['set'] = random_set(rng, weights, mode)
        payload['function'] = [int(x) for x in rng.integers(-5, 6, m)]
    elif kind in ('partition', 'partition-multi'):
        p = int(rng.integers(2, 4))
        payload['alpha'] = random_alpha(rng, m, p)
        if kind == 'partition':
            payload['h'] = [[int(x) for x in row] for row in rng.integers(-3, 4, (m, 2))]
        else:
            command = 'partition'
            payload['measures'] = [[int(x) for x in rng.integers(0, 6, m) + 1] for _ in range(2)]
            payload['functions'] = [[int(x) for x in rng.integers(-3, 4, m)] for _ in range(2)]
    elif kind == 'half-set':
        payload['h'] = [int(x) for x in rng.integers(1, 5, m)]
        payload['set'] = random_set(rng, weights, mode)
    elif kind == 'annihilator':
        payload['function'] = [int(x) for x in rng.integers(1, 6, m) * rng.choice([-1, 1], m)]
        payload['set'] = random_set(rng, weights, mode)
    elif kind in ('bang-bang', 'integral-bang-bang', 'pointset-bang-bang'):
        n = int(rng.integers(1, 3))
        polys = [random_polytope(rng, n, int(rng.integers(2, 6))) for _ in range(m)]
        key = 'point_sets' if kind == 'pointset-bang-bang' else 'polytope_map'
        payload[key] = polys
        payload['selection'] = [random_interior(rng, poly) for poly in polys]
        if kind == 'integral-bang-bang':
            document['partition'] = {'block_of': [0] * m}
    elif kind in ('purify', 'density-step'):
        actions = int(rng.integers(2, 5))
        n = int(rng.integers(1, 3)) if kind == 'purify' else int(rng.integers(1, 4))
        payload['young_measure'] = {
            'actions': [f'a{i}' for i in range(actions)],
            'probabilities': random_young_measure(rng, m, actions),
        }
        payload['integrands' if kind == 'purify' else 'phis'] = random_family(rng, m, actions, n)
    elif kind == 'coarseness':
        payload['set'] = random_set(rng, weights, mode)

    document['command'] = command
    logger.debug(f'生成随机问题：{kind}，{m} 个单元，种子 {seed}')
    return command, document
