"""
问题文档与报告文档的 JSON 读写

数值可以是十进制浮点数，也可以是精确有理数 {"num": int, "den": int}；
规范序列化：indent=2、键排序、UTF-8、末尾换行。
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

import config
from .arith import Arith
from .condexp import SimpleFunction
from .errors import SchemaError
from .spaces import BlockPartition, RefinedSet, build_grid
from .utils import read_text_file, save_text_to_file

logger = logging.getLogger(__name__)


def _object_hook(obj):
    if set(obj) == {'num', 'den'}:
        num, den = obj['num'], obj['den']
        if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool) or den == 0:
            raise SchemaError('有理数必须是 {"num": 整数, "den": 非零整数}', repr(obj))
        return Fraction(num, den)
    return obj


def _reject_constant(name):
    raise SchemaError('不允许非有限数值', name)


def loads(text):
    try:
        return json.loads(text, object_hook=_object_hook, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SchemaError('JSON 解析失败', str(e)) from e


def plain(value):
    """numpy 数组与标量转换为 Python 原生结构，Fraction 保留"""
    if isinstance(value, np.ndarray):
        if value.ndim == 0:
            return plain(value.item())
        return [plain(v) for v in value.tolist()] if value.dtype != object else [plain(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _encode(value):
    if isinstance(value, Fraction):
        return {'num': value.numerator, 'den': value.denominator}
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


def dumps(data):
    return json.dumps(_encode(plain(data)), indent=2, sort_keys=True, ensure_ascii=False,
                      allow_nan=False) + '\n'


def digest(document):
    return hashlib.sha256(dumps(document).encode('utf-8')).hexdigest()


def load_document(path):
    text = read_text_file(path)
    if text is None:
        return None
    return loads(text)


def save_document(data, path):
    return save_text_to_file(dumps(data), path)


@dataclass(frozen=True, eq=False)
class Problem:
    grid: object
    partition: BlockPartition
    payload: dict
    parameters: dict
    document: dict
    digest: str

    @property
    def arith(self):
        return self.grid.arith


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f'缺少字段 {key}', where)
    return mapping[key]


def read_problem(document, tol=None, exact=None, mode=None, diagonal_only=None):
    """
    解析问题文档，命令行参数优先于文档内的 parameters

    Returns:
        Problem: 网格、块划分、载荷与生效参数
    """
    if not isinstance(document, dict):
        raise SchemaError('问题文档必须是 JSON 对象')
    space = _require(document, 'space', '顶层')
    weights = _require(space, 'weights', 'space')
    if not isinstance(weights, list):
        raise SchemaError('space.weights 必须是数组')
    params = document.get('parameters') or {}
    if not isinstance(params, dict):
        raise SchemaError('parameters 必须是 JSON 对象')
    tol = float(params.get('tol', config.TOLERANCE)) if tol is None else float(tol)
    exact = bool(params.get('exact', False)) if exact is None else bool(exact)
    diagonal_only = bool(params.get('diagonal_only', False)) if diagonal_only is None else bool(diagonal_only)
    mode = space.get('mode', 'splittable') if mode is None else mode
    if not tol > 0:
        raise SchemaError('容差必须为正', f'tol={tol}')

    arith = Arith(exact=exact, tol=tol)
    grid = build_grid(weights, mode, arith)
    partition = document.get('partition')
    if partition is None:
        C = BlockPartition.trivial(grid.size)
    elif 'blocks' in partition:
        C = BlockPartition.from_blocks(partition['blocks'], grid.size)
    else:
        C = BlockPartition(_require(partition, 'block_of', 'partition'))
    C.check(grid)
    for b, mass in enumerate(C.block_masses(grid)):
        if not mass > 0:
            raise SchemaError('块质量必须为正', f'block={b}')

    payload = document.get('payload') or {}
    if not isinstance(payload, dict):
        raise SchemaError('payload 必须是 JSON 对象')
    parameters = {'tol': tol, 'exact': exact, 'mode': grid.mode.value, 'diagonal_only': diagonal_only}
    logger.debug(f'读取问题：{grid.size} 个单元，{C.block_count} 个块，参数 {parameters}')
    return Problem(grid, C, payload, parameters, document, digest(document))


def function_of(problem, key, required=True):
    values = problem.payload.get(key)
    if values is None:
        if required:
            raise SchemaError(f'payload 缺少字段 {key}')
        return None
    return SimpleFunction.from_values(values, problem.grid)


def set_of(problem, key='set', value=None):
    """解析 (cell, offset, mass) 三元组列表；缺省为 Ω"""
    triples = problem.payload.get(key) if value is None else value
    if triples is None:
        return RefinedSet.whole(problem.grid)
    return parse_set(triples, problem.grid)


def parse_set(triples, grid):
    if not isinstance(triples, list):
        raise SchemaError('集合必须是 (cell, offset, mass) 三元组数组')
    parsed = []
    for item in triples:
        if not isinstance(item, list) or len(item) != 3 or not isinstance(item[0], int):
            raise SchemaError('集合元素必须是 [cell, offset, mass]', repr(item))
        offset, mass = grid.arith.number(item[1]), grid.arith.number(item[2])
        if mass < 0:
            raise SchemaError('集合的质量不能为负', repr(item))
        parsed.append((item[0], offset, mass))
    return RefinedSet(grid.size, tuple(parsed)).check(grid)


def encode_set(E):
    return [list(t) for t in E.intervals]

