"""
报告校验：由问题文档与报告 outputs 经 oracle 独立重算每一项等式，
与报告中声明的 lhs、rhs、deviation 逐项比对，并要求 deviation ≤ bound
"""
import logging

import config
from .commands import HANDLERS, recompute_checks
from .documents import read_problem
from .errors import Codes, SchemaError, VerificationError

logger = logging.getLogger(__name__)


def problem_for_report(document, report):
    """按报告记录的生效参数重新解析问题文档"""
    if not isinstance(report, dict):
        raise SchemaError('报告文档必须是 JSON 对象')
    params = report.get('parameters')
    if not isinstance(params, dict):
        raise SchemaError('报告缺少 parameters')
    return read_problem(document, tol=params.get('tol'), exact=params.get('exact'),
                        mode=params.get('mode'), diagonal_only=params.get('diagonal_only'))


def _same(arith, claimed, recomputed):
    claimed = arith.array(claimed)
    recomputed = arith.array(recomputed)
    if claimed.shape != recomputed.shape:
        return False
    return arith.close(claimed, recomputed)


def verify(problem, report):
    """
    校验一份报告

    Args:
        problem (Problem): 按报告参数解析的问题
        report (dict): 报告文档

    Returns:
        dict: 校验报告（verified_command、校验项数、输入摘要）

    Raises:
        VerificationError: 摘要不符、校验项不符或超出界
    """
    arith = problem.arith
    if report.get('input_digest') != problem.digest:
        raise VerificationError('输入摘要不一致，报告不是由该问题文档生成',
                                f'report={report.get("input_digest")} problem={problem.digest}',
                                code=Codes.DIGEST_MISMATCH)
    command = report.get('command')
    if command not in HANDLERS:
        raise SchemaError('报告中的命令未知', repr(command))
    outputs = report.get('outputs')
    claimed = report.get('checks')
    if not isinstance(outputs, dict) or not isinstance(claimed, list):
        raise SchemaError('报告缺少 outputs 或 checks')

    try:
        recomputed = recompute_checks(command, problem, outputs)
    except (ValueError, TypeError, IndexError) as e:
        raise VerificationError('报告 outputs 无法重算', str(e)) from e

    names = [c.get('name') if isinstance(c, dict) else None for c in claimed]
    expected = [c['name'] for c in recomputed]
    if names != expected:
        raise VerificationError('校验项列表不一致', f'report={names} recomputed={expected}')

    for mine, theirs in zip(recomputed, claimed):
        name = mine['name']
        for field in ('lhs', 'rhs', 'deviation', 'bound'):
            try:
                same = _same(arith, theirs.get(field), mine[field])
            except (ValueError, TypeError) as e:
                raise VerificationError(f'校验项 {name} 的 {field} 无法解析', str(e)) from e
            if not same:
                raise VerificationError(f'校验项 {name} 的 {field} 与重算结果不符')
        deviation = arith.number(mine['deviation'])
        bound = arith.number(mine['bound'])
        if not arith.within(deviation, bound):
            raise VerificationError(f'校验项 {name} 超出界', f'deviation={deviation} bound={bound}')
        logger.debug(f'校验项 {name} 通过：{deviation} ≤ {bound}')

    logger.info(f'报告校验通过：{command}，共 {len(recomputed)} 项')
    return {
        'command': 'verify',
        'version': config.VERSION,
        'verified_command': command,
        'input_digest': problem.digest,
        'checks': len(recomputed),
        'max_deviation': max((abs(float(c['deviation'])) for c in recomputed), default=0.0),
    }


def verify_documents(document, report):
    return verify(problem_for_report(document, report), report)
