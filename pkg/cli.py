#!/usr/bin/env python3
import argparse
import os
import sys
import logging

from src.logging_config import setup_logging
from src.errors import BangBangError, Codes, format_message
from src.commands import HANDLERS, run
from src.documents import load_document, read_problem, save_document
from src.instances import KINDS, random_problem
from src.verify import verify_documents

import config

logger = logging.getLogger(__name__)

VERSION = config.VERSION

BASE_DIR = os.path.dirname(os.path.abspath(__file__))

COMMANDS = tuple(HANDLERS) + ('verify', 'generate')

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


def print_banner():
    banner = f"""
    ██████╗  █████╗ ███╗   ██╗ ██████╗       ██████╗  █████╗ ███╗   ██╗ ██████╗
    ██╔══██╗██╔══██╗████╗  ██║██╔════╝       ██╔══██╗██╔══██╗████╗  ██║██╔════╝
    ██████╔╝███████║██╔██╗ ██║██║  ███╗█████╗██████╔╝███████║██╔██╗ ██║██║  ███╗
    ██╔══██╗██╔══██║██║╚██╗██║██║   ██║╚════╝██╔══██╗██╔══██║██║╚██╗██║██║   ██║
    ██████╔╝██║  ██║██║ ╚████║╚██████╔╝      ██████╔╝██║  ██║██║ ╚████║╚██████╔╝
    ╚═════╝ ╚═╝  ╚═╝╚═╝  ╚═══╝ ╚═════╝       ╚═════╝ ╚═╝  ╚═╝╚═╝  ╚═══╝ ╚═════╝
                                                                {VERSION}
    条件期望意义下的 Lyapunov 划分、bang-bang 原理与纯化工具
    """
    print(banner, file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(
        description='''
    条件期望 bang-bang 工具 - 在有限网格上构造并校验 Lyapunov 划分、极点选择与纯策略

    示例用法：
    1. 计算条件期望：
        python cli.py cond-exp -i problem.json

    2. 求 bang-bang 极点选择并保存报告：
        python cli.py bang-bang -i problem.json -o report.json

    3. 以精确有理数模式求纯化策略：
        python cli.py purify -i problem.json --exact

    4. 独立重算并校验一份报告：
        python cli.py verify -i problem.json --report report.json

    5. 生成随机问题：
        python cli.py generate --kind partition --seed 7 -o problem.json
        ''',
        formatter_class=argparse.RawTextHelpFormatter  # 保留换行
    )
    parser.add_argument('command',
                        choices=COMMANDS,
                        help='''
要执行的命令：
cond-exp / ce-measure: 条件期望与条件期望测度
partition / half-set / annihilator: Lyapunov 划分、半集、零化见证
bang-bang / integral-bang-bang / pointset-bang-bang: 极点选择
purify / density-step: Young 测度纯化
coarseness: μ-粗细判定
verify: 校验报告；generate: 生成随机问题
                        ''')
    parser.add_argument('-i', '--input',
                        default='-',
                        help='问题文档路径（JSON），"-" 表示标准输入（默认：-）')
    parser.add_argument('-o', '--output',
                        default='-',
                        help='报告输出路径，"-" 表示标准输出（默认：-）')
    parser.add_argument('--report',
                        default=None,
                        help='待校验的报告文档路径（仅用于 verify）')
    parser.add_argument('--tol',
                        type=float,
                        default=None,
                        help=f'等式校验容差 τ（默认：{config.TOLERANCE}，可被问题文档的 parameters 覆盖）')
    parser.add_argument('--exact',
                        action='store_true',
                        default=None,
                        help='使用精确有理数运算，所有等式按 == 判定')
    parser.add_argument('--mode',
                        choices=('splittable', 'atomic'),
                        default=None,
                        help='''
网格模式（覆盖问题文档）：
- splittable: 单元可切分，结果精确
- atomic: 单元不可切分，结果附带证书界
                        ''')
    parser.add_argument('--diagonal-only',
                        action='store_true',
                        default=None,
                        help='bang-bang 只匹配对角矩（D = n），缩小原子模式下的证书界')
    parser.add_argument('--seed',
                        type=int,
                        default=0,
                        help='随机种子（仅用于 generate，默认：0）')
    parser.add_argument('--kind',
                        choices=KINDS,
                        default='bang-bang',
                        help='generate 生成的问题类型（默认：bang-bang）')
    parser.add_argument('--nobanner',
                        action='store_true',
                        default=False,
                        help="不输出Banner")
    return parser


def _load(path, what):
    document = load_document(path)
    if document is None:
        logger.error(format_message(Codes.FILE_IO, f'无法读取{what}', path))
    return document


def _save(data, path):
    if not save_document(data, path):
        logger.error(format_message(Codes.FILE_IO, '保存输出失败', path))
        return EXIT_INTERNAL
    return EXIT_OK


def execute(args):
    if args.command == 'generate':
        command, document = random_problem(args.kind, seed=args.seed, mode=args.mode or 'splittable')
        logger.info(f'已生成 {args.kind} 问题，对应命令 {command}')
        return _save(document, args.output)

    document = _load(args.input, '问题文档')
    if document is None:
        return EXIT_INPUT

    if args.command == 'verify':
        if not args.report:
            logger.error(format_message(Codes.INVALID_ARGS, 'verify 需要 --report 参数'))
            return EXIT_INPUT
        report = _load(args.report, '报告文档')
        if report is None:
            return EXIT_INPUT
        return _save(verify_documents(document, report), args.output)

    declared = document.get('command') if isinstance(document, dict) else None
    if declared and declared != args.command:
        logger.warning(f'问题文档声明的命令为 {declared}，按命令行执行 {args.command}')
    problem = read_problem(document, tol=args.tol, exact=args.exact, mode=args.mode,
                           diagonal_only=args.diagonal_only)
    return _save(run(args.command, problem), args.output)


def main(argv=None):
    setup_logging(
        app_name="cli",
        log_dir=os.path.join(BASE_DIR, config.LOG_DIR),
        level=config.LOG_LEVEL,
        max_bytes=config.LOG_MAX_BYTES,
        backup_count=config.LOG_BACKUP_COUNT,
    )

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT

    if not args.nobanner: print_banner()

    try:
        return execute(args)
    except BangBangError as e:
        logger.error(str(e))
        return e.exit_status
    except Exception as e:
        logger.error(format_message(Codes.INTERNAL, '处理过程出错', str(e)))
        return EXIT_INTERNAL


if __name__ == '__main__':
    sys.exit(main())
