import logging
import os
import sys
from logging.handlers import RotatingFileHandler

# 按块求解在线程池中进行，日志里带上线程名便于对照块序号
LOG_FORMAT = "%(levelname)s | %(threadName)s | %(name)s | %(message)s"


def _handler(handler, level, formatter):
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(app_name, log_dir="logs", level="INFO", max_bytes=5_000_000, backup_count=3,
                  stream=None):
    """
    配置根日志：控制台（默认 stderr，stdout 留给 JSON 报告）与滚动日志文件

    已有处理器时不重复配置；log_dir 为空时只输出到控制台。

    Returns:
        str: 日志文件路径，未写文件时为 None
    """
    root_logger = logging.getLogger()
    if root_logger.handlers:
        return None

    log_level = getattr(logging, str(level).upper(), logging.INFO)
    root_logger.setLevel(log_level)
    formatter = logging.Formatter(LOG_FORMAT)
    root_logger.addHandler(_handler(logging.StreamHandler(stream or sys.stderr), log_level, formatter))

    if not log_dir:
        return None
    os.makedirs(log_dir, exist_ok=True)
    file_path = os.path.join(log_dir, f"{app_name}.log")
    root_logger.addHandler(_handler(
        RotatingFileHandler(file_path, maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8"),
        log_level, formatter))
    return file_path
