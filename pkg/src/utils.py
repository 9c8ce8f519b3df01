import os
import sys
import logging
from .errors import Codes, format_message

logger = logging.getLogger(__name__)

def read_text_file(input_path):
    """
    读取 UTF-8 文本文件，路径为 '-' 时读取标准输入

    Args:
        input_path (str): 输入文件路径

    Returns:
        str: 文件内容，失败时返回 None
    """
    try:
        if input_path == '-':
            return sys.stdin.read()
        logger.debug(f'开始读取文件: {input_path}')
        with open(input_path, 'r', encoding='utf-8') as f:
            return f.read()
    except Exception as e:
        logger.error(format_message(Codes.FILE_IO, '读取文件时出错', f'{input_path}: {e}'))
        return None

def save_text_to_file(text, output_path):
    """
    将文本保存到指定文件，路径为 '-' 时写到标准输出

    Args:
        text (str): 要保存的文本内容
        output_path (str): 输出文件路径

    Returns:
        bool: 保存是否成功
    """
    try:
        if output_path == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
            return True
        logger.debug(f'开始保存文本到文件，输出路径: {output_path}')
        # 确保目标目录存在
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.debug(f'文本保存完成，文件路径: {output_path}')
        return True
    except Exception as e:
        logger.error(format_message(Codes.FILE_IO, '保存文本到文件时出错', str(e)))
        return None
