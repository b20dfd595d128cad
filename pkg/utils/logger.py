"""
日志记录工具

模块 logger 只带控制台输出；一次命令运行的完整日志由 setup_project_logging
挂在根 logger 上，写到输出目录中的 <子命令>.log，与该次运行的产物放在一起。
"""

import logging
import os
from pathlib import Path
from typing import List, Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# setup_project_logging 挂上的处理器，重复调用时先关闭
_run_handlers: List[logging.Handler] = []


def _level(name: Optional[str]) -> int:
    return getattr(logging, (name or os.getenv('LOG_LEVEL', 'INFO')).upper(), logging.INFO)


def _file_handler(path: Path, level: int, mode: str = 'a') -> logging.FileHandler:
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode=mode, encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    return handler


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    获取带控制台输出的 logger

    Args:
        name: logger名称，通常使用__name__
        level: 日志级别，默认读取环境变量LOG_LEVEL
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    log_level = _level(level)
    logger.setLevel(log_level)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)
    return logger


def run_log_path(out_dir: str, command: str) -> Path:
    """一次运行的日志文件：<out_dir>/<command>.log"""
    return Path(out_dir) / f"{command}.log"


def setup_project_logging(level: str = 'INFO', log_dir: Optional[str] = None,
                          run_log: Optional[Path] = None) -> List[Path]:
    """
    设置项目级别的日志文件

    Args:
        level: 根logger的级别
        log_dir: 长期日志目录；给出时追加写入 badweave.log 与 error.log（仅 ERROR）
        run_log: 本次运行的日志文件，每次运行覆盖

    Returns:
        实际写入的日志文件路径
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(_level(level))

    while _run_handlers:
        handler = _run_handlers.pop()
        root_logger.removeHandler(handler)
        handler.close()

    paths: List[Path] = []
    if run_log is not None:
        _run_handlers.append(_file_handler(Path(run_log), logging.DEBUG, mode='w'))
        paths.append(Path(run_log))
    if log_dir:
        paths.append(Path(log_dir) / 'badweave.log')
        _run_handlers.append(_file_handler(paths[-1], logging.DEBUG))
        _run_handlers.append(_file_handler(Path(log_dir) / 'error.log', logging.ERROR))

    for handler in _run_handlers:
        root_logger.addHandler(handler)
    return paths
