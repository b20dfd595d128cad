"""
文件操作工具
负责证书、树和报告等产物的读写
"""

import csv
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Sequence

from .exceptions import FileError


def ensure_directory(directory_path: str) -> str:
    """
    确保目录存在，如果不存在则创建

    Args:
        directory_path: 目录路径

    Returns:
        目录的绝对路径
    """
    try:
        path = Path(directory_path)
        path.mkdir(parents=True, exist_ok=True)
        return str(path.absolute())
    except Exception as e:
        raise FileError(f"创建目录失败: {directory_path} - {e}")


def safe_filename(filename: str, max_length: int = 255) -> str:
    """
    生成安全的文件名，替换路径分隔符等危险字符

    Args:
        filename: 原始文件名
        max_length: 最大文件名长度

    Returns:
        安全的文件名
    """
    unsafe_chars = '<>:"/\\|?* ,()'
    safe_name = filename
    for char in unsafe_chars:
        safe_name = safe_name.replace(char, '_')
    safe_name = safe_name.strip(' ._')

    if len(safe_name) > max_length:
        name, ext = os.path.splitext(safe_name)
        safe_name = name[:max_length - len(ext)] + ext

    return safe_name or "unnamed"


def get_file_hash(file_path: str, algorithm: str = 'sha256') -> str:
    """
    计算文件的哈希值

    Args:
        file_path: 文件路径
        algorithm: 哈希算法 ('md5', 'sha1', 'sha256')

    Returns:
        十六进制哈希值
    """
    if not Path(file_path).exists():
        raise FileError(f"文件不存在: {file_path}")

    try:
        hash_func = getattr(hashlib, algorithm.lower())()
        with open(file_path, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b""):
                hash_func.update(chunk)
        return hash_func.hexdigest()
    except Exception as e:
        raise FileError(f"计算文件哈希失败: {e}")


def _dumps(record: Any) -> str:
    # 固定键顺序和分隔符，保证相同输入逐字节相同
    return json.dumps(record, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def write_jsonl(file_path: str, records: Iterable[Dict[str, Any]]) -> int:
    """
    写入JSON-lines文件

    Returns:
        写入的记录数
    """
    ensure_directory(str(Path(file_path).parent))
    count = 0
    try:
        with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
            for record in records:
                f.write(_dumps(record))
                f.write('\n')
                count += 1
    except (OSError, TypeError, ValueError) as e:
        raise FileError(f"写入JSON-lines失败: {file_path} - {e}")
    return count


def read_jsonl(file_path: str) -> Iterator[Dict[str, Any]]:
    """逐行读取JSON-lines文件"""
    if not Path(file_path).exists():
        raise FileError(f"文件不存在: {file_path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise FileError(f"{file_path}:{line_no} JSON格式错误: {e}")
    except OSError as e:
        raise FileError(f"读取文件失败: {file_path} - {e}")


def write_json(file_path: str, payload: Dict[str, Any]) -> str:
    """写入格式化的JSON文件，返回绝对路径"""
    ensure_directory(str(Path(file_path).parent))
    try:
        with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(payload, f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write('\n')
    except (OSError, TypeError, ValueError) as e:
        raise FileError(f"写入JSON失败: {file_path} - {e}")
    return str(Path(file_path).absolute())


def read_json(file_path: str) -> Dict[str, Any]:
    """读取JSON文件"""
    if not Path(file_path).exists():
        raise FileError(f"文件不存在: {file_path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FileError(f"读取JSON失败: {file_path} - {e}")


def write_csv(file_path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """
    写入CSV报告

    Args:
        file_path: 输出路径
        header: 列名
        rows: 数据行

    Returns:
        写入的数据行数
    """
    ensure_directory(str(Path(file_path).parent))
    count = 0
    try:
        with open(file_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(list(header))
            for row in rows:
                writer.writerow(list(row))
                count += 1
    except OSError as e:
        raise FileError(f"写入CSV失败: {file_path} - {e}")
    return count


def read_csv(file_path: str) -> List[Dict[str, str]]:
    """读取CSV为字典列表"""
    if not Path(file_path).exists():
        raise FileError(f"文件不存在: {file_path}")
    try:
        with open(file_path, 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise FileError(f"读取CSV失败: {file_path} - {e}")
