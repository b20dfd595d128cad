"""
自定义异常类
用于badweave项目的错误处理
"""

from typing import Any, Dict, Optional


class BadweaveError(Exception):
    """badweave基础异常类"""
    pass


class ConfigError(BadweaveError):
    """配置相关异常"""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class ValidationError(BadweaveError):
    """前置条件验证异常"""
    pass


class ArithmeticDomainError(ValidationError):
    """精确算术不支持的组合（例如不同的根号下数）"""
    pass


class FalsificationError(BadweaveError):
    """定理级检查失败，附带可序列化的反例"""

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.witness = witness or {}


class EmptyCollectionError(BadweaveError):
    """区间集合为空"""

    def __init__(self, message: str, level: Optional[int] = None):
        super().__init__(message)
        self.level = level


class FileError(BadweaveError):
    """文件操作异常"""
    pass
