"""
badweave 工具模块
包含日志、配置、异常和文件工具
"""

__version__ = "0.1.0"
