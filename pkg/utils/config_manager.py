"""
配置管理工具
支持YAML/JSON配置文件、环境变量默认值和键路径校验
"""

import copy
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

import config as defaults
from .exceptions import ConfigError


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self._config: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self):
        """加载默认配置，再叠加配置文件"""
        self._config = self._get_default_config()

        if not self.config_file:
            return

        config_path = Path(self.config_file)
        if not config_path.exists():
            raise ConfigError(f"配置文件不存在: {self.config_file}")

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"配置文件格式错误: {e}")
        except OSError as e:
            raise ConfigError(f"读取配置文件失败: {e}")

        if not isinstance(loaded, dict):
            raise ConfigError("配置文件顶层必须是映射")
        self._merge(self._config, loaded, prefix='')

    def _get_default_config(self) -> Dict[str, Any]:
        """获取默认配置"""
        return {
            'construction': copy.deepcopy(defaults.CONSTRUCTION_SETTINGS),
            'verification': copy.deepcopy(defaults.VERIFICATION_SETTINGS),
            'sweep': copy.deepcopy(defaults.SWEEP_SETTINGS),
            'runtime': {
                'workers': defaults.BADWEAVE_THREADS
            },
            'logging': {
                'level': defaults.LOG_LEVEL,
                'dir': defaults.LOG_DIR
            },
            'output': {
                'dir': defaults.OUTPUT_DIR
            }
        }

    def _merge(self, target: Dict[str, Any], source: Dict[str, Any], prefix: str):
        """把 source 合并进 target，未知键报错并给出完整键路径"""
        for key, value in source.items():
            path = f"{prefix}{key}"
            if key not in target:
                raise ConfigError("未知配置项", key_path=path)
            if isinstance(target[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError("应为映射", key_path=path)
                self._merge(target[key], value, prefix=f"{path}.")
            else:
                target[key] = value

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置值，支持点号分隔的键路径

        Args:
            key: 配置键，支持 'section.key' 格式
            default: 默认值

        Returns:
            配置值或默认值
        """
        value = self._config
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any):
        """
        设置配置值，只允许已知键

        Args:
            key: 配置键，支持 'section.key' 格式
            value: 配置值
        """
        keys = key.split('.')
        node = self._config
        for depth, k in enumerate(keys[:-1]):
            if not isinstance(node.get(k), dict):
                raise ConfigError("未知配置项", key_path='.'.join(keys[:depth + 1]))
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError("未知配置项", key_path=key)
        node[keys[-1]] = value

    def save(self, file_path: Optional[str] = None):
        """
        保存配置到文件

        Args:
            file_path: 保存路径，默认使用初始化时的配置文件
        """
        save_path = file_path or self.config_file
        if not save_path:
            raise ConfigError("没有可保存的配置文件路径")
        try:
            with open(save_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(self._config, f, default_flow_style=False,
                               allow_unicode=True, indent=2, sort_keys=True)
        except OSError as e:
            raise ConfigError(f"保存配置文件失败: {e}")

    def reload(self):
        """重新加载配置文件"""
        self._load_config()

    def get_all(self) -> Dict[str, Any]:
        """获取所有配置"""
        return copy.deepcopy(self._config)




# 全局配置实例
_config_manager: Optional[ConfigManager] = None


def get_config(config_file: Optional[str] = None) -> ConfigManager:
    """
    获取全局配置管理器实例

    Args:
        config_file: 配置文件路径

    Returns:
        ConfigManager实例
    """
    global _config_manager
    if _config_manager is None or (config_file and config_file != _config_manager.config_file):
        _config_manager = ConfigManager(config_file)
    return _config_manager


def reload_config():
    """重新加载全局配置"""
    global _config_manager
    if _config_manager:
        _config_manager.reload()
