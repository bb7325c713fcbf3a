"""
Модуль конфигурации движка тензорного исчисления Финслера
"""

import copy
import logging
import os
from typing import Any, Dict

import yaml

logger = logging.getLogger(__name__)


class Config:
    """Класс для управления конфигурацией"""

    def __init__(self, config_path: str = "config.yaml"):
        """Инициализация конфигурации"""
        self.config_path = config_path
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Загрузка конфигурации из файла с дополнением значениями по умолчанию"""
        if not os.path.exists(self.config_path):
            # Создаём конфигурацию по умолчанию
            default_config = self._get_default_config()
            self._save_config(default_config)
            return default_config

        try:
            with open(self.config_path, 'r', encoding='utf-8') as file:
                loaded = yaml.safe_load(file) or {}
        except Exception as e:
            logger.error(f"Ошибка загрузки конфигурации: {e}")
            return self._get_default_config()
        if not isinstance(loaded, dict):
            logger.error(f"Конфигурация {self.config_path} должна быть словарём")
            return self._get_default_config()
        return self._merge(self._get_default_config(), loaded)

    @staticmethod
    def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(base)
        for key, value in override.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = Config._merge(merged[key], value)
            else:
                merged[key] = value
        return merged

    def _get_default_config(self) -> Dict[str, Any]:
        """Конфигурация по умолчанию"""
        return {
            'tolerances': {
                'atol': 1e-12,
                'rtol': 1e-9,
                'defect_tol': 1e-8,  # относительно масштаба доминирующего члена
                'homogeneity_rtol': 1e-12
            },
            'autodiff': {
                'x_order': 2,
                'y_order': 4,
                'residual_y_order': 5  # уравнение поля требует пятой производной G по y
            },
            'ratfun': {
                'gcd_max_terms': 512
            },
            'sampling': {
                'max_draws': 1000000,
                'workers': 4,
                'default_samples': 2000,
                'box': 1.0
            },
            'classify': {
                'min_extra_samples': 2,
                'fit_samples': 24
            },
            'output': {
                'format': 'text',  # text, json
                'float_digits': 17
            },
            'logging': {
                'level': 'INFO',
                'file': 'logs/finsler_engine.log'
            }
        }

    def _save_config(self, config: Dict[str, Any]):
        """Сохранение конфигурации в файл"""
        try:
            with open(self.config_path, 'w', encoding='utf-8') as file:
                yaml.dump(config, file, default_flow_style=False, allow_unicode=True)
        except Exception as e:
            logger.error(f"Ошибка сохранения конфигурации: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Получение значения конфигурации по ключу"""
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def set(self, key: str, value: Any):
        """Установка значения конфигурации"""
        keys = key.split('.')
        config = self.config

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value
        self._save_config(self.config)

    def override(self, key: str, value: Any):
        """Значение только на время запуска, без записи в файл"""
        if value is None:
            return
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    def get_tolerances_config(self) -> Dict[str, Any]:
        """Получение допусков"""
        return self.get('tolerances', {})

    def get_autodiff_config(self) -> Dict[str, Any]:
        """Получение порядков усечения джетов"""
        return self.get('autodiff', {})

    def get_ratfun_config(self) -> Dict[str, Any]:
        return self.get('ratfun', {})

    def get_sampling_config(self) -> Dict[str, Any]:
        """Получение конфигурации выборки"""
        return self.get('sampling', {})

    def get_classify_config(self) -> Dict[str, Any]:
        return self.get('classify', {})

    def get_output_config(self) -> Dict[str, Any]:
        """Получение конфигурации вывода"""
        return self.get('output', {})

    def get_logging_config(self) -> Dict[str, Any]:
        return self.get('logging', {})
