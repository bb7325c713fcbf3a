"""
Модуль для генерации отчётов: текстовые таблицы и JSON
"""

import json
import logging
import math
import os
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from jinja2 import Template

from src.errors import ConfigError

logger = logging.getLogger(__name__)

REPORT_VERSION = '1.0.0'


def to_jsonable(value: Any) -> Any:
    """Приведение результата к типам JSON; рациональные числа - строками"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"Нечисловое значение {value} в отчёте")
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, 'to_dict'):
        return to_jsonable(value.to_dict())
    return str(value)


def dumps(report: Dict[str, Any]) -> str:
    """JSON с сортировкой ключей; повторный разбор и запись дают тот же текст"""
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False)


class ReportGenerator:
    """Класс для генерации отчётов"""

    def __init__(self, config):
        """Инициализация генератора отчётов"""
        self.config = config
        self.output_config = config.get_output_config()
        self.float_digits = int(self.output_config.get('float_digits', 17))

    @property
    def float_format(self) -> str:
        return f"%.{self.float_digits}g"

    def build(self, command: str, config: Dict[str, Any], results: List[Dict[str, Any]],
              verdict: str) -> Dict[str, Any]:
        """Отчёт {command, config, results, verdict, version}"""
        return to_jsonable({
            'command': command,
            'config': config,
            'results': results,
            'verdict': verdict,
            'version': REPORT_VERSION,
        })

    def render_json(self, report: Dict[str, Any]) -> str:
        return dumps(report)

    def render_text(self, report: Dict[str, Any]) -> str:
        sections = []
        for result in report.get('results', []):
            rows = result.get('rows') or []
            table = ''
            if rows:
                frame = pd.DataFrame(rows)
                table = frame.to_string(index=False, float_format=lambda v: self.float_format % v)
            scalars = {key: value for key, value in result.items()
                       if key not in ('rows', 'title') and not isinstance(value, (dict, list))}
            sections.append({'title': result.get('title', ''), 'scalars': scalars, 'table': table})
        return Template(self._get_text_template()).render(
            command=report.get('command'),
            config=report.get('config', {}),
            sections=sections,
            verdict=report.get('verdict'),
            version=report.get('version'),
            fmt=self._format_scalar,
        )

    def render(self, report: Dict[str, Any], output: str = 'text') -> str:
        if output == 'json':
            return self.render_json(report)
        if output == 'text':
            return self.render_text(report)
        raise ConfigError(f"Неизвестный формат вывода: {output}")

    def write(self, text: str, out_path: Optional[str] = None) -> Optional[str]:
        """Запись отчёта в файл; без пути - вывод в stdout"""
        if not out_path:
            print(text)
            return None
        directory = os.path.dirname(out_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(out_path, 'w', encoding='utf-8') as f:
            f.write(text + "\n")
        logger.info(f"Отчёт записан: {out_path}")
        return out_path

    def _format_scalar(self, value: Any) -> str:
        if isinstance(value, float):
            return self.float_format % value
        return str(value)

    def _get_text_template(self) -> str:
        """Шаблон текстового отчёта"""
        return """\
== finsler-engine {{ version }}: {{ command }} ==
{% for key, value in config|dictsort %}{% if value is not none and value is not mapping %}  {{ key }}: {{ value }}
{% endif %}{% endfor %}
{% for section in sections %}-- {{ section.title }} --
{% for key, value in section.scalars|dictsort %}  {{ key }}: {{ fmt(value) }}
{% endfor %}{% if section.table %}{{ section.table }}
{% endif %}
{% endfor %}Вердикт: {{ verdict }}"""
