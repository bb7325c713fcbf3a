#!/usr/bin/env python3
"""
Движок тензорного исчисления Финслера для обобщённых метрик m-Кропиной
Точный и численный расчёт геометрических объектов, классификация и проверка примеров
"""

import logging
import os
import sys
from typing import Optional, Sequence

from src.cli import RunConfig, failure_report, parse_args, run
from src.config import Config
from src.errors import EngineError
from src.report_generator import ReportGenerator, dumps

logger = logging.getLogger(__name__)


def setup_logging(config: Config):
    """Настройка логирования по секции logging"""
    logging_config = config.get_logging_config()
    log_file = logging_config.get('file', 'logs/finsler_engine.log')
    directory = os.path.dirname(log_file)
    if directory:
        os.makedirs(directory, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, str(logging_config.get('level', 'INFO')).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stderr)
        ]
    )


class FinslerEngine:
    """Основной класс: конфигурация, запуск команды и вывод отчёта"""

    def __init__(self, config_path: str = "config.yaml"):
        """Инициализация движка"""
        self.config = Config(config_path)
        self.report_generator = ReportGenerator(self.config)

    def output_format(self, run_config: RunConfig) -> str:
        return run_config.output or self.config.get('output.format', 'text')

    def execute(self, run_config: RunConfig) -> int:
        """Выполнение команды; код выхода 0 - вердикт Holds, 1 - Fails, 2 - ошибка"""
        try:
            result = run(run_config, self.config)
            report = self.report_generator.build(**result.report)
            text = self.report_generator.render(report, self.output_format(run_config))
        except EngineError as e:
            logger.error(f"Команда {run_config.command} прервана: {e}")
            self.report_generator.write(dumps(failure_report(run_config.command, e)), run_config.out_path)
            return 2
        self.report_generator.write(text, run_config.out_path)
        return result.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Главная функция"""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        run_config = parse_args(argv)
    except EngineError as e:
        command = next((arg for arg in argv if not arg.startswith('-')), 'unknown')
        print(dumps(failure_report(command, e)))
        return 2

    engine = FinslerEngine(run_config.config_path)
    setup_logging(engine.config)
    return engine.execute(run_config)


if __name__ == "__main__":
    sys.exit(main())
