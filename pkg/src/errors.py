"""
Иерархия исключений движка финслеровой геометрии
"""

from typing import Any, Dict, Optional


class EngineError(Exception):
    """Базовое исключение движка; context хранит команду, точку и объект"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def with_context(self, **context: Any) -> "EngineError":
        """Дополняет контекст, не перетирая уже известные поля"""
        for key, value in context.items():
            self.context.setdefault(key, value)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            'type': type(self).__name__,
            'message': self.message,
            'context': {key: str(value) for key, value in sorted(self.context.items())},
        }

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ', '.join(f"{key}={value}" for key, value in sorted(self.context.items()))
        return f"{self.message} [{details}]"


class DivisionByZero(EngineError):
    pass


class PerfectSquareRadicand(EngineError):
    pass


class DomainViolation(EngineError):
    pass


class DegenerateMetric(EngineError):
    pass


class SingularDenominator(EngineError):
    """Вырожденный знаменатель замкнутой формулы (Q, Theta, Psi, флаг)"""

    def __init__(self, which: str, message: Optional[str] = None,
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message or f"Знаменатель {which} обращается в ноль", context)
        self.which = which
        self.context.setdefault('which', which)


class DegenerateFlag(EngineError):
    pass


class DimensionMismatch(EngineError):
    pass


class EmptyCone(EngineError):
    pass


class InsufficientSamples(EngineError):
    pass


class ExactBackendUnavailable(EngineError):
    pass


class ConfigError(EngineError):
    pass


class TruncationOrderExhausted(EngineError):
    pass


class CrossCheckFailed(EngineError):
    pass
