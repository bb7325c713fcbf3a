"""
Описание (α,β)-метрики и её JSON-формат

Коэффициенты α_ij(x) и b_i(x) задаются строками над x1..xn: целые числа,
дроби "p/q", операции + - * / ^. Для численного бэкенда допускаются
гладкие функции sqrt, exp, log и тригонометрия.
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy.polys.polyerrors import BasePolynomialError
from sympy.parsing.sympy_parser import (
    convert_xor, parse_expr, rationalize, standard_transformations,
)

from src.errors import ConfigError
from src.ratfun import MultiPoly

logger = logging.getLogger(__name__)

FAMILY_TAGS = ('generalized-m-kropina', 'm-kropina', 'kropina', 'pseudo-riemannian')

_ALLOWED_FUNCTIONS = ('sqrt', 'exp', 'log', 'sin', 'cos', 'tan', 'sinh', 'cosh', 'tanh')
_ALLOWED_CHARS = re.compile(r"^[0-9A-Za-z_+\-*/^().\s]*$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)


@lru_cache(maxsize=None)
def base_symbols(n: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f"x{i}") for i in range(1, n + 1))


@lru_cache(maxsize=None)
def _derivative_function(expr: sympy.Expr, n: int, index: Tuple[int, ...]):
    xs = base_symbols(n)
    derivative = expr
    for v, k in enumerate(index):
        if k:
            derivative = sympy.diff(derivative, xs[v], k)
    return sympy.lambdify(xs, derivative, 'math')


def _fraction(value: Any, name: str) -> Fraction:
    if isinstance(value, bool):
        raise ConfigError(f"Параметр {name} должен быть числом, получено {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"Параметр {name} не конечен: {value}")
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"Параметр {name} не является рациональным числом: {value!r}")
    raise ConfigError(f"Параметр {name} должен быть числом, получено {value!r}")


def format_fraction(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class CoefficientField:
    """Коэффициентная функция от x с канонической записью"""
    text: str
    expr: sympy.Expr = field(compare=False)
    n: int
    poly: Optional[MultiPoly] = field(default=None, compare=False)

    @property
    def is_polynomial(self) -> bool:
        return self.poly is not None

    @property
    def is_zero(self) -> bool:
        return self.expr == 0

    def evaluate(self, x: Sequence[float]) -> float:
        return float(_derivative_function(self.expr, self.n, (0,) * self.n)(*[float(v) for v in x]))

    def numeric_taylor(self, x: Sequence[float], index: Tuple[int, ...]) -> float:
        """Коэффициент Тейлора d^a f(x)/a!"""
        value = _derivative_function(self.expr, self.n, tuple(index))(*[float(v) for v in x])
        scale = 1
        for k in index:
            scale *= math.factorial(k)
        return float(value) / scale

    def exact_taylor(self, x: Sequence[Fraction], index: Tuple[int, ...]) -> Fraction:
        if self.poly is None:
            raise ValueError(f"Коэффициент {self.text} не является многочленом")
        derivative = self.poly
        scale = 1
        for v, k in enumerate(index):
            for _ in range(k):
                derivative = derivative.diff(v)
            scale *= math.factorial(k)
        values = list(x) + [Fraction(0)] * self.n
        return derivative.evaluate(values) / scale


def parse_coefficient(text: Union[str, int], n: int) -> CoefficientField:
    """Разбор строки коэффициента после проверки допустимых символов и имён"""
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ConfigError(f"Коэффициент должен быть строкой, получено {text!r}")
    source = str(text).strip()
    if not source:
        raise ConfigError("Пустое выражение коэффициента")
    if not _ALLOWED_CHARS.match(source):
        raise ConfigError(f"Недопустимые символы в выражении {source!r}")
    xs = base_symbols(n)
    names = {str(symbol): symbol for symbol in xs}
    for token in _NAME.findall(source):
        if token not in names and token not in _ALLOWED_FUNCTIONS:
            raise ConfigError(f"Неизвестное имя {token!r} в выражении {source!r} (ожидаются x1..x{n})")
    local_dict: Dict[str, Any] = dict(names)
    local_dict.update({name: getattr(sympy, name) for name in _ALLOWED_FUNCTIONS})
    try:
        expr = parse_expr(source, local_dict=local_dict, transformations=_TRANSFORMATIONS)
    except Exception as e:
        raise ConfigError(f"Не удалось разобрать выражение {source!r}: {e}")
    expr = sympy.expand(sympy.sympify(expr))
    return _coefficient_from_expr(expr, n)


def _coefficient_from_expr(expr: sympy.Expr, n: int) -> CoefficientField:
    xs = base_symbols(n)
    poly = None
    try:
        candidate = sympy.Poly(expr, *xs)
        if candidate.domain.is_ZZ or candidate.domain.is_QQ:
            terms = {tuple(monom) + (0,) * n: Fraction(str(coeff)) for monom, coeff in candidate.terms()}
            poly = MultiPoly.from_terms(n, terms)
    except BasePolynomialError:
        poly = None
    if poly is not None:
        text = poly.to_string()
    else:
        text = sympy.sstr(expr).replace('**', '^')
    return CoefficientField(text=text, expr=expr, n=n, poly=poly)


@dataclass(frozen=True)
class Family:
    """Параметры φ(s) = ± s^(-m) (c + r s^2)^((1+m)/2)"""
    tag: str
    m: Fraction
    c: Fraction = Fraction(1)
    r: Fraction = Fraction(0)
    sign: int = 1

    def __post_init__(self):
        for name in ('m', 'c', 'r'):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        self.validate()

    def validate(self):
        if self.tag not in FAMILY_TAGS:
            raise ConfigError(f"Неизвестное семейство {self.tag!r}; допустимы {', '.join(FAMILY_TAGS)}")
        if self.c == 0:
            raise ConfigError("c = 0 has to be excluded: при c = 0 метрика вырождается в ±rβ")
        if self.m == -1:
            raise ConfigError("m = -1 исключено: метрика вырождается в ±β")
        if self.tag == 'pseudo-riemannian':
            if self.m != 0:
                raise ConfigError("Псевдоримановское семейство допускает только m = 0")
        elif self.m == 0:
            raise ConfigError("m = 0 допускается только для семейства pseudo-riemannian")
        if self.tag == 'kropina' and (self.m != 1 or self.r != 0):
            raise ConfigError("Метрика Кропиной требует m = 1 и r = 0")
        if self.tag == 'm-kropina' and self.r != 0:
            raise ConfigError("m-метрика Кропиной требует r = 0")
        if self.sign not in (1, -1):
            raise ConfigError(f"Знак ветви должен быть +1 или -1, получено {self.sign}")

    @property
    def is_integer_m(self) -> bool:
        return self.m.denominator == 1

    @property
    def is_even_m(self) -> bool:
        return self.is_integer_m and self.m.numerator % 2 == 0

    @property
    def is_odd_m(self) -> bool:
        return self.is_integer_m and self.m.numerator % 2 == 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tag': self.tag,
            'm': format_fraction(self.m),
            'c': format_fraction(self.c),
            'r': format_fraction(self.r),
            'sign': self.sign,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Family":
        if not isinstance(data, dict) or 'tag' not in data:
            raise ConfigError("Поле family должно содержать tag")
        tag = data['tag']
        defaults = {'kropina': {'m': 1, 'r': 0}, 'm-kropina': {'r': 0}, 'pseudo-riemannian': {'m': 0}}
        merged = dict(defaults.get(tag, {}))
        merged.update({key: value for key, value in data.items() if key != 'tag'})
        if 'm' not in merged:
            raise ConfigError(f"Для семейства {tag} не задан параметр m")
        sign = merged.get('sign', 1)
        if isinstance(sign, str):
            sign = {'+': 1, '-': -1}.get(sign.strip(), sign)
        try:
            sign = int(sign)
        except (TypeError, ValueError):
            raise ConfigError(f"Знак ветви должен быть +1 или -1, получено {sign!r}")
        return cls(
            tag=tag,
            m=_fraction(merged['m'], 'm'),
            c=_fraction(merged.get('c', 1), 'c'),
            r=_fraction(merged.get('r', 0), 'r'),
            sign=sign,
        )


@dataclass(frozen=True)
class MetricSpec:
    """(α,β)-метрика: α_ij(x), b_i(x) и параметры семейства"""
    dimension: int
    alpha: Tuple[Tuple[CoefficientField, ...], ...]
    beta: Tuple[CoefficientField, ...]
    family: Family
    name: str = 'custom'

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ConfigError(f"Размерность должна быть не меньше 2, получено {n}")
        if len(self.alpha) != n or any(len(row) != n for row in self.alpha):
            raise ConfigError(f"Матрица alpha должна иметь размер {n}x{n}")
        if len(self.beta) != n:
            raise ConfigError(f"Форма beta должна иметь {n} компонент")
        for i in range(n):
            for j in range(i + 1, n):
                if sympy.expand(self.alpha[i][j].expr - self.alpha[j][i].expr) != 0:
                    raise ConfigError(f"Матрица alpha несимметрична: ({i + 1},{j + 1})")
        if all(component.is_zero for component in self.beta):
            raise ConfigError("1-форма beta тождественно равна нулю")

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def is_polynomial(self) -> bool:
        fields = [entry for row in self.alpha for entry in row] + list(self.beta)
        return all(entry.is_polynomial for entry in fields)

    def with_family(self, **changes) -> "MetricSpec":
        data = self.family.to_dict()
        data.update(changes)
        return replace(self, family=Family.from_dict(data))

    def alpha_at(self, x: Sequence[float]) -> np.ndarray:
        return np.array([[entry.evaluate(x) for entry in row] for row in self.alpha])

    def beta_at(self, x: Sequence[float]) -> np.ndarray:
        return np.array([entry.evaluate(x) for entry in self.beta])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dimension': self.dimension,
            'alpha': [[entry.text for entry in row] for row in self.alpha],
            'beta': [entry.text for entry in self.beta],
            'family': self.family.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = 'custom') -> "MetricSpec":
        if not isinstance(data, dict):
            raise ConfigError("Конфигурация метрики должна быть JSON-объектом")
        for key in ('dimension', 'alpha', 'beta', 'family'):
            if key not in data:
                raise ConfigError(f"В конфигурации метрики нет поля {key!r}")
        n = data['dimension']
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"dimension должно быть целым, получено {n!r}")
        if not isinstance(data['alpha'], list) or not all(isinstance(row, list) for row in data['alpha']):
            raise ConfigError("alpha должно быть списком списков")
        if not isinstance(data['beta'], list):
            raise ConfigError("beta должно быть списком")
        alpha = tuple(tuple(parse_coefficient(entry, n) for entry in row) for row in data['alpha'])
        beta = tuple(parse_coefficient(entry, n) for entry in data['beta'])
        return cls(dimension=n, alpha=alpha, beta=beta, family=Family.from_dict(data['family']), name=name)


def metric_from_json(text: str, name: str = 'custom') -> MetricSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON метрики: {e}")
    return MetricSpec.from_dict(data, name=name)


def metric_to_json(spec: MetricSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True)


def load_metric(path: str) -> MetricSpec:
    """Загрузка метрики из JSON-файла"""
    try:
        with open(path, 'r', encoding='utf-8') as file:
            text = file.read()
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать файл метрики {path}: {e}")
    spec = metric_from_json(text, name=path)
    logger.info(f"Загружена метрика {path}: n={spec.dimension}, семейство {spec.family.tag}, m={spec.family.m}")
    return spec


def dump_metric(spec: MetricSpec, path: str):
    with open(path, 'w', encoding='utf-8') as file:
        file.write(metric_to_json(spec) + "\n")
