"""
Численные усечённые ряды Тейлора (джеты) по базе x и слою y

Коэффициент джета при мультииндексе (a, b) равен производной
d^a_x d^b_y f / (a! b!) в точке разложения.
"""

import itertools
import logging
import math
import numbers
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import binom

from src.errors import DimensionMismatch, DivisionByZero, DomainViolation, TruncationOrderExhausted

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


def multi_indices(n: int, order: int) -> List[MultiIndex]:
    """Мультииндексы длины n с суммой не выше order, по возрастанию степени"""
    result = []
    for total in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            index = [0] * n
            for v in combo:
                index[v] += 1
            result.append(tuple(index))
    return result


def _sub_indices(index: MultiIndex):
    return itertools.product(*(range(k + 1) for k in index))


class JetSpace:
    """Плотное пространство коэффициентов с порядками (ox, oy) и таблицами умножения"""

    def __init__(self, n: int, x_order: int, y_order: int):
        self.n = n
        self.x_order = x_order
        self.y_order = y_order
        self.x_indices = multi_indices(n, x_order)
        self.y_indices = multi_indices(n, y_order)
        self.indices = [(a, b) for a in self.x_indices for b in self.y_indices]
        self.position: Dict[Tuple[MultiIndex, MultiIndex], int] = {
            key: k for k, key in enumerate(self.indices)
        }
        self.size = len(self.indices)
        self._mul_tables = None
        self._dx_maps: Dict[int, Tuple["JetSpace", np.ndarray, np.ndarray]] = {}
        self._dy_maps: Dict[int, Tuple["JetSpace", np.ndarray, np.ndarray]] = {}
        self._restrictions: Dict[Tuple[int, int], np.ndarray] = {}

    @property
    def mul_tables(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Тройки (i, j, k): коэффициент i одного множителя на j другого даёт вклад в k"""
        if self._mul_tables is None:
            left, right, target = [], [], []
            for k, (a, b) in enumerate(self.indices):
                for a1 in _sub_indices(a):
                    a2 = tuple(p - q for p, q in zip(a, a1))
                    for b1 in _sub_indices(b):
                        b2 = tuple(p - q for p, q in zip(b, b1))
                        left.append(self.position[(a1, b1)])
                        right.append(self.position[(a2, b2)])
                        target.append(k)
            self._mul_tables = (np.asarray(left, dtype=np.intp),
                                np.asarray(right, dtype=np.intp),
                                np.asarray(target, dtype=np.intp))
            logger.debug(f"Таблица умножения {self}: {len(target)} пар")
        return self._mul_tables

    def restriction(self, x_order: int, y_order: int) -> np.ndarray:
        """Позиции коэффициентов меньшего пространства внутри текущего"""
        key = (x_order, y_order)
        if key not in self._restrictions:
            target = jet_space(self.n, x_order, y_order)
            self._restrictions[key] = np.asarray(
                [self.position[index] for index in target.indices], dtype=np.intp
            )
        return self._restrictions[key]

    def _derivative_map(self, v: int, along_x: bool):
        cache = self._dx_maps if along_x else self._dy_maps
        if v not in cache:
            if along_x and self.x_order == 0 or not along_x and self.y_order == 0:
                raise TruncationOrderExhausted(
                    f"Производная по {'x' if along_x else 'y'}{v + 1} превышает порядок усечения {self}"
                )
            if along_x:
                target = jet_space(self.n, self.x_order - 1, self.y_order)
            else:
                target = jet_space(self.n, self.x_order, self.y_order - 1)
            source, factors = [], []
            for a, b in target.indices:
                if along_x:
                    shifted = (a[:v] + (a[v] + 1,) + a[v + 1:], b)
                    factors.append(a[v] + 1)
                else:
                    shifted = (a, b[:v] + (b[v] + 1,) + b[v + 1:])
                    factors.append(b[v] + 1)
                source.append(self.position[shifted])
            cache[v] = (target, np.asarray(source, dtype=np.intp), np.asarray(factors, dtype=float))
        return cache[v]

    def dx_map(self, v: int):
        return self._derivative_map(v, along_x=True)

    def dy_map(self, v: int):
        return self._derivative_map(v, along_x=False)

    def __repr__(self) -> str:
        return f"JetSpace(n={self.n}, x={self.x_order}, y={self.y_order})"


@lru_cache(maxsize=None)
def jet_space(n: int, x_order: int, y_order: int) -> JetSpace:
    return JetSpace(n, x_order, y_order)


class Jet:
    """Усечённый ряд Тейлора скалярного поля в точке (x, y)"""

    __slots__ = ('space', 'c')

    def __init__(self, space: JetSpace, coefficients: np.ndarray):
        self.space = space
        self.c = coefficients

    @classmethod
    def constant(cls, space: JetSpace, value: float) -> "Jet":
        c = np.zeros(space.size)
        c[0] = float(value)
        return cls(space, c)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def x_order(self) -> int:
        return self.space.x_order

    @property
    def y_order(self) -> int:
        return self.space.y_order

    @property
    def primal(self) -> float:
        return float(self.c[0])

    def restrict(self, x_order: int, y_order: int) -> "Jet":
        if (x_order, y_order) == (self.x_order, self.y_order):
            return self
        if x_order > self.x_order or y_order > self.y_order:
            raise TruncationOrderExhausted(f"Нельзя повысить порядок {self.space} до ({x_order}, {y_order})")
        return Jet(jet_space(self.n, x_order, y_order), self.c[self.space.restriction(x_order, y_order)])

    def _common(self, other: "Jet") -> Tuple[JetSpace, np.ndarray, np.ndarray]:
        if other.n != self.n:
            raise DimensionMismatch(f"Джеты разной размерности: {self.n} и {other.n}")
        ox = min(self.x_order, other.x_order)
        oy = min(self.y_order, other.y_order)
        return jet_space(self.n, ox, oy), self.restrict(ox, oy).c, other.restrict(ox, oy).c

    def __add__(self, other):
        if isinstance(other, Jet):
            space, a, b = self._common(other)
            return Jet(space, a + b)
        if isinstance(other, numbers.Real):
            c = self.c.copy()
            c[0] += float(other)
            return Jet(self.space, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __sub__(self, other):
        if isinstance(other, (Jet, numbers.Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, numbers.Real):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            space, a, b = self._common(other)
            left, right, target = space.mul_tables
            return Jet(space, np.bincount(target, weights=a[left] * b[right], minlength=space.size))
        if isinstance(other, numbers.Real):
            return Jet(self.space, self.c * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * jet_reciprocal(other)
        if isinstance(other, numbers.Real):
            if other == 0:
                raise DivisionByZero("Деление джета на ноль")
            return Jet(self.space, self.c / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Real):
            return jet_reciprocal(self) * float(other)
        return NotImplemented

    def __pow__(self, exponent):
        return jet_pow(self, exponent)

    def dx(self, v: int) -> "Jet":
        target, source, factors = self.space.dx_map(v)
        return Jet(target, self.c[source] * factors)

    def dy(self, v: int) -> "Jet":
        target, source, factors = self.space.dy_map(v)
        return Jet(target, self.c[source] * factors)

    def derivative(self, a: Sequence[int], b: Sequence[int]) -> float:
        """Значение смешанной производной d^a_x d^b_y"""
        key = (tuple(a), tuple(b))
        if key not in self.space.position:
            raise TruncationOrderExhausted(f"Производная {key} вне {self.space}")
        scale = np.prod([math.factorial(k) for k in key[0] + key[1]])
        return float(self.c[self.space.position[key]] * scale)

    def __repr__(self) -> str:
        return f"Jet(primal={self.primal:.17g}, {self.space})"


def _compose(base: Jet, series: Sequence[float]) -> Jet:
    """f(a0 + h) по схеме Горнера, series[k] = f^(k)(a0)/k!"""
    h = base - base.primal
    result = Jet.constant(base.space, series[-1])
    for coefficient in reversed(series[:-1]):
        result = result * h + coefficient
    return result


def _series_length(base: Jet) -> int:
    return base.x_order + base.y_order + 1


def jet_reciprocal(base: Jet) -> Jet:
    a0 = base.primal
    if a0 == 0.0:
        raise DivisionByZero("Обращение джета с нулевым значением")
    return _compose(base, [(-1.0) ** k / a0 ** (k + 1) for k in range(_series_length(base))])


def jet_pow(base: Jet, exponent: float) -> Jet:
    """Степень джета; нецелый показатель требует положительного значения"""
    exponent = float(exponent)
    if exponent.is_integer():
        k = int(exponent)
        if k < 0:
            return jet_pow(jet_reciprocal(base), -k)
        result = Jet.constant(base.space, 1.0)
        square = base
        while k:
            if k & 1:
                result = result * square
            k >>= 1
            if k:
                square = square * square
        return result
    a0 = base.primal
    if a0 <= 0.0:
        raise DomainViolation(f"Нецелая степень {exponent} от неположительного значения {a0}")
    series = [float(binom(exponent, k)) * a0 ** (exponent - k) for k in range(_series_length(base))]
    return _compose(base, series)


def jet_sqrt(base: Jet) -> Jet:
    return jet_pow(base, 0.5)


def jet_log(base: Jet) -> Jet:
    a0 = base.primal
    if a0 <= 0.0:
        raise DomainViolation(f"Логарифм неположительного значения {a0}")
    series = [math.log(a0)] + [(-1.0) ** (k + 1) / (k * a0 ** k) for k in range(1, _series_length(base))]
    return _compose(base, series)


def jet_exp(base: Jet) -> Jet:
    a0 = base.primal
    series = [math.exp(a0) / math.factorial(k) for k in range(_series_length(base))]
    return _compose(base, series)


@dataclass(frozen=True)
class EvalPoint:
    """Точка (x, y) касательного расслоения; y - направление"""
    x: Tuple
    y: Tuple

    def __post_init__(self):
        object.__setattr__(self, 'x', tuple(self.x))
        object.__setattr__(self, 'y', tuple(self.y))
        if len(self.x) != len(self.y):
            raise DimensionMismatch(f"Размерности x ({len(self.x)}) и y ({len(self.y)}) различны")

    @property
    def n(self) -> int:
        return len(self.x)

    def x_array(self) -> np.ndarray:
        return np.asarray([float(v) for v in self.x])

    def y_array(self) -> np.ndarray:
        return np.asarray([float(v) for v in self.y])

    def scaled(self, factor) -> "EvalPoint":
        return EvalPoint(self.x, tuple(factor * v for v in self.y))

    def check(self):
        values = np.concatenate([self.x_array(), self.y_array()])
        if not np.all(np.isfinite(values)):
            raise DomainViolation(f"Нечисловые координаты точки {self}")
        if not np.any(self.y_array() != 0.0):
            raise DomainViolation("Направление y = 0 не лежит в конической области")

    def label(self) -> str:
        return "x=" + ",".join(str(v) for v in self.x) + ";y=" + ",".join(str(v) for v in self.y)


def lift(point: EvalPoint, seed: int, x_order: int = 2, y_order: int = 4) -> Jet:
    """Координатная функция как джет: seed < n - база x, иначе слой y"""
    point.check()
    n = point.n
    if not 0 <= seed < 2 * n:
        raise ValueError(f"Переменная {seed} вне диапазона 0..{2 * n - 1}")
    space = jet_space(n, x_order, y_order)
    c = np.zeros(space.size)
    zero = (0,) * n
    unit = tuple(1 if k == seed % n else 0 for k in range(n))
    if seed < n:
        c[0] = float(point.x[seed])
        if x_order > 0:
            c[space.position[(unit, zero)]] = 1.0
    else:
        c[0] = float(point.y[seed - n])
        if y_order > 0:
            c[space.position[(zero, unit)]] = 1.0
    return Jet(space, c)
