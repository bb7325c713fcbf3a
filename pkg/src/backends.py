"""
Два скалярных бэкенда с общим интерфейсом полей

Численный: джеты Jet из autodiff. Точный: ExactJet - ряд Тейлора по x
вокруг рациональной точки x0, коэффициенты которого - точные функции
ExtScalar от y. Производные по y берутся формально, поэтому по слою
усечения нет.
"""

import logging
import numbers
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff import EvalPoint, Jet, jet_pow, jet_space, lift, multi_indices
from src.errors import (
    DimensionMismatch, DivisionByZero, DomainViolation, ExactBackendUnavailable,
    TruncationOrderExhausted,
)
from src.metric_io import CoefficientField, MetricSpec
from src.ratfun import (
    Certificate, ExtScalar, MultiPoly, RadicandContext, RatFun, configure, fiber_var,
)

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


def close(a: float, b: float, atol: float = 1e-12, rtol: float = 1e-9) -> bool:
    """|a - b| <= atol + rtol * max(|a|, |b|)"""
    return abs(a - b) <= atol + rtol * max(abs(a), abs(b))


def to_rational(value) -> Fraction:
    """Координата точки в Fraction; float берётся по десятичной записи"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


def _add_index(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(p + q for p, q in zip(a, b))


class ExactJet:
    """Ряд Тейлора по x порядка order с коэффициентами ExtScalar"""

    __slots__ = ('coeffs', 'order', 'context', 'n')

    def __init__(self, coeffs: Dict[MultiIndex, ExtScalar], order: int, context: RadicandContext, n: int):
        self.coeffs = {a: c for a, c in coeffs.items() if sum(a) <= order and not c.is_zero}
        self.order = order
        self.context = context
        self.n = n

    @classmethod
    def constant(cls, value, order: int, context: RadicandContext, n: int) -> "ExactJet":
        if not isinstance(value, ExtScalar):
            value = ExtScalar.rational(value, context)
        return cls({(0,) * n: value}, order, context, n)

    @property
    def zero_index(self) -> MultiIndex:
        return (0,) * self.n

    @property
    def x_order(self) -> int:
        return self.order

    def value(self) -> ExtScalar:
        return self.coeffs.get(self.zero_index, ExtScalar.rational(0, self.context))

    def _coerce(self, other):
        if isinstance(other, ExactJet):
            return other
        if isinstance(other, (int, Fraction, ExtScalar, RatFun)):
            return ExactJet.constant(other, self.order, self.context, self.n)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        order = min(self.order, other.order)
        coeffs = {a: c for a, c in self.coeffs.items() if sum(a) <= order}
        for a, c in other.coeffs.items():
            if sum(a) > order:
                continue
            coeffs[a] = coeffs[a] + c if a in coeffs else c
        return ExactJet(coeffs, order, self.context, self.n)

    __radd__ = __add__

    def __neg__(self):
        return ExactJet({a: -c for a, c in self.coeffs.items()}, self.order, self.context, self.n)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactJet({a: c.scale(other) for a, c in self.coeffs.items()}, self.order, self.context, self.n)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        order = min(self.order, other.order)
        coeffs: Dict[MultiIndex, ExtScalar] = {}
        for a1, c1 in self.coeffs.items():
            d1 = sum(a1)
            if d1 > order:
                continue
            for a2, c2 in other.coeffs.items():
                if d1 + sum(a2) > order:
                    continue
                a = _add_index(a1, a2)
                term = c1 * c2
                coeffs[a] = coeffs[a] + term if a in coeffs else term
        return ExactJet(coeffs, order, self.context, self.n)

    __rmul__ = __mul__

    def reciprocal(self) -> "ExactJet":
        """1/(a0 + h) = sum_k (-h)^k / a0^(k+1); h нильпотентен по x"""
        a0 = self.value()
        if a0.is_zero:
            raise DivisionByZero("Обращение точного джета с нулевым значением")
        inverse0 = a0.inverse()
        minus_h = ExactJet({a: -c for a, c in self.coeffs.items() if any(a)}, self.order, self.context, self.n)
        term = ExactJet.constant(inverse0, self.order, self.context, self.n)
        result = term
        for _ in range(self.order):
            if not minus_h.coeffs:
                break
            term = term * minus_h * inverse0
            result = result + term
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise DivisionByZero("Деление на ноль")
            return self * (Fraction(1) / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.reciprocal()

    def __pow__(self, exponent: int):
        if isinstance(exponent, Fraction):
            if exponent.denominator != 1:
                raise ExactBackendUnavailable(f"Нецелая степень {exponent} недоступна точному бэкенду")
            exponent = exponent.numerator
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        result = ExactJet.constant(1, self.order, self.context, self.n)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def dx(self, v: int) -> "ExactJet":
        if self.order == 0:
            raise TruncationOrderExhausted(f"Производная по x{v + 1} превышает порядок усечения точного джета")
        coeffs = {}
        for a, c in self.coeffs.items():
            if a[v] == 0:
                continue
            lowered = a[:v] + (a[v] - 1,) + a[v + 1:]
            coeffs[lowered] = c.scale(a[v])
        return ExactJet(coeffs, self.order - 1, self.context, self.n)

    def dy(self, v: int) -> "ExactJet":
        var = fiber_var(self.n, v)
        return ExactJet({a: c.diff(var) for a, c in self.coeffs.items()}, self.order, self.context, self.n)

    def __repr__(self) -> str:
        return f"ExactJet(order={self.order}, value={self.value().to_string()})"


class _AlgebraBase:
    """Общие части алгебр: знак α^2 и вычисление значений коэффициентов"""

    exact = False

    def __init__(self, spec: MetricSpec, point: EvalPoint, atol: float, rtol: float):
        if point.n != spec.dimension:
            raise DimensionMismatch(f"Точка размерности {point.n} для метрики размерности {spec.dimension}")
        point.check()
        self.spec = spec
        self.point = point
        self.n = spec.dimension
        self.atol = atol
        self.rtol = rtol
        self._coordinates = None

    def coordinates(self) -> Tuple[List, List]:
        if self._coordinates is None:
            self._coordinates = self._build_coordinates()
        return self._coordinates

    def _build_coordinates(self):
        raise NotImplementedError

    def agree(self, a, b, scale: Optional[float] = None) -> bool:
        raise NotImplementedError


class JetAlgebra(_AlgebraBase):
    """Поля как численные джеты в точке (x, y)"""

    name = 'numeric'

    def __init__(self, spec: MetricSpec, point: EvalPoint, x_order: int = 2, y_order: int = 4,
                 atol: float = 1e-12, rtol: float = 1e-9):
        super().__init__(spec, point, atol, rtol)
        self.space = jet_space(self.n, x_order, y_order)
        x = point.x_array()
        y = point.y_array()
        raw_alpha2 = float(y @ spec.alpha_at(x) @ y)
        if raw_alpha2 == 0.0:
            raise DomainViolation(f"α^2 = 0 в точке {point.label()}")
        self.sign_alpha = 1 if raw_alpha2 > 0 else -1

    def _build_coordinates(self):
        n = self.n
        xs = [lift(self.point, v, self.space.x_order, self.space.y_order) for v in range(n)]
        ys = [lift(self.point, n + v, self.space.x_order, self.space.y_order) for v in range(n)]
        return xs, ys

    def coefficient(self, field: CoefficientField) -> Jet:
        c = np.zeros(self.space.size)
        x = self.point.x_array()
        zero = (0,) * self.n
        for a in self.space.x_indices:
            c[self.space.position[(a, zero)]] = field.numeric_taylor(x, a)
        return Jet(self.space, c)

    def constant(self, value) -> Jet:
        return Jet.constant(self.space, float(value))

    def power(self, f, exponent):
        if isinstance(f, numbers.Real):
            return float(f) ** float(exponent)
        return jet_pow(f, float(exponent))

    def half_power(self, f, twice_exponent: int):
        """f^(k/2) при k = twice_exponent"""
        return self.power(f, Fraction(twice_exponent, 2))

    def value(self, f) -> float:
        if isinstance(f, Jet):
            return f.primal
        return float(f)

    def evaluate(self, f) -> float:
        return self.value(f)

    def is_zero(self, f, scale: float = 1.0) -> bool:
        return abs(self.value(f)) <= self.atol + self.rtol * abs(scale)

    def agree(self, a, b, scale: Optional[float] = None) -> bool:
        va, vb = self.value(a), self.value(b)
        if scale is None:
            return close(va, vb, self.atol, self.rtol)
        return abs(va - vb) <= self.atol + self.rtol * abs(scale)

    def certificate(self, f) -> Optional[Certificate]:
        return None

    def point_is_zero(self, f) -> bool:
        return abs(self.value(f)) <= self.atol

    def point_sign(self, f) -> int:
        v = self.value(f)
        return 0 if abs(v) <= self.atol else (1 if v > 0 else -1)

    def identically_zero(self, f) -> bool:
        """Все коэффициенты джета равны нулю, а не только значение в точке"""
        if isinstance(f, Jet):
            return not np.any(f.c)
        return float(f) == 0.0

    def magnitude(self, f) -> float:
        return abs(self.value(f))


class ExactAlgebra(_AlgebraBase):
    """Поля как точные ряды по x с коэффициентами ExtScalar(y)"""

    name = 'exact'
    exact = True

    def __init__(self, spec: MetricSpec, point: EvalPoint, x_order: int = 2,
                 atol: float = 1e-12, rtol: float = 1e-9):
        super().__init__(spec, point, atol, rtol)
        n = self.n
        self.x_order = x_order
        self.x0 = tuple(to_rational(v) for v in point.x)
        self.y0 = tuple(to_rational(v) for v in point.y)
        self.values = list(self.x0) + list(self.y0)
        zero = (0,) * n
        family = spec.family
        ys = [MultiPoly.variable(n, fiber_var(n, i)) for i in range(n)]
        quadratic = MultiPoly.constant(n, 0)
        for i in range(n):
            for j in range(n):
                entry = spec.alpha[i][j].exact_taylor(self.x0, zero)
                if entry:
                    quadratic = quadratic + ys[i] * ys[j] * entry
        raw_alpha2 = quadratic.evaluate(self.values)
        if raw_alpha2 == 0:
            raise DomainViolation(f"α^2 = 0 в точке {point.label()}")
        self.sign_alpha = 1 if raw_alpha2 > 0 else -1
        beta = MultiPoly.constant(n, 0)
        for i in range(n):
            entry = spec.beta[i].exact_taylor(self.x0, zero)
            if entry:
                beta = beta + ys[i] * entry
        radicand = quadratic * (family.c * self.sign_alpha) + beta * beta * family.r
        self.context = RadicandContext(radicand)
        self._root = None

    def _build_coordinates(self):
        n = self.n
        zero = (0,) * n
        xs, ys = [], []
        for v in range(n):
            unit = tuple(1 if k == v else 0 for k in range(n))
            coeffs = {zero: ExtScalar.rational(self.x0[v], self.context)}
            if self.x_order > 0:
                coeffs[unit] = ExtScalar.rational(1, self.context)
            xs.append(ExactJet(coeffs, self.x_order, self.context, n))
            poly = MultiPoly.variable(n, fiber_var(n, v))
            ys.append(ExactJet({zero: ExtScalar.rational(poly, self.context)}, self.x_order, self.context, n))
        return xs, ys

    def coefficient(self, field: CoefficientField) -> ExactJet:
        coeffs = {}
        for a in multi_indices(self.n, self.x_order):
            value = field.exact_taylor(self.x0, a)
            if value:
                coeffs[a] = ExtScalar.rational(value, self.context)
        return ExactJet(coeffs, self.x_order, self.context, self.n)

    def constant(self, value) -> ExactJet:
        return ExactJet.constant(to_rational(value), self.x_order, self.context, self.n)

    def power(self, f, exponent):
        exponent = Fraction(exponent)
        if exponent.denominator != 1:
            raise ExactBackendUnavailable(f"Степень {exponent} требует численного бэкенда")
        if isinstance(f, (int, Fraction)):
            return Fraction(f) ** exponent.numerator
        return f ** exponent.numerator

    def sqrt(self, f: ExactJet) -> ExactJet:
        """Корень из поля, значение которого совпадает с подкоренным выражением"""
        radicand = ExtScalar.rational(self.context.radicand, self.context)
        if not f.value() == radicand:
            raise ExactBackendUnavailable("Корень точного джета определён только для подкоренного выражения w^2")
        inverse0 = radicand.inverse()
        ratio = (f - radicand) * inverse0
        result = ExactJet.constant(1, f.order, self.context, self.n)
        term = result
        coefficient = Fraction(1)
        for k in range(1, f.order + 1):
            coefficient = coefficient * (Fraction(1, 2) - (k - 1)) / k
            term = term * ratio
            if not term.coeffs:
                break
            result = result + term * coefficient
        return result * ExtScalar.root(self.context)

    def half_power(self, f, twice_exponent: int):
        if twice_exponent % 2 == 0:
            return self.power(f, twice_exponent // 2)
        return self.sqrt(f) * self.power(f, (twice_exponent - 1) // 2)

    def value(self, f) -> ExtScalar:
        if isinstance(f, ExactJet):
            return f.value()
        if isinstance(f, ExtScalar):
            return f
        return ExtScalar.rational(to_rational(f), self.context)

    def evaluate(self, f) -> float:
        return self.value(f).evaluate(self.values)

    def is_zero(self, f, scale: float = 1.0) -> bool:
        return self.value(f).is_zero

    def agree(self, a, b, scale: Optional[float] = None) -> bool:
        return self.value(a) == self.value(b)

    def certificate(self, f) -> Certificate:
        return self.value(f).is_rational()

    def point_sign(self, f) -> int:
        """Точный знак a + b√R в рациональной точке"""
        a, b, radicand = self.value(f).exact_parts(self.values)
        if b == 0:
            return (a > 0) - (a < 0)
        if radicand < 0:
            raise DomainViolation(f"Подкоренное выражение отрицательно в точке {self.point.label()}")
        root_sign = (b > 0) - (b < 0)
        if a == 0 or (a > 0) == (root_sign > 0):
            return root_sign if a == 0 else (1 if a > 0 else -1)
        # a и b√R разных знаков: сравниваем квадраты
        difference = a * a - b * b * radicand
        if difference == 0:
            return 0
        return (1 if a > 0 else -1) if difference > 0 else root_sign

    def point_is_zero(self, f) -> bool:
        return self.point_sign(f) == 0

    def identically_zero(self, f) -> bool:
        """Нулевое поле как функция, а не только значение в точке"""
        if isinstance(f, ExactJet):
            return not f.coeffs
        return self.value(f).is_zero

    def magnitude(self, f) -> float:
        value = self.value(f)
        if value.is_zero:
            return 0.0
        return abs(value.evaluate(self.values))


class NumericBackend:
    """Численный бэкенд с порядками усечения (x, y)"""

    name = 'numeric'
    exact = False

    def __init__(self, x_order: int = 2, y_order: int = 4, atol: float = 1e-12, rtol: float = 1e-9,
                 residual_y_order: int = 5):
        self.x_order = x_order
        self.y_order = y_order
        self.atol = atol
        self.rtol = rtol
        # остаток уравнения поля содержит ∂̇ J, то есть пятую производную G по y
        self.residual_y_order = residual_y_order

    def with_orders(self, x_order: Optional[int] = None, y_order: Optional[int] = None) -> "NumericBackend":
        return NumericBackend(
            self.x_order if x_order is None else x_order,
            self.y_order if y_order is None else y_order,
            self.atol, self.rtol, self.residual_y_order,
        )

    def check_spec(self, spec: MetricSpec):
        pass

    def algebra(self, spec: MetricSpec, point: EvalPoint) -> JetAlgebra:
        return JetAlgebra(spec, point, self.x_order, self.y_order, self.atol, self.rtol)

    def __repr__(self) -> str:
        return f"NumericBackend(x={self.x_order}, y={self.y_order})"


class ExactBackend:
    """Точный бэкенд: целое m, многочленные коэффициенты, рациональные точки"""

    name = 'exact'
    exact = True

    def __init__(self, gcd_max_terms: int = 512, x_order: int = 2, atol: float = 1e-12, rtol: float = 1e-9):
        self.gcd_max_terms = gcd_max_terms
        self.x_order = x_order
        self.atol = atol
        self.rtol = rtol
        configure(gcd_max_terms)

    def with_orders(self, x_order: Optional[int] = None, y_order: Optional[int] = None) -> "ExactBackend":
        return ExactBackend(self.gcd_max_terms, self.x_order if x_order is None else x_order, self.atol, self.rtol)

    def check_spec(self, spec: MetricSpec):
        if not spec.family.is_integer_m:
            raise ExactBackendUnavailable(f"Точный бэкенд требует целого m, получено m = {spec.family.m}")
        if not spec.is_polynomial:
            raise ExactBackendUnavailable("Точный бэкенд требует многочленных коэффициентов α_ij и b_i")

    def algebra(self, spec: MetricSpec, point: EvalPoint) -> ExactAlgebra:
        self.check_spec(spec)
        return ExactAlgebra(spec, point, self.x_order, self.atol, self.rtol)

    def __repr__(self) -> str:
        return f"ExactBackend(gcd_max_terms={self.gcd_max_terms})"


Backend = Union[NumericBackend, ExactBackend]


def make_backend(name: str, tolerances: Optional[Dict] = None, autodiff: Optional[Dict] = None,
                 ratfun: Optional[Dict] = None) -> Backend:
    """Создание бэкенда по имени и секциям конфигурации"""
    tolerances = tolerances or {}
    autodiff = autodiff or {}
    ratfun = ratfun or {}
    atol = float(tolerances.get('atol', 1e-12))
    rtol = float(tolerances.get('rtol', 1e-9))
    if name == 'numeric':
        return NumericBackend(int(autodiff.get('x_order', 2)), int(autodiff.get('y_order', 4)), atol, rtol,
                              int(autodiff.get('residual_y_order', 5)))
    if name == 'exact':
        return ExactBackend(int(ratfun.get('gcd_max_terms', 512)), int(autodiff.get('x_order', 2)), atol, rtol)
    raise ValueError(f"Неизвестный бэкенд: {name}")
