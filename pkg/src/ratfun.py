"""
Точная арифметика многочленов и рациональных функций над Q

Переменные кольца: x1..xn (база), затем y1..yn (слой), порядок grlex.
Квадратичное расширение w, w^2 = R задаётся общим контекстом RadicandContext.
"""

import logging
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Dict, Optional, Sequence, Tuple, Union

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

from src.errors import DivisionByZero, DomainViolation, PerfectSquareRadicand

logger = logging.getLogger(__name__)

# Порог числа членов, выше которого полный НОД не вычисляется
GCD_MAX_TERMS = 512

Number = Union[int, Fraction]


def configure(gcd_max_terms: int = 512):
    """Установка порога полного НОД для канонизации RatFun"""
    global GCD_MAX_TERMS
    GCD_MAX_TERMS = int(gcd_max_terms)
    logger.debug(f"Порог полного НОД: {GCD_MAX_TERMS} членов")


@lru_cache(maxsize=None)
def polynomial_ring(n: int) -> PolyRing:
    """Кольцо Q[x1..xn, y1..yn] с порядком grlex"""
    names = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    return PolyRing(names, QQ, grlex)


def to_fraction(value) -> Fraction:
    """Элемент QQ (или int/Fraction) в Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(int(value.numerator), int(value.denominator))


def _qq(value: Number):
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def base_var(i: int) -> int:
    """Номер базовой переменной x^(i+1)"""
    return i


def fiber_var(n: int, i: int) -> int:
    """Номер слоевой переменной y^(i+1)"""
    return n + i


class Certificate(str, Enum):
    RATIONAL = "Rational"
    IRRATIONAL = "Irrational"


class MultiPoly:
    """Разреженный многочлен от 2n переменных с рациональными коэффициентами"""

    __slots__ = ('poly', 'n')

    def __init__(self, poly, n: int):
        self.poly = poly
        self.n = n

    @classmethod
    def from_terms(cls, n: int, terms: Dict[Tuple[int, ...], Number]) -> "MultiPoly":
        ring = polynomial_ring(n)
        for exponents in terms:
            if len(exponents) != 2 * n:
                raise ValueError(f"Вектор степеней {exponents} не имеет длины {2 * n}")
        return cls(ring.from_dict({tuple(e): _qq(c) for e, c in terms.items() if c != 0}), n)

    @classmethod
    def constant(cls, n: int, value: Number) -> "MultiPoly":
        return cls(polynomial_ring(n).ground_new(_qq(value)), n)

    @classmethod
    def variable(cls, n: int, var: int) -> "MultiPoly":
        return cls(polynomial_ring(n).gens[var], n)

    @property
    def ring(self) -> PolyRing:
        return self.poly.ring

    @property
    def nvars_base(self) -> int:
        return self.n

    @property
    def nvars_fiber(self) -> int:
        return self.n

    @property
    def terms(self) -> Dict[Tuple[int, ...], Fraction]:
        return {monom: to_fraction(coeff) for monom, coeff in self.poly.terms()}

    @property
    def is_zero(self) -> bool:
        return not self.poly

    @property
    def is_ground(self) -> bool:
        return self.poly.is_ground

    def __len__(self) -> int:
        return len(self.poly)

    def degree(self, var: int) -> int:
        return max((monom[var] for monom in self.poly.keys()), default=-1)

    def _wrap(self, other):
        if isinstance(other, MultiPoly):
            return other.poly
        if isinstance(other, (int, Fraction)):
            return self.ring.ground_new(_qq(other))
        return NotImplemented

    def __add__(self, other):
        poly = self._wrap(other)
        if poly is NotImplemented:
            return NotImplemented
        return MultiPoly(self.poly + poly, self.n)

    __radd__ = __add__

    def __sub__(self, other):
        poly = self._wrap(other)
        if poly is NotImplemented:
            return NotImplemented
        return MultiPoly(self.poly - poly, self.n)

    def __rsub__(self, other):
        poly = self._wrap(other)
        if poly is NotImplemented:
            return NotImplemented
        return MultiPoly(poly - self.poly, self.n)

    def __mul__(self, other):
        poly = self._wrap(other)
        if poly is NotImplemented:
            return NotImplemented
        return MultiPoly(self.poly * poly, self.n)

    __rmul__ = __mul__

    def __neg__(self):
        return MultiPoly(-self.poly, self.n)

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("Отрицательная степень многочлена")
        if exponent == 0:
            return MultiPoly.constant(self.n, 1)
        return MultiPoly(self.poly ** exponent, self.n)

    def __eq__(self, other) -> bool:
        poly = self._wrap(other)
        if poly is NotImplemented:
            return NotImplemented
        return self.poly == poly

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.poly.items())))

    def diff(self, var: int) -> "MultiPoly":
        return MultiPoly(self.poly.diff(var), self.n)

    def subs(self, assignments: Dict[int, Number]) -> "MultiPoly":
        """Подстановка рациональных значений в часть переменных"""
        if not assignments:
            return self
        pairs = [(var, _qq(value)) for var, value in sorted(assignments.items())]
        return MultiPoly(self.poly.subs(pairs), self.n)

    def evaluate(self, values: Sequence[Number]) -> Fraction:
        """Значение в точке (x1..xn, y1..yn)"""
        if len(values) != 2 * self.n:
            raise ValueError(f"Нужно {2 * self.n} значений, получено {len(values)}")
        result = self.subs(dict(enumerate(values)))
        return to_fraction(result.poly.LC) if result.poly else Fraction(0)

    def to_string(self) -> str:
        """Канонический вывод: члены по убыванию grlex, '^' для степеней"""
        if not self.poly:
            return "0"
        names = [str(symbol) for symbol in self.ring.symbols]
        pieces = []
        for monom, coeff in self.poly.terms():
            coeff = to_fraction(coeff)
            factors = [name if e == 1 else f"{name}^{e}" for name, e in zip(names, monom) if e]
            magnitude = abs(coeff)
            if factors and magnitude == 1:
                body = '*'.join(factors)
            elif factors:
                body = f"{magnitude}*" + '*'.join(factors)
            else:
                body = str(magnitude)
            sign = '-' if coeff < 0 else '+'
            pieces.append((sign, body))
        head_sign, head = pieces[0]
        text = ('-' if head_sign == '-' else '') + head
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"MultiPoly({self.to_string()})"


def poly_diff(p: MultiPoly, var: int) -> MultiPoly:
    """Формальная частная производная по переменной var"""
    if not 0 <= var < 2 * p.n:
        raise ValueError(f"Переменная {var} вне диапазона 0..{2 * p.n - 1}")
    return p.diff(var)


def _canonical(num, den):
    if not den:
        raise DivisionByZero("Знаменатель рациональной функции равен нулю")
    ring = num.ring
    if not num:
        return ring.zero, ring.one
    if not den.is_ground and len(num) <= GCD_MAX_TERMS and len(den) <= GCD_MAX_TERMS:
        num, den = num.cancel(den)
    lc = den.LC
    if lc != ring.domain.one:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return num, den


class RatFun:
    """Рациональная функция num/den; знаменатель нормирован (старший коэффициент 1)"""

    __slots__ = ('num', 'den', 'n')

    def __init__(self, num, den=None, n: Optional[int] = None, _canonical_form: bool = False):
        if isinstance(num, MultiPoly):
            n = num.n
            num = num.poly
        if isinstance(den, MultiPoly):
            den = den.poly
        if den is None:
            den = num.ring.one
        if not _canonical_form:
            num, den = _canonical(num, den)
        self.num = num
        self.den = den
        self.n = n if n is not None else len(num.ring.gens) // 2

    @classmethod
    def constant(cls, n: int, value: Number) -> "RatFun":
        ring = polynomial_ring(n)
        return cls(ring.ground_new(_qq(value)), ring.one, n, _canonical_form=True)

    @classmethod
    def zero(cls, n: int) -> "RatFun":
        ring = polynomial_ring(n)
        return cls(ring.zero, ring.one, n, _canonical_form=True)

    @property
    def numerator(self) -> MultiPoly:
        return MultiPoly(self.num, self.n)

    @property
    def denominator(self) -> MultiPoly:
        return MultiPoly(self.den, self.n)

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_ground

    def _coerce(self, other):
        if isinstance(other, RatFun):
            return other
        if isinstance(other, MultiPoly):
            return RatFun(other)
        if isinstance(other, (int, Fraction)):
            return RatFun.constant(self.n, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if self.den == other.den:
            return RatFun(self.num + other.num, self.den, self.n)
        return RatFun(self.num * other.den + other.num * self.den, self.den * other.den, self.n)

    __radd__ = __add__

    def __neg__(self):
        return RatFun(-self.num, self.den, self.n, _canonical_form=True)

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
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero or other.is_zero:
            return RatFun.zero(self.n)
        return RatFun(self.num * other.num, self.den * other.den, self.n)

    __rmul__ = __mul__

    def inverse(self) -> "RatFun":
        if self.is_zero:
            raise DivisionByZero("Обращение нулевой рациональной функции")
        return RatFun(self.den, self.num, self.n)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise DivisionByZero("Деление на нулевую рациональную функцию")
        return RatFun(self.num * other.den, self.den * other.num, self.n)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        if exponent == 0:
            return RatFun.constant(self.n, 1)
        return RatFun(self.num ** exponent, self.den ** exponent, self.n, _canonical_form=True)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num * other.den == other.num * self.den

    __hash__ = None

    def diff(self, var: int) -> "RatFun":
        dnum = self.num.diff(var)
        if self.den.is_ground:
            return RatFun(dnum, self.den, self.n)
        dden = self.den.diff(var)
        return RatFun(dnum * self.den - self.num * dden, self.den ** 2, self.n)

    def subs(self, assignments: Dict[int, Number]) -> "RatFun":
        if not assignments:
            return self
        pairs = [(var, _qq(value)) for var, value in sorted(assignments.items())]
        den = self.den.subs(pairs)
        if not den:
            raise DivisionByZero("Знаменатель обращается в ноль при подстановке")
        return RatFun(self.num.subs(pairs), den, self.n)

    def evaluate(self, values: Sequence[Number]) -> Fraction:
        den = self.denominator.evaluate(values)
        if den == 0:
            raise DivisionByZero("Знаменатель обращается в ноль в точке")
        return self.numerator.evaluate(values) / den

    def to_string(self) -> str:
        num = self.numerator.to_string()
        if self.den == self.den.ring.one:
            return num
        return f"({num})/({self.denominator.to_string()})"

    def __repr__(self) -> str:
        return f"RatFun({self.to_string()})"


def ratfun_arith(lhs: RatFun, rhs: RatFun, op: str) -> RatFun:
    """Сложение, вычитание, умножение и деление рациональных функций"""
    if op == 'add':
        return lhs + rhs
    if op == 'sub':
        return lhs - rhs
    if op == 'mul':
        return lhs * rhs
    if op == 'div':
        return lhs / rhs
    raise ValueError(f"Неизвестная операция: {op}")


def polynomial_square_root(p: MultiPoly) -> Optional[MultiPoly]:
    """Точный квадратный корень многочлена или None

    Корень собирается из бесквадратного разложения: все кратности должны быть
    чётными, а оставшийся числовой множитель - квадратом рационального числа.
    """
    if p.is_zero:
        return p
    ring = p.ring
    _, factors = p.poly.sqf_list()
    if any(multiplicity % 2 for _, multiplicity in factors):
        return None
    root = ring.one
    for factor, multiplicity in factors:
        root = root * factor ** (multiplicity // 2)
    quotient = p.poly.exquo(root * root)
    if not quotient.is_ground:
        return None
    value = to_fraction(quotient.LC)
    if value <= 0:
        return None
    num_root, den_root = isqrt(value.numerator), isqrt(value.denominator)
    if num_root * num_root != value.numerator or den_root * den_root != value.denominator:
        return None
    return MultiPoly(root.mul_ground(_qq(Fraction(num_root, den_root))), p.n)


class RadicandContext:
    """Общий подкоренной многочлен R = w^2 для всех ExtScalar одного вычисления"""

    def __init__(self, radicand: MultiPoly):
        root = polynomial_square_root(radicand)
        if root is not None:
            raise PerfectSquareRadicand(
                f"Подкоренное выражение {radicand.to_string()} является полным квадратом "
                f"({root.to_string()})^2; w не расширяет поле рациональных функций"
            )
        self.radicand = radicand
        self.n = radicand.n
        self.radicand_ratfun = RatFun(radicand)
        self._half_log_derivative: Dict[int, RatFun] = {}

    def half_log_derivative(self, var: int) -> RatFun:
        """R'/(2R): производная w равна этой функции, умноженной на w"""
        if var not in self._half_log_derivative:
            self._half_log_derivative[var] = RatFun(
                self.radicand.diff(var).poly, (self.radicand * 2).poly, self.n
            )
        return self._half_log_derivative[var]

    def same_as(self, other: "RadicandContext") -> bool:
        return other is self or other.radicand == self.radicand


class ExtScalar:
    """Элемент a + b*w квадратичного расширения, w^2 = R"""

    __slots__ = ('rat_part', 'irr_part', 'context')

    def __init__(self, rat_part: RatFun, irr_part: RatFun, context: RadicandContext):
        self.rat_part = rat_part
        self.irr_part = irr_part
        self.context = context

    @classmethod
    def rational(cls, value, context: RadicandContext) -> "ExtScalar":
        n = context.n
        if isinstance(value, MultiPoly):
            value = RatFun(value)
        elif isinstance(value, (int, Fraction)):
            value = RatFun.constant(n, value)
        return cls(value, RatFun.zero(n), context)

    @classmethod
    def root(cls, context: RadicandContext) -> "ExtScalar":
        n = context.n
        return cls(RatFun.zero(n), RatFun.constant(n, 1), context)

    @property
    def radicand(self) -> MultiPoly:
        return self.context.radicand

    @property
    def is_zero(self) -> bool:
        return self.rat_part.is_zero and self.irr_part.is_zero

    def _coerce(self, other):
        if isinstance(other, ExtScalar):
            if not self.context.same_as(other.context):
                raise ValueError("ExtScalar с разными подкоренными выражениями")
            return other
        if isinstance(other, (int, Fraction, RatFun, MultiPoly)):
            return ExtScalar.rational(other, self.context)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return ExtScalar(self.rat_part + other.rat_part, self.irr_part + other.irr_part, self.context)

    __radd__ = __add__

    def __neg__(self):
        return ExtScalar(-self.rat_part, -self.irr_part, self.context)

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

    def scale(self, factor: Number) -> "ExtScalar":
        factor = Fraction(factor)
        return ExtScalar(self.rat_part * factor, self.irr_part * factor, self.context)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a1, b1, a2, b2 = self.rat_part, self.irr_part, other.rat_part, other.irr_part
        if b1.is_zero and b2.is_zero:
            return ExtScalar(a1 * a2, b1, self.context)
        rat = a1 * a2 + b1 * b2 * self.context.radicand_ratfun
        irr = a1 * b2 + a2 * b1
        return ExtScalar(rat, irr, self.context)

    __rmul__ = __mul__

    def inverse(self) -> "ExtScalar":
        """(a - b w)/(a^2 - b^2 R)"""
        a, b = self.rat_part, self.irr_part
        if b.is_zero:
            return ExtScalar(a.inverse(), b, self.context)
        norm = a * a - b * b * self.context.radicand_ratfun
        if norm.is_zero:
            raise DivisionByZero("Норма элемента расширения равна нулю")
        return ExtScalar(a / norm, -b / norm, self.context)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise DivisionByZero("Деление на ноль")
            return self.scale(Fraction(1) / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = ExtScalar.rational(1, self.context)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.rat_part == other.rat_part and self.irr_part == other.irr_part

    __hash__ = None

    def diff(self, var: int) -> "ExtScalar":
        rat = self.rat_part.diff(var)
        if self.irr_part.is_zero:
            return ExtScalar(rat, self.irr_part, self.context)
        irr = self.irr_part.diff(var) + self.irr_part * self.context.half_log_derivative(var)
        return ExtScalar(rat, irr, self.context)

    def subs(self, assignments: Dict[int, Number]) -> "ExtScalar":
        """Подстановка только в переменные, от которых R не зависит"""
        return ExtScalar(self.rat_part.subs(assignments), self.irr_part.subs(assignments), self.context)

    def exact_parts(self, values: Sequence[Number]) -> Tuple[Fraction, Fraction, Fraction]:
        """(a, b, R) в рациональной точке"""
        return (self.rat_part.evaluate(values), self.irr_part.evaluate(values),
                self.context.radicand.evaluate(values))

    def evaluate(self, values: Sequence[Number]) -> float:
        a, b, radicand = self.exact_parts(values)
        if b == 0:
            return float(a)
        if radicand < 0:
            raise DomainViolation(f"Подкоренное выражение отрицательно в точке: {radicand}")
        return float(a) + float(b) * float(radicand) ** 0.5

    def is_rational(self) -> Certificate:
        return Certificate.RATIONAL if self.irr_part.is_zero else Certificate.IRRATIONAL

    def to_string(self) -> str:
        if self.irr_part.is_zero:
            return self.rat_part.to_string()
        return f"{self.rat_part.to_string()} + ({self.irr_part.to_string()})*w"

    def __repr__(self) -> str:
        return f"ExtScalar({self.to_string()})"


def ext_diff(e: ExtScalar, var: int) -> ExtScalar:
    """Производная a + b w: a' + (b' + b R'/(2R)) w"""
    return e.diff(var)


def is_rational(e: ExtScalar) -> Certificate:
    """Сертификат рациональности: Rational тогда и только тогда, когда b = 0"""
    return e.is_rational()
