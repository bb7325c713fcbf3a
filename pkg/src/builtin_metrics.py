"""
Встроенные метрики: три примера семейства и контрольные фикстуры
"""

import logging
import inspect
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from src.autodiff import EvalPoint
from src.errors import ConfigError
from src.metric_io import MetricSpec, base_symbols, format_fraction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Claim:
    """Ожидаемый вердикт встроенного примера"""
    kind: str
    backend: str
    description: str
    params: Dict[str, Any] = field(default_factory=dict, hash=False)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'backend': self.backend, 'description': self.description,
                'params': dict(self.params)}


class ClosedForm:
    """Выражение от x1..xn, y1..yn; в рациональной точке значение точное"""

    def __init__(self, text: str, n: int):
        self.text = text
        self.symbols = base_symbols(n) + tuple(sympy.Symbol(f"y{i}") for i in range(1, n + 1))
        try:
            self.expr = sympy.sympify(text, locals={str(s): s for s in self.symbols}, rational=True)
        except (sympy.SympifyError, TypeError) as e:
            raise ConfigError(f"Не удалось разобрать выражение {text!r}: {e}")
        unknown = self.expr.free_symbols - set(self.symbols)
        if unknown:
            raise ConfigError(f"Неизвестные имена {sorted(map(str, unknown))} в выражении {text!r}")
        self.function = sympy.lambdify(self.symbols, self.expr, 'math')

    def __call__(self, point: EvalPoint):
        values = tuple(point.x) + tuple(point.y)
        if all(isinstance(v, (int, Fraction)) for v in values):
            result = self.expr.subs({s: sympy.Rational(Fraction(v).numerator, Fraction(v).denominator)
                                     for s, v in zip(self.symbols, values)})
            return Fraction(int(sympy.numer(result)), int(sympy.denom(result)))
        return float(self.function(*[float(v) for v in values]))


@dataclass
class BuiltinExample:
    id: str
    spec: MetricSpec
    claims: List[Claim]
    base_box: List[Tuple[float, float]]
    base_point: Tuple
    notes: str = ''


def _matrix(n: int, entries: Dict[Tuple[int, int], str]) -> List[List[str]]:
    rows = [['0'] * n for _ in range(n)]
    for (i, j), text in entries.items():
        rows[i][j] = text
        rows[j][i] = text
    return rows


def _diagonal(values: Sequence[str]) -> List[List[str]]:
    return _matrix(len(values), {(i, i): v for i, v in enumerate(values)})


def _family(tag: str, m, c=1, r=0, sign: int = 1) -> Dict[str, Any]:
    return {'tag': tag, 'm': format_fraction(Fraction(m)), 'c': format_fraction(Fraction(c)),
            'r': format_fraction(Fraction(r)), 'sign': sign}


def example1_flat_anisotropic(m=2) -> BuiltinExample:
    """Плоская метрика Минковского и постоянная 1-форма с b^2 = -1 + 4 = 3"""
    data = {
        'dimension': 4,
        'alpha': _diagonal(['-1', '1', '1', '1']),
        'beta': ['1', '2', '0', '0'],
        'family': _family('m-kropina', m),
    }
    claims = [
        Claim('ricci-flat', 'exact', "Ric = 0 (exact)"),
        Claim('field-residual', 'exact', "вакуумный остаток = 0 (exact)"),
        Claim('berwald', 'numeric', "G^i квадратичны по y"),
    ]
    return BuiltinExample('example1-flat-anisotropic', MetricSpec.from_dict(data, 'example1-flat-anisotropic'),
                          claims, [(-1.0, 1.0)] * 4, (Fraction(1, 2), Fraction(1, 3), Fraction(0), Fraction(1)))


def example2_vsi(m=2) -> BuiltinExample:
    """VSI-метрика в координатах (u, v, x, y) = (x1, x2, x3, x4), β = du"""
    m = Fraction(m)
    if m == 1:
        raise ConfigError("Пример VSI требует m != 1")
    k = (3 * m - 1 - m * m) / (12 * (m - 1) ** 2)
    data = {
        'dimension': 4,
        'alpha': _matrix(4, {
            (0, 0): f"{format_fraction(k)}*x3^4 + 1/12*x4^4 + x3*x2",
            (0, 1): '-1', (0, 3): 'x3*x4', (2, 2): '1', (3, 3): '1',
        }),
        'beta': ['1', '0', '0', '0'],
        'family': _family('m-kropina', m),
    }
    # du рекуррентна: ∇du = -(x/2) du ⊗ du, связность Бервальда вейлева,
    # слагаемые с x^2 β^2 сокращаются при этом k, остаётся Ric = m/(m-1) β y^x
    ricci = f"{format_fraction(m / (m - 1))}*y1*y3"
    claims = [
        Claim('berwald', 'numeric', "квадратичная подгонка G^i по y", {'base_points': 20}),
        Claim('ricci-value', 'numeric', f"Ric = {ricci} (численно)", {'samples': 50, 'expression': ricci}),
        Claim('ricci-value', 'exact', f"Ric = {ricci} (exact)", {'samples': 2, 'expression': ricci}),
    ]
    return BuiltinExample('example2-vsi', MetricSpec.from_dict(data, 'example2-vsi'), claims,
                          [(-1.0, 1.0)] * 4, (Fraction(0), Fraction(0), Fraction(1), Fraction(1)),
                          notes="метрика не риччи-плоская: Ric = m/(m-1) β y^3")


def example3_cosmological(m=2, c=1, backend: str = 'numeric', scale_factor: Optional[str] = None) -> BuiltinExample:
    """dt^2 - A(t)^2 (dx^2 + dy^2 + dz^2), b = (c A^(1/m), 0, 0, 0)

    Численно A(t) = t (или заданное выражение), точно A(t) = t^m, так что b_0 = c t.
    """
    m, c = Fraction(m), Fraction(c)
    if backend == 'exact':
        if m.denominator != 1 or m <= 0:
            raise ConfigError("Точный вариант примера 3 требует натурального m")
        a_squared = f"x1^{2 * m.numerator}"
        b0 = f"{format_fraction(c)}*x1"
        instantiation = f"A(t) = t^{m}"
    else:
        a = scale_factor or 'x1'
        a_squared = f"({a})^2"
        b0 = f"{format_fraction(c)}*({a})^({format_fraction(1 / m)})"
        instantiation = f"A(t) = {a}"
    data = {
        'dimension': 4,
        'alpha': _diagonal(['1', f"-{a_squared}", f"-{a_squared}", f"-{a_squared}"]),
        'beta': [b0, '0', '0', '0'],
        'family': _family('m-kropina', m, c),
    }
    backend = 'exact' if backend == 'exact' else 'numeric'
    fit_params = {'samples': 6, 'base_points': 1} if backend == 'exact' else {'samples': 50, 'base_points': 5}
    claims = [
        Claim('einstein-fit', backend, f"K = 0, θ = 0 ({instantiation})", fit_params),
        Claim('ricci-flat', backend, f"Ric = 0 ({instantiation})"),
    ]
    return BuiltinExample('example3-cosmological', MetricSpec.from_dict(data, 'example3-cosmological'), claims,
                          [(0.5, 2.0)] + [(-1.0, 1.0)] * 3, (Fraction(1), Fraction(0), Fraction(0), Fraction(0)),
                          notes=instantiation)


def euclidean_fixture(m=2, dimension: int = 4, c=1, r=0) -> BuiltinExample:
    """α = δ, b = (1, x1, 0, ...): непараллельная 1-форма на плоском фоне"""
    n = dimension
    tag = 'pseudo-riemannian' if Fraction(m) == 0 else ('m-kropina' if Fraction(r) == 0 else 'generalized-m-kropina')
    data = {
        'dimension': n,
        'alpha': _diagonal(['1'] * n),
        'beta': ['1', 'x1'] + ['0'] * (n - 2),
        'family': _family(tag, m, c, r),
    }
    return BuiltinExample('euclidean-fixture', MetricSpec.from_dict(data, 'euclidean-fixture'), [],
                          [(-1.0, 1.0)] * n, tuple(Fraction(1, k + 2) for k in range(n)))


def minkowski_fixture(m=1, dimension: int = 4, c=1, r=0) -> BuiltinExample:
    """Плоский лоренцев фон и постоянная 1-форма: локально минковская метрика"""
    n = dimension
    tag = 'pseudo-riemannian' if Fraction(m) == 0 else ('m-kropina' if Fraction(r) == 0 else 'generalized-m-kropina')
    data = {
        'dimension': n,
        'alpha': _diagonal(['-1'] + ['1'] * (n - 1)),
        'beta': ['2', '1'] + ['0'] * (n - 2),
        'family': _family(tag, m, c, r),
    }
    claims = [Claim('ricci-flat', 'exact', "Ric = 0 (локально минковская)")]
    return BuiltinExample('minkowski-fixture', MetricSpec.from_dict(data, 'minkowski-fixture'), claims,
                          [(-1.0, 1.0)] * n, tuple(Fraction(0) for _ in range(n)))


def sphere_fixture() -> BuiltinExample:
    """Единичная сфера S^3 в стереографических координатах, семейство pseudo-riemannian"""
    conformal = "4/(1 + x1^2 + x2^2 + x3^2)^2"
    data = {
        'dimension': 3,
        'alpha': _diagonal([conformal] * 3),
        'beta': ['1', '0', '0'],
        'family': _family('pseudo-riemannian', 0),
    }
    claims = [Claim('flag-curvature', 'numeric', "K = 1", {'value': 1.0})]
    return BuiltinExample('sphere-fixture', MetricSpec.from_dict(data, 'sphere-fixture'), claims,
                          [(-1.0, 1.0)] * 3, (Fraction(1, 5), Fraction(-1, 3), Fraction(1, 4)))


def sphere_product_fixture() -> BuiltinExample:
    """S^2 x R^2: риманова метрика с ненулевым Ric, проверяемая по sympy"""
    conformal = "4/(1 + x1^2 + x2^2)^2"
    data = {
        'dimension': 4,
        'alpha': _diagonal([conformal, conformal, '1', '1']),
        'beta': ['0', '0', '1', '0'],
        'family': _family('pseudo-riemannian', 0),
    }
    claims = [Claim('field-residual-oracle', 'numeric', "остаток совпадает с тензорным оракулом", {'samples': 5})]
    return BuiltinExample('sphere-product-fixture', MetricSpec.from_dict(data, 'sphere-product-fixture'), claims,
                          [(-1.0, 1.0)] * 4, (Fraction(1, 3), Fraction(-1, 4), Fraction(0), Fraction(0)))


BUILTINS = {
    'example1-flat-anisotropic': example1_flat_anisotropic,
    'example2-vsi': example2_vsi,
    'example3-cosmological': example3_cosmological,
    'euclidean-fixture': euclidean_fixture,
    'minkowski-fixture': minkowski_fixture,
    'sphere-fixture': sphere_fixture,
    'sphere-product-fixture': sphere_product_fixture,
}


def builtin(example_id: str, **options) -> BuiltinExample:
    """Встроенный пример по идентификатору; неподходящие опции отбрасываются"""
    if example_id not in BUILTINS:
        raise ConfigError(f"Неизвестный встроенный пример {example_id!r}; доступны: {', '.join(BUILTINS)}")
    factory = BUILTINS[example_id]
    accepted = inspect.signature(factory).parameters
    kwargs = {key: value for key, value in options.items() if key in accepted and value is not None}
    return factory(**kwargs)


class RiemannianOracle:
    """Тензор Риччи α средствами sympy для фикстур с F = α"""

    def __init__(self, spec: MetricSpec):
        family = spec.family
        if family.m != 0 or family.c != 1 or family.r != 0:
            raise ConfigError("Оракул применим только к pseudo-riemannian с c = 1, r = 0")
        self.n = spec.dimension
        self.coordinates = base_symbols(self.n)
        self.metric = sympy.Matrix([[entry.expr for entry in row] for row in spec.alpha])

    @cached_property
    def inverse_metric(self) -> sympy.Matrix:
        return sympy.simplify(self.metric.inv())

    @cached_property
    def christoffel(self):
        g, ginv, co, n = self.metric, self.inverse_metric, self.coordinates, self.n
        return [[[sympy.simplify(sum(sympy.Rational(1, 2) * ginv[i, l]
                                     * (sympy.diff(g[k, l], co[j]) + sympy.diff(g[j, l], co[k])
                                        - sympy.diff(g[j, k], co[l])) for l in range(n)))
                  for k in range(n)] for j in range(n)] for i in range(n)]

    @cached_property
    def ricci_tensor(self) -> sympy.Matrix:
        cs, co, n = self.christoffel, self.coordinates, self.n

        def riemann(i, j, k, l):
            return (sympy.diff(cs[i][l][j], co[k]) - sympy.diff(cs[i][k][j], co[l])
                    + sum(cs[i][k][p] * cs[p][l][j] - cs[i][l][p] * cs[p][k][j] for p in range(n)))

        return sympy.Matrix(n, n, lambda j, k: sympy.simplify(sum(riemann(i, j, i, k) for i in range(n))))

    @cached_property
    def ricci_scalar(self) -> sympy.Expr:
        ginv, ric, n = self.inverse_metric, self.ricci_tensor, self.n
        return sympy.simplify(sum(ginv[i, j] * ric[i, j] for i in range(n) for j in range(n)))

    @cached_property
    def _functions(self):
        return (sympy.lambdify(self.coordinates, self.ricci_tensor, 'numpy'),
                sympy.lambdify(self.coordinates, self.ricci_scalar, 'numpy'),
                sympy.lambdify(self.coordinates, self.metric, 'numpy'))

    def finsler_ricci(self, x: Sequence[float], y: Sequence[float]) -> float:
        """Ric(x, y) = R_ij(x) y^i y^j"""
        ricci, _, _ = self._functions
        y = np.asarray(y, dtype=float)
        return float(y @ np.asarray(ricci(*[float(v) for v in x]), dtype=float) @ y)

    def vacuum_residual(self, x: Sequence[float], y: Sequence[float]) -> float:
        """-2 R_ij y^i y^j + (2/3) α^2 R: вакуумный остаток при J = 0"""
        _, scalar, metric = self._functions
        values = [float(v) for v in x]
        y = np.asarray(y, dtype=float)
        alpha2 = float(y @ np.asarray(metric(*values), dtype=float) @ y)
        return -2 * self.finsler_ricci(x, y) + 2 * alpha2 * float(scalar(*values)) / 3
