"""
Фундаментальные тензоры обобщённой m-метрики Кропиной

F = αφ(β/α), φ(s) = ± s^(-m) (c + r s^2)^((1+m)/2). Все формулы записаны
без самого α: только через α^2 = ᾱ_ij y^i y^j, β и W = cα^2 + rβ^2,
поэтому одна и та же реализация работает в обоих бэкендах.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from src.autodiff import EvalPoint, lift
from src.backends import Backend, NumericBackend, close
from src.errors import (
    CrossCheckFailed, DegenerateMetric, DomainViolation, EngineError,
)
from src.metric_io import Family, MetricSpec
from src.tensors import TensorBundle, build_tensor, eliminate, total

logger = logging.getLogger(__name__)


class PhiValues(NamedTuple):
    phi: float
    dphi: float
    ddphi: float


def phi_family(s: float, family: Family, cross_check: bool = True) -> PhiValues:
    """φ, φ' и φ'' в замкнутой форме; φ' и φ'' сверяются с джетом"""
    m, c, r = float(family.m), float(family.c), float(family.r)
    s = float(s)
    if s == 0.0 and family.m != 0:
        raise DomainViolation("s = 0 вне области определения φ")
    u = c + r * s * s
    half_integer = (family.m + 1) / 2
    if u == 0.0 or (u < 0.0 and half_integer.denominator != 1):
        raise DomainViolation(f"c + r s^2 = {u} недопустимо для m = {family.m}")
    if s < 0.0 and not family.is_integer_m:
        raise DomainViolation(f"s = {s} < 0 при нецелом m = {family.m}")
    if family.m != 0 and r * s * s == c * m:
        raise DegenerateMetric(f"r s^2 = c m при s = {s}: φ' обращается в ноль")
    sign = family.sign
    if family.m == 0:
        phi, dphi, ddphi = sign * u ** 0.5, sign * r * s * u ** -0.5, sign * c * r * u ** -1.5
    else:
        phi = sign * s ** (-m) * u ** ((1 + m) / 2)
        dphi = sign * s ** (-m - 1) * u ** ((m - 1) / 2) * (r * s * s - c * m)
        ddphi = sign * c * (m + 1) * s ** (-m - 2) * u ** ((m - 3) / 2) * (c * m + r * s * s)
    values = PhiValues(phi, dphi, ddphi)
    if cross_check:
        _cross_check_phi(s, family, values)
    return values


def _cross_check_phi(s: float, family: Family, values: PhiValues):
    jet = lift(EvalPoint((0.0,), (s,)), 1, x_order=0, y_order=2)
    phi = (jet * jet * float(family.r) + float(family.c)) ** (float(family.m + 1) / 2)
    if family.m != 0:
        phi = phi * jet ** (-float(family.m))
    phi = phi * family.sign
    derived = (phi.derivative((0,), (1,)), phi.derivative((0,), (2,)))
    for name, closed, jet_value in (("φ'", values.dphi, derived[0]), ('φ"', values.ddphi, derived[1])):
        if not close(closed, jet_value, 1e-12, 1e-9):
            raise CrossCheckFailed(f"{name}: замкнутая форма {closed!r} и джет {jet_value!r} расходятся при s = {s}")


class MetricFields:
    """Составные части (α,β)-метрики в одной алгебре полей

    ᾱ = sgn(α^2) α, индексы внутри формул (α,β)-метрики поднимаются ᾱ.
    """

    def __init__(self, spec: MetricSpec, algebra):
        self.spec = spec
        self.algebra = algebra
        self.n = n = spec.dimension
        family = spec.family
        self.m, self.c, self.r = family.m, family.c, family.r
        self.xs, self.ys = algebra.coordinates()
        self.sign_alpha = algebra.sign_alpha
        self.alpha = [[algebra.coefficient(spec.alpha[i][j]) for j in range(n)] for i in range(n)]
        self.alpha_bar = [[entry * self.sign_alpha for entry in row] for row in self.alpha]
        self.b = [algebra.coefficient(component) for component in spec.beta]
        self.beta = total(self.b[i] * self.ys[i] for i in range(n))
        self.y_low = [total(self.alpha_bar[i][j] * self.ys[j] for j in range(n)) for i in range(n)]
        self.alpha2 = total(self.y_low[i] * self.ys[i] for i in range(n))
        self.W = self.alpha2 * self.c + self.beta * self.beta * self.r
        self._check_domain()

    def _check_domain(self):
        algebra = self.algebra
        label = algebra.point.label()
        if self.m != 0 and algebra.point_is_zero(self.beta):
            raise DomainViolation(f"β = 0 в точке {label}", {'point': label})
        if self.m != 0 and algebra.point_sign(self.beta) < 0:
            raise DomainViolation(f"β < 0 в точке {label}: рабочая область - подконус β > 0", {'point': label})
        if algebra.point_sign(self.W) <= 0:
            raise DomainViolation(f"cα^2 + rβ^2 <= 0 в точке {label}", {'point': label})
        if self.m != 0:
            critical = self.beta * self.beta * self.r - self.alpha2 * (self.c * self.m)
            if algebra.point_is_zero(critical):
                raise DegenerateMetric(f"r s^2 = c m в точке {label}: φ' = 0", {'point': label})

    @cached_property
    def alpha_det_inverse(self):
        algebra = self.algebra
        return eliminate(self.alpha_bar, algebra.magnitude, lambda: algebra.constant(1),
                         vanishes=algebra.identically_zero)

    @property
    def alpha_inv(self):
        """ᾱ^ij"""
        return self.alpha_det_inverse[1]

    @property
    def alpha_det(self):
        return self.alpha_det_inverse[0]

    @cached_property
    def b_up(self):
        n = self.n
        return [total(self.alpha_inv[i][j] * self.b[j] for j in range(n)) for i in range(n)]

    @cached_property
    def b2(self):
        """b̄^2 = ᾱ^ij b_i b_j = sgn(α^2) ||β||^2"""
        return total(self.b_up[i] * self.b[i] for i in range(self.n))


class FinslerStructure:
    """Ленивые фундаментальные объекты F, g, g^-1, C, I, h, η, a"""

    def __init__(self, spec: MetricSpec, algebra):
        self.spec = spec
        self.algebra = algebra
        self.n = spec.dimension
        self.fields = MetricFields(spec, algebra)

    @property
    def family(self) -> Family:
        return self.spec.family

    @cached_property
    def F2(self):
        f = self.fields
        m = self.family.m
        return self.algebra.power(f.beta, -2 * m) * self.algebra.power(f.W, m + 1)

    @cached_property
    def F(self):
        f = self.fields
        m = self.family.m
        return self.algebra.power(f.beta, -m) * self.algebra.half_power(f.W, m + 1) * self.family.sign

    @cached_property
    def eta(self):
        f = self.fields
        if self.family.m == 0:
            return self.algebra.constant(1)
        return self.algebra.power(f.W * self.algebra.power(f.beta, -2), self.family.m)

    @cached_property
    def ar_coefficients(self):
        """(κ, A, B, C) разложения a = κᾱ + A bb + B(bȳ + ȳb) + C ȳȳ"""
        f = self.fields
        m, c, r = f.m, f.c, f.r
        alpha2, beta, W = f.alpha2, f.beta, f.W
        kappa = c * (m + 1)
        if m == 0:
            # A = r β^2 W / (β^2 W)
            A = beta * 0 + r
            return kappa, A, None, None
        numerator = (alpha2 * alpha2 * (c * c * m * (2 * m + 1))
                     - alpha2 * beta * beta * (c * r * (m - 1))
                     + beta * beta * beta * beta * (r * r))
        A = numerator / (beta * beta * W)
        B = alpha2 * (-2 * c * c * m * (m + 1)) / (beta * W)
        C = (2 * c * c * m * (m + 1)) / W
        return kappa, A, B, C

    @cached_property
    def a(self):
        f = self.fields
        kappa, A, B, C = self.ar_coefficients

        def component(i, j):
            value = f.alpha_bar[i][j] * kappa + f.b[i] * f.b[j] * A
            if B is not None:
                value = value + (f.b[i] * f.y_low[j] + f.b[j] * f.y_low[i]) * B + f.y_low[i] * f.y_low[j] * C
            return value

        return build_tensor(2, self.n, component, symmetric=(0, 1))

    @cached_property
    def g(self):
        """g_ij = η a_ij"""
        return build_tensor(2, self.n, lambda i, j: self.eta * self.a[i][j], symmetric=(0, 1))

    @cached_property
    def _woodbury(self):
        """Обращение a через поправку ранга 2 в базисе (b, ȳ)"""
        f = self.fields
        kappa, A, B, C = self.ar_coefficients
        zero = f.beta * 0
        B = zero if B is None else B
        C = zero if C is None else C
        # P = U^T ᾱ^-1 U при U = [b, ȳ]
        P = [[f.b2, f.beta], [f.beta, f.alpha2]]
        M = [[A, B], [B, C]]
        D = [[(1 if p == q else 0) + total(P[p][k] * M[k][q] for k in range(2)) / kappa
              for q in range(2)] for p in range(2)]
        det_D = D[0][0] * D[1][1] - D[0][1] * D[1][0]
        if self.algebra.point_is_zero(det_D):
            raise DegenerateMetric("det g = 0: вырожденная поправка ранга 2")
        D_inv = [[D[1][1] / det_D, -D[0][1] / det_D], [-D[1][0] / det_D, D[0][0] / det_D]]
        T = [[total(M[p][k] * D_inv[k][q] for k in range(2)) for q in range(2)] for p in range(2)]
        return T, det_D

    @cached_property
    def a_inv(self):
        f = self.fields
        kappa = self.ar_coefficients[0]
        T, _ = self._woodbury
        V = [f.b_up, f.ys]

        def component(i, j):
            correction = total(V[p][i] * T[p][q] * V[q][j] for p in range(2) for q in range(2))
            return f.alpha_inv[i][j] / kappa - correction / (kappa * kappa)

        return build_tensor(2, self.n, component, symmetric=(0, 1))

    @cached_property
    def g_inv(self):
        inverse_eta = 1 / self.eta
        return build_tensor(2, self.n, lambda i, j: self.a_inv[i][j] * inverse_eta, symmetric=(0, 1))

    @cached_property
    def det_g(self):
        """det g = η^n κ^n det ᾱ det(I + P M/κ)"""
        kappa = self.ar_coefficients[0]
        _, det_D = self._woodbury
        det = self.algebra.power(self.eta, self.n) * self.fields.alpha_det * det_D * (kappa ** self.n)
        if self.algebra.point_is_zero(det):
            raise DegenerateMetric("det g = 0 в точке")
        return det

    @cached_property
    def det_formula(self):
        """Замкнутая форма det g / det ᾱ через F^2, W и b̄^2"""
        f = self.fields
        m, c, r, n = f.m, f.c, f.r, self.n
        if m == 0:
            # при m = 0 множитель β^2 сокращается
            reduced = f.b2 * r + c
        else:
            bracket = f.b2 * (f.alpha2 * (c * m) + f.beta * f.beta * r) - f.beta * f.beta * (c * (m - 1))
            reduced = bracket / (f.beta * f.beta)
        return (self.algebra.power(self.F2, n) * (c * (m + 1)) ** (n - 1)
                * self.algebra.power(f.W, -n) * reduced) * f.alpha_det

    @cached_property
    def g_direct(self):
        """½ ∂̇_i ∂̇_j F^2"""
        return build_tensor(2, self.n, lambda i, j: self.F2.dy(i).dy(j) * Fraction(1, 2), symmetric=(0, 1))

    @cached_property
    def ell(self):
        return [self.F.dy(i) for i in range(self.n)]

    @cached_property
    def y_flat(self):
        """g_ij y^j = ½ ∂̇_i F^2"""
        return [self.F2.dy(i) * Fraction(1, 2) for i in range(self.n)]

    @cached_property
    def h(self):
        return build_tensor(2, self.n, lambda i, j: self.g[i][j] - self.ell[i] * self.ell[j], symmetric=(0, 1))

    @cached_property
    def h_direct(self):
        """F ∂̇_i ∂̇_j F"""
        return build_tensor(2, self.n, lambda i, j: self.F * self.F.dy(i).dy(j), symmetric=(0, 1))

    @cached_property
    def C(self):
        return build_tensor(3, self.n, lambda i, j, k: self.g[i][j].dy(k) * Fraction(1, 2), symmetric=(0, 1, 2))

    @cached_property
    def I(self):
        n = self.n
        return [total(self.g_inv[j][k] * self.C[i][j][k] for j in range(n) for k in range(n)) for i in range(n)]

    @cached_property
    def dlog_eta_x(self):
        return [self.eta.dx(j) / self.eta for j in range(self.n)]

    @cached_property
    def dlog_eta_y(self):
        return [self.eta.dy(j) / self.eta for j in range(self.n)]

    def phi_values(self) -> PhiValues:
        """φ в точке (только численный бэкенд: нужен сам α)"""
        f = self.fields
        alpha = math.sqrt(self.algebra.evaluate(f.alpha2))
        return phi_family(self.algebra.evaluate(f.beta) / alpha, self.family)

    def g_phi_form(self) -> np.ndarray:
        """g_ij = ρ ᾱ_ij + ρ0 b_i b_j + ρ1 (b_i α_j + b_j α_i) + ρ2 α_i α_j"""
        f = self.fields
        value = self.algebra.evaluate
        alpha = math.sqrt(value(f.alpha2))
        s = value(f.beta) / alpha
        phi, dphi, ddphi = self.phi_values()
        rho = phi * (phi - s * dphi)
        rho0 = phi * ddphi + dphi * dphi
        rho1 = -(s * (phi * ddphi + dphi * dphi) - phi * dphi)
        rho2 = -s * rho1
        alpha_bar = np.array([[value(entry) for entry in row] for row in f.alpha_bar])
        b = np.array([value(component) for component in f.b])
        unit = np.array([value(component) for component in f.y_low]) / alpha
        return (rho * alpha_bar + rho0 * np.outer(b, b)
                + rho1 * (np.outer(b, unit) + np.outer(unit, b)) + rho2 * np.outer(unit, unit))

    def det_phi_form(self) -> float:
        """det ᾱ φ^(n+1) (φ - sφ')^(n-2) (φ - sφ' + (b̄^2 - s^2) φ'')"""
        f = self.fields
        value = self.algebra.evaluate
        alpha = math.sqrt(value(f.alpha2))
        s = value(f.beta) / alpha
        phi, dphi, ddphi = self.phi_values()
        n = self.n
        return (value(f.alpha_det) * phi ** (n + 1) * (phi - s * dphi) ** (n - 2)
                * (phi - s * dphi + (value(f.b2) - s * s) * ddphi))


@dataclass
class FundamentalTensors:
    """Значения фундаментальных тензоров в точке"""
    point: EvalPoint
    backend: str
    F: TensorBundle
    F2: TensorBundle
    g: TensorBundle
    g_inv: TensorBundle
    det_g: TensorBundle
    h: TensorBundle
    ell: TensorBundle
    C: TensorBundle
    I: TensorBundle
    eta: TensorBundle
    a: TensorBundle
    checks: Dict[str, bool] = field(default_factory=dict)

    def bundles(self) -> List[TensorBundle]:
        return [self.F, self.F2, self.g, self.g_inv, self.det_g, self.h, self.ell, self.C, self.I, self.eta, self.a]


def _max_abs(algebra, fields: Sequence) -> float:
    return max((abs(algebra.evaluate(item)) for item in fields), default=0.0)


def _flatten(tensor, rank: int) -> List:
    if rank == 0:
        return [tensor]
    return [item for sub in tensor for item in _flatten(sub, rank - 1)]


def tensors_agree(algebra, left, right, rank: int) -> bool:
    """Покомпонентное совпадение с масштабом по наибольшей компоненте"""
    left_items, right_items = _flatten(left, rank), _flatten(right, rank)
    scale = max(_max_abs(algebra, left_items), _max_abs(algebra, right_items))
    return all(algebra.agree(a, b, scale) for a, b in zip(left_items, right_items))


def structure_checks(structure: FinslerStructure, strict: bool = True) -> Dict[str, bool]:
    """Перекрёстные проверки фундаментальных тензоров

    Несовпадение двух построений g, g^-1 или det g - ошибка CrossCheckFailed,
    тождества Эйлера только записываются.
    """
    algebra = structure.algebra
    n = structure.n
    f = structure.fields
    ys = f.ys
    checks: Dict[str, bool] = {}
    checks['g_closed_equals_direct'] = tensors_agree(algebra, structure.g, structure.g_direct, 2)
    identity = [[algebra.constant(1 if i == j else 0) for j in range(n)] for i in range(n)]
    product = [[total(structure.g[i][k] * structure.g_inv[k][j] for k in range(n)) for j in range(n)]
               for i in range(n)]
    checks['g_times_inverse_is_identity'] = tensors_agree(algebra, product, identity, 2)
    g_values = [[algebra.value(entry) for entry in row] for row in structure.g]
    det_direct, _ = eliminate(g_values, algebra.magnitude, lambda: algebra.value(algebra.constant(1)),
                              invert=False, vanishes=algebra.identically_zero)
    checks['det_lemma_equals_direct'] = algebra.agree(structure.det_g, det_direct, abs(algebra.evaluate(det_direct)))
    checks['det_formula_equals_direct'] = algebra.agree(structure.det_formula, det_direct,
                                                        abs(algebra.evaluate(det_direct)))
    if not algebra.exact:
        phi_form = structure.g_phi_form()
        scale = float(np.max(np.abs(phi_form)))
        direct = np.array([[algebra.evaluate(entry) for entry in row] for row in structure.g_direct])
        checks['g_phi_form_equals_direct'] = bool(np.all(np.abs(phi_form - direct) <= algebra.atol + algebra.rtol * scale))
        det_phi = structure.det_phi_form()
        checks['det_phi_form_equals_direct'] = close(det_phi, algebra.evaluate(det_direct), algebra.atol, algebra.rtol)
    for name in list(checks):
        if strict and not checks[name]:
            raise CrossCheckFailed(f"Перекрёстная проверка не пройдена: {name}",
                                   {'point': algebra.point.label(), 'object': name})
    F_value = abs(algebra.evaluate(structure.F))
    euler = total(structure.ell[i] * ys[i] for i in range(n))
    checks['euler_ell_y_equals_F'] = algebra.agree(euler, structure.F, F_value)
    gyy = total(structure.g[i][j] * ys[i] * ys[j] for i in range(n) for j in range(n))
    checks['g_yy_equals_F2'] = algebra.agree(gyy, structure.F2, F_value ** 2)
    C_scale = _max_abs(algebra, _flatten(structure.C, 3)) * max(abs(algebra.evaluate(y)) for y in ys)
    checks['C_y_vanishes'] = all(
        algebra.is_zero(total(structure.C[i][j][k] * ys[k] for k in range(n)), C_scale)
        for i in range(n) for j in range(n)
    )
    h_scale = _max_abs(algebra, _flatten(structure.g, 2)) * max(abs(algebra.evaluate(y)) for y in ys)
    checks['h_y_vanishes'] = all(
        algebra.is_zero(total(structure.h[i][j] * ys[j] for j in range(n)), h_scale) for i in range(n)
    )
    checks['h_equals_F_ddF'] = tensors_agree(algebra, structure.h, structure.h_direct, 2)
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning(f"Не пройдены проверки в точке {algebra.point.label()}: {', '.join(failed)}")
    return checks


def fundamental_tensors(spec: MetricSpec, at: EvalPoint, backend: Backend) -> FundamentalTensors:
    """F, g, g^-1, det g, h, ℓ, C, I, η, a в точке с перекрёстными проверками"""
    algebra = backend.algebra(spec, at)
    structure = FinslerStructure(spec, algebra)
    logger.debug(f"Фундаментальные тензоры в {at.label()} ({algebra.name})")
    checks = structure_checks(structure)
    n = structure.n

    def bundle(name, rank, fields, symmetries=()):
        return TensorBundle.from_fields(algebra, name, rank, fields, symmetries)

    return FundamentalTensors(
        point=at,
        backend=algebra.name,
        F=bundle('F', 0, structure.F),
        F2=bundle('F2', 0, structure.F2),
        g=bundle('g', 2, structure.g, ((0, 1),)),
        g_inv=bundle('g_inv', 2, structure.g_inv, ((0, 1),)),
        det_g=bundle('det_g', 0, structure.det_g),
        h=bundle('h', 2, structure.h, ((0, 1),)),
        ell=bundle('ell', 1, structure.ell),
        C=bundle('C', 3, structure.C, ((0, 1, 2),)),
        I=bundle('I', 1, structure.I),
        eta=bundle('eta', 0, structure.eta),
        a=bundle('a', 2, structure.a, ((0, 1),)),
        checks=checks,
    )


@dataclass
class ProbeSample:
    point: str
    eigenvalues: List[float] = field(default_factory=list)
    positive_definite: bool = False
    signature: str = ''
    printed_condition: Optional[float] = None
    standard_condition: Optional[float] = None
    error: Optional[str] = None

    @property
    def printed_holds(self) -> Optional[bool]:
        return None if self.printed_condition is None else self.printed_condition > 0

    @property
    def standard_holds(self) -> Optional[bool]:
        return None if self.standard_condition is None else self.standard_condition > 0


@dataclass
class ProbeReport:
    samples: List[ProbeSample]

    @property
    def all_positive_definite(self) -> bool:
        evaluated = [s for s in self.samples if s.error is None]
        return bool(evaluated) and all(s.positive_definite for s in evaluated)

    @property
    def any_positive_definite(self) -> bool:
        return any(s.positive_definite for s in self.samples if s.error is None)

    @property
    def signatures(self) -> List[str]:
        return sorted({s.signature for s in self.samples if s.error is None})


def positive_definiteness_probe(spec: MetricSpec, samples: Sequence[EvalPoint],
                                backend: Optional[NumericBackend] = None) -> ProbeReport:
    """Сигнатура g по собственным числам и обе формы условия положительности"""
    backend = backend or NumericBackend(x_order=1, y_order=2)
    results = []
    for point in samples:
        sample = ProbeSample(point=point.label())
        try:
            algebra = backend.algebra(spec, point)
            structure = FinslerStructure(spec, algebra)
            g = np.array([[algebra.evaluate(entry) for entry in row] for row in structure.g_direct])
            eigenvalues = np.linalg.eigvalsh(g)
            sample.eigenvalues = [float(v) for v in eigenvalues]
            positive = int(np.sum(eigenvalues > 0))
            negative = int(np.sum(eigenvalues < 0))
            sample.signature = f"({positive},{negative})"
            sample.positive_definite = negative == 0 and positive == len(eigenvalues)
            f = structure.fields
            s = algebra.evaluate(f.beta) / math.sqrt(algebra.evaluate(f.alpha2))
            phi, dphi, ddphi = structure.phi_values()
            b2 = algebra.evaluate(f.b2)
            sample.printed_condition = phi - phi * dphi + (b2 - s * s) * ddphi
            sample.standard_condition = phi - s * dphi + (b2 - s * s) * ddphi
        except EngineError as e:
            logger.warning(f"Точка {point.label()} пропущена пробой положительности: {e}")
            sample.error = str(e)
        results.append(sample)
    return ProbeReport(results)
