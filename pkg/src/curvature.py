"""
Геодезический спрей и башня кривизн

Спрей строится двумя независимыми путями: через расщепление (α,β)-метрики
G = G_α + αQ s^i_0 + (r00 - 2αQ s0)(Ψ b^i + α^-1 Θ y^i) и напрямую
G^i = ¼ g^ir (y^k ∂̇_r ∂_k F^2 - ∂_r F^2). Всё остальное (связности Бартеля,
Бервальда, Черна, кривизны и остатки уравнений поля) выводится из G.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Union

from src.autodiff import EvalPoint
from src.backends import Backend, NumericBackend, to_rational
from src.errors import (
    CrossCheckFailed, DegenerateFlag, DimensionMismatch, DomainViolation,
    ExactBackendUnavailable, SingularDenominator,
)
from src.geometry import FinslerStructure, PhiValues, tensors_agree
from src.metric_io import CoefficientField, Family, MetricSpec, parse_coefficient
from src.tensors import TensorBundle, build_tensor, total

logger = logging.getLogger(__name__)

RESIDUAL_Y_ORDER = 5


def spray_factors(s: float, b2: float, family: Family) -> Dict[str, float]:
    """Q, Θ, Ψ как функции s = β/α и b̄^2 в замкнутой форме

    Q = φ'/(φ - sφ') = (rs^2 - cm)/(c(m+1)s).
    """
    m, c, r = float(family.m), float(family.c), float(family.r)
    s, b2 = float(s), float(b2)
    if family.m == 0:
        if c + r * b2 == 0.0:
            raise SingularDenominator('Psi', f"c + r b^2 = 0 при b^2 = {b2}")
        return {'Q': r * s / c, 'Theta': 0.0, 'Psi': r / (2 * (c + r * b2))}
    q_denominator = c * (m + 1) * s
    if q_denominator == 0.0:
        raise SingularDenominator('Q', f"c(m+1)s = 0 при s = {s}")
    theta_denominator = c * (m - 1) * s * s - b2 * (c * m + r * s * s)
    if theta_denominator == 0.0:
        raise SingularDenominator('Theta', f"c(m-1)s^2 - b^2(cm + rs^2) = 0 при s = {s}, b^2 = {b2}")
    psi_denominator = 2 * s * s * (b2 * r - c * (m - 1)) + 2 * b2 * c * m
    if psi_denominator == 0.0:
        raise SingularDenominator('Psi', f"знаменатель Ψ равен нулю при s = {s}, b^2 = {b2}")
    return {
        'Q': (r * s * s - c * m) / q_denominator,
        'Theta': c * m * s / theta_denominator,
        'Psi': (c * m + r * s * s) / psi_denominator,
    }


def spray_factors_from_phi(s: float, b2: float, phi: PhiValues) -> Dict[str, float]:
    """Q, Θ, Ψ по определению через φ, φ', φ''"""
    f, df, ddf = phi
    base = f - s * df
    denominator = base + (b2 - s * s) * ddf
    return {
        'Q': df / base,
        'Theta': (f * df - s * (f * ddf + df * df)) / (2 * f * denominator),
        'Psi': ddf / (2 * denominator),
    }


class CurvatureTower:
    """Ленивая башня объектов спрея над FinslerStructure"""

    def __init__(self, structure: FinslerStructure):
        self.structure = structure
        self.algebra = structure.algebra
        self.fields = structure.fields
        self.n = structure.n

    @property
    def ys(self) -> List:
        return self.fields.ys

    def delta(self, f, l: int):
        """δ_l = ∂_l - N^k_l ∂̇_k"""
        return f.dx(l) - total(self.N[k][l] * f.dy(k) for k in range(self.n))

    # --- спрей через расщепление (α,β)-метрики ---

    @cached_property
    def christoffel_alpha(self):
        """Символы Кристоффеля ᾱ (знак sgn(α^2) сокращается)"""
        f = self.fields
        n = self.n
        d = [[[f.alpha_bar[i][j].dx(k) for k in range(n)] for j in range(n)] for i in range(n)]

        def component(i, j, k):
            return total(f.alpha_inv[i][l] * (d[l][k][j] + d[j][l][k] - d[j][k][l]) for l in range(n)) * Fraction(1, 2)

        return build_tensor(3, n, component, symmetric=(1, 2))

    @cached_property
    def G_alpha(self):
        n, ys = self.n, self.ys
        gamma = self.christoffel_alpha
        return [total(gamma[i][j][k] * ys[j] * ys[k] for j in range(n) for k in range(n)) * Fraction(1, 2)
                for i in range(n)]

    @cached_property
    def covariant_b(self):
        """b_{i;j} = ∂_j b_i - Γ^k_ij b_k"""
        f, n = self.fields, self.n
        gamma = self.christoffel_alpha
        return [[f.b[i].dx(j) - total(gamma[k][i][j] * f.b[k] for k in range(n)) for j in range(n)]
                for i in range(n)]

    @cached_property
    def split_parts(self) -> Dict[str, Any]:
        f, n, ys = self.fields, self.n, self.ys
        algebra = self.algebra
        m, c, r = f.m, f.c, f.r
        bij = self.covariant_b
        r_ij = [[(bij[i][j] + bij[j][i]) * Fraction(1, 2) for j in range(n)] for i in range(n)]
        s_ij = [[(bij[i][j] - bij[j][i]) * Fraction(1, 2) for j in range(n)] for i in range(n)]
        r00 = total(r_ij[i][j] * ys[i] * ys[j] for i in range(n) for j in range(n))
        s_low = [total(s_ij[i][j] * ys[j] for j in range(n)) for i in range(n)]
        s_up = [total(f.alpha_inv[i][j] * s_low[j] for j in range(n)) for i in range(n)]
        s_j = [total(f.b_up[i] * s_ij[i][j] for i in range(n)) for j in range(n)]
        s0 = total(s_j[j] * ys[j] for j in range(n))
        beta2 = f.beta * f.beta
        if m == 0:
            # β сокращается: αQ = rβ/c, Θ = 0, Ψ = r / (2(c + r b^2))
            psi_denominator = f.b2 * r + c
            if algebra.point_is_zero(psi_denominator):
                raise SingularDenominator('Psi', f"c + r b^2 = 0 в точке {algebra.point.label()}")
            return {
                'r00': r00, 's_up': s_up, 's0': s0,
                'alpha_Q': f.beta * (r / c), 'Theta_over_alpha': f.beta * 0,
                'Psi': (f.beta * 0 + r) / (psi_denominator * 2),
            }
        q_denominator = f.beta * (c * (m + 1))
        if algebra.point_is_zero(q_denominator):
            raise SingularDenominator('Q', f"c(m+1)β = 0 в точке {algebra.point.label()}")
        theta_denominator = beta2 * (c * (m - 1)) - f.b2 * (f.alpha2 * (c * m) + beta2 * r)
        if algebra.point_is_zero(theta_denominator):
            raise SingularDenominator('Theta',
                                      f"c(m-1)β^2 - b^2(cmα^2 + rβ^2) = 0 в точке {algebra.point.label()}")
        alpha_q = (beta2 * r - f.alpha2 * (c * m)) / q_denominator
        theta_over_alpha = f.beta * (c * m) / theta_denominator
        psi = (f.alpha2 * (c * m) + beta2 * r) / (theta_denominator * -2)
        return {
            'r00': r00, 's_up': s_up, 's0': s0,
            'alpha_Q': alpha_q, 'Theta_over_alpha': theta_over_alpha, 'Psi': psi,
        }

    @cached_property
    def G(self):
        """Спрей через расщепление"""
        f, n, ys = self.fields, self.n, self.ys
        parts = self.split_parts
        alpha_q = parts['alpha_Q']
        tail = parts['r00'] - alpha_q * parts['s0'] * 2
        return [self.G_alpha[i] + alpha_q * parts['s_up'][i]
                + tail * (parts['Psi'] * f.b_up[i] + parts['Theta_over_alpha'] * ys[i])
                for i in range(n)]

    @cached_property
    def G_direct(self):
        """G^i = ¼ g^ir (y^k ∂̇_r ∂_k F^2 - ∂_r F^2)"""
        n, ys = self.n, self.ys
        F2 = self.structure.F2
        dx = [F2.dx(k) for k in range(n)]
        bracket = [total(ys[k] * dx[k].dy(r) for k in range(n)) - dx[r] for r in range(n)]
        g_inv = self.structure.g_inv
        return [total(g_inv[i][r] * bracket[r] for r in range(n)) * Fraction(1, 4) for i in range(n)]

    def spray_routes_agree(self) -> bool:
        return all(
            self.algebra.agree(a, b, max(abs(self.algebra.evaluate(a)), abs(self.algebra.evaluate(b)),
                                         abs(self.algebra.evaluate(self.G_alpha[i]))))
            for i, (a, b) in enumerate(zip(self.G, self.G_direct))
        )

    # --- связности и кривизны ---

    @cached_property
    def N(self):
        return [[self.G[i].dy(j) for j in range(self.n)] for i in range(self.n)]

    @cached_property
    def Gamma_berwald(self):
        return build_tensor(3, self.n, lambda i, j, k: self.N[i][j].dy(k), symmetric=(1, 2))

    @cached_property
    def B(self):
        return build_tensor(4, self.n, lambda i, j, k, l: self.Gamma_berwald[i][j][k].dy(l), symmetric=(1, 2, 3))

    @cached_property
    def E(self):
        n = self.n
        return build_tensor(2, n, lambda i, j: total(self.B[k][k][i][j] for k in range(n)) * Fraction(1, 2),
                            symmetric=(0, 1))

    @cached_property
    def L(self):
        """L_ijk = -¼ y_l B^l_ijk, y_l = ½ ∂̇_l F^2"""
        n = self.n
        y_flat = self.structure.y_flat
        return build_tensor(3, n, lambda i, j, k: total(y_flat[l] * self.B[l][i][j][k] for l in range(n))
                            * Fraction(-1, 4), symmetric=(0, 1, 2))

    @cached_property
    def J(self):
        n = self.n
        g_inv = self.structure.g_inv
        return [total(g_inv[i][j] * self.L[i][j][k] for i in range(n) for j in range(n)) for k in range(n)]

    @cached_property
    def R_barthel(self):
        """R^i_jk = δ_k N^i_j - δ_j N^i_k"""
        n = self.n
        return [[[self.delta(self.N[i][j], k) - self.delta(self.N[i][k], j) for k in range(n)]
                 for j in range(n)] for i in range(n)]

    @cached_property
    def _riemann_terms(self):
        n, ys = self.n, self.ys
        G, N, gamma = self.G, self.N, self.Gamma_berwald
        terms = {}
        for i in range(n):
            for k in range(n):
                terms[(i, k)] = (
                    G[i].dx(k) * 2,
                    total(ys[j] * N[i][k].dx(j) for j in range(n)),
                    total(G[j] * gamma[i][j][k] for j in range(n)) * 2,
                    total(N[i][j] * N[j][k] for j in range(n)),
                )
        return terms

    @cached_property
    def R_riem(self):
        """R^i_k = 2∂_k G^i - y^j ∂_j N^i_k + 2G^j Γ^i_jk - N^i_j N^j_k"""
        terms = self._riemann_terms
        return [[terms[(i, k)][0] - terms[(i, k)][1] + terms[(i, k)][2] - terms[(i, k)][3]
                 for k in range(self.n)] for i in range(self.n)]

    @cached_property
    def ricci_scale(self) -> float:
        """Масштаб слагаемых R^i_k для численных сравнений"""
        evaluate = self.algebra.evaluate
        return max(abs(evaluate(term)) for parts in self._riemann_terms.values() for term in parts)

    @cached_property
    def Ric(self):
        return total(self.R_riem[i][i] for i in range(self.n))

    @cached_property
    def Ric_tensor(self):
        return build_tensor(2, self.n, lambda i, j: self.Ric.dy(i).dy(j) * Fraction(1, 2), symmetric=(0, 1))

    @cached_property
    def H(self):
        """H_ij = y^l (δ_l E_ij - Γ^k_il E_kj - Γ^k_jl E_ki)"""
        n, ys = self.n, self.ys
        E, gamma = self.E, self.Gamma_berwald

        def component(i, j):
            return total(
                ys[l] * (self.delta(E[i][j], l)
                         - total(gamma[k][i][l] * E[k][j] for k in range(n))
                         - total(gamma[k][j][l] * E[k][i] for k in range(n)))
                for l in range(n)
            )

        return build_tensor(2, n, component, symmetric=(0, 1))

    @cached_property
    def Gamma_chern(self):
        """Γ^i_jk = ½ g^il (δ_j g_lk + δ_k g_jl - δ_l g_jk)"""
        n = self.n
        g, g_inv = self.structure.g, self.structure.g_inv
        dg = [[[self.delta(g[i][j], l) for l in range(n)] for j in range(n)] for i in range(n)]

        def component(i, j, k):
            return total(g_inv[i][l] * (dg[l][k][j] + dg[j][l][k] - dg[j][k][l]) for l in range(n)) * Fraction(1, 2)

        return build_tensor(3, n, component, symmetric=(1, 2))

    @cached_property
    def J_chern(self):
        """J_{j|i} = δ_i J_j - Γ^l_ji J_l, индексация [j][i]"""
        n = self.n
        return [[self.delta(self.J[j], i) - total(self.Gamma_chern[l][j][i] * self.J[l] for l in range(n))
                 for i in range(n)] for j in range(n)]

    def s_curvature(self, sigma: Optional[CoefficientField] = None):
        """S = N^i_i - y^i ∂_i log σ; без σ берётся σ = sqrt|det α|"""
        algebra, n, ys = self.algebra, self.n, self.ys
        if sigma is None:
            det = self.fields.alpha_det
            dlog = [det.dx(i) / det * Fraction(1, 2) for i in range(n)]
        else:
            value = sigma.evaluate(algebra.point.x_array())
            if not value > 0:
                raise DomainViolation(f"σ = {value} <= 0 в точке {algebra.point.label()}")
            if algebra.exact and not sigma.is_polynomial:
                raise ExactBackendUnavailable(f"σ = {sigma.text} не многочлен: нужен численный бэкенд")
            jet = algebra.coefficient(sigma)
            dlog = [jet.dx(i) / jet for i in range(n)]
        trace = total(self.N[i][i] for i in range(n))
        return trace - total(ys[i] * dlog[i] for i in range(n))

    def flag_curvature(self, u: Sequence):
        """K(y, u) по значениям g и R^i_k в точке"""
        algebra, n = self.algebra, self.n
        value = algebra.value
        u = [to_rational(v) for v in u] if algebra.exact else [float(v) for v in u]
        if len(u) != n:
            raise DimensionMismatch(f"Вектор флага длины {len(u)} при n = {n}")
        g = [[value(self.structure.g[i][j]) for j in range(n)] for i in range(n)]
        R = [[value(self.R_riem[i][k]) for k in range(n)] for i in range(n)]
        y = [value(v) for v in self.ys]
        F2 = value(self.structure.F2)
        guu = total(g[i][j] * u[i] * u[j] for i in range(n) for j in range(n))
        gyu = total(g[i][j] * y[i] * u[j] for i in range(n) for j in range(n))
        numerator = total(g[i][j] * R[i][k] * u[j] * u[k] for i in range(n) for j in range(n) for k in range(n))
        denominator = F2 * guu - gyu * gyu
        scale = abs(algebra.evaluate(F2 * guu)) + abs(algebra.evaluate(gyu * gyu))
        degenerate = algebra.point_is_zero(denominator) if algebra.exact else algebra.is_zero(denominator, scale)
        if degenerate:
            raise DegenerateFlag(f"Вырожденный флаг: u параллелен y в точке {algebra.point.label()}")
        return numerator / denominator

    def j_term(self):
        """g^ij {∂̇_i(y^l δ_l J_j - N^l_j J_l) + J_{j|i}}"""
        n, ys = self.n, self.ys
        g_inv = self.structure.g_inv
        inner = [total(ys[l] * self.delta(self.J[j], l) for l in range(n))
                 - total(self.N[l][j] * self.J[l] for l in range(n)) for j in range(n)]
        return total(g_inv[i][j] * (inner[j].dy(i) + self.J_chern[j][i]) for i in range(n) for j in range(n))

    def checks(self) -> Dict[str, bool]:
        """Инварианты башни: оба пути спрея, три пути Ric, B·y = 0, R^i_k = y^j R^i_jk"""
        algebra, n, ys = self.algebra, self.n, self.ys
        scale = self.ricci_scale * max(1.0, max(abs(algebra.evaluate(y)) for y in ys))
        results = {'spray_routes_agree': self.spray_routes_agree()}
        ric_from_tensor = total(self.Ric_tensor[i][j] * ys[i] * ys[j] for i in range(n) for j in range(n))
        results['ric_trace_equals_tensor_contraction'] = algebra.agree(self.Ric, ric_from_tensor, scale)
        barthel = [[total(ys[j] * self.R_barthel[i][j][k] for j in range(n)) for k in range(n)] for i in range(n)]
        results['riemann_equals_barthel_contraction'] = tensors_agree(algebra, self.R_riem, barthel, 2)
        B_scale = max(abs(algebra.evaluate(self.Gamma_berwald[i][j][k]))
                      for i in range(n) for j in range(n) for k in range(n))
        results['berwald_annihilates_y'] = all(
            algebra.is_zero(total(self.B[l][i][j][k] * ys[k] for k in range(n)), B_scale)
            for l in range(n) for i in range(n) for j in range(n)
        )
        return results


def _tower(spec: MetricSpec, at: EvalPoint, backend: Backend) -> CurvatureTower:
    backend.check_spec(spec)
    return CurvatureTower(FinslerStructure(spec, backend.algebra(spec, at)))


def _residual_backend(backend: Optional[Backend]) -> Backend:
    backend = backend or NumericBackend()
    if backend.exact:
        return backend
    order = max(RESIDUAL_Y_ORDER, getattr(backend, 'residual_y_order', RESIDUAL_Y_ORDER))
    if backend.y_order < order:
        return backend.with_orders(y_order=order)
    return backend


def _require_dimension_four(spec: MetricSpec):
    if spec.dimension != 4:
        raise DimensionMismatch(f"Уравнение поля записано для n = 4, получено n = {spec.dimension}")


def _r_avg_value(algebra, r_avg):
    r_avg = getattr(r_avg, 'mean', r_avg)
    return to_rational(r_avg) if algebra.exact else float(r_avg)


@dataclass
class SprayData:
    """Коэффициенты спрея и составные части расщепления"""
    point: EvalPoint
    backend: str
    G: TensorBundle
    G_alpha: TensorBundle
    r00: TensorBundle
    s_i0: TensorBundle
    s0: TensorBundle
    Q: float
    Theta: float
    Psi: float
    routes_agree: bool = True


def spray(spec: MetricSpec, at: EvalPoint, backend: Backend) -> SprayData:
    """Спрей двумя путями с проверкой совпадения"""
    tower = _tower(spec, at, backend)
    algebra = tower.algebra
    parts = tower.split_parts
    if not tower.spray_routes_agree():
        raise CrossCheckFailed("Спрей через расщепление и прямой спрей расходятся",
                               {'point': at.label(), 'object': 'G'})
    alpha = math.sqrt(algebra.evaluate(tower.fields.alpha2))
    logger.debug(f"Спрей в {at.label()} ({algebra.name}) согласован")
    return SprayData(
        point=at,
        backend=algebra.name,
        G=TensorBundle.from_fields(algebra, 'G', 1, tower.G),
        G_alpha=TensorBundle.from_fields(algebra, 'G_alpha', 1, tower.G_alpha),
        r00=TensorBundle.from_fields(algebra, 'r00', 0, parts['r00']),
        s_i0=TensorBundle.from_fields(algebra, 's_i0', 1, parts['s_up']),
        s0=TensorBundle.from_fields(algebra, 's0', 0, parts['s0']),
        Q=algebra.evaluate(parts['alpha_Q']) / alpha,
        Theta=algebra.evaluate(parts['Theta_over_alpha']) * alpha,
        Psi=algebra.evaluate(parts['Psi']),
    )


def curvature_tower(spec: MetricSpec, at: EvalPoint, backend: Backend, verify: bool = True) -> CurvatureTower:
    """Башня кривизн в точке; при verify несогласованность путей - CrossCheckFailed"""
    tower = _tower(spec, at, backend)
    if verify:
        checks = tower.checks()
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise CrossCheckFailed(f"Инварианты башни нарушены: {', '.join(failed)}",
                                   {'point': at.label(), 'object': 'tower'})
    return tower


def tower_bundles(tower: CurvatureTower, objects: Optional[Sequence[str]] = None) -> List[TensorBundle]:
    """Компоненты объектов башни для отчёта"""
    layout = {
        'G': (1, ()), 'N': (2, ()), 'Gamma_berwald': (3, ((1, 2),)), 'B': (4, ((1, 2, 3),)),
        'E': (2, ((0, 1),)), 'L': (3, ((0, 1, 2),)), 'J': (1, ()), 'R_riem': (2, ()),
        'Ric': (0, ()), 'Ric_tensor': (2, ((0, 1),)), 'H': (2, ((0, 1),)), 'Gamma_chern': (3, ((1, 2),)),
    }
    names = list(objects) if objects else ['G', 'N', 'E', 'J', 'R_riem', 'Ric', 'Ric_tensor']
    result = []
    for name in names:
        if name not in layout:
            raise ValueError(f"Неизвестный объект башни: {name}")
        rank, symmetries = layout[name]
        result.append(TensorBundle.from_fields(tower.algebra, name, rank, getattr(tower, name), symmetries))
    return result


def s_curvature(spec: MetricSpec, at: EvalPoint, sigma: Union[None, str, CoefficientField],
                backend: Backend) -> TensorBundle:
    """S-кривизна для плотности объёма σ(x)"""
    if isinstance(sigma, str):
        sigma = parse_coefficient(sigma, spec.dimension)
    tower = _tower(spec, at, backend)
    return TensorBundle.from_fields(tower.algebra, 'S', 0, tower.s_curvature(sigma))


def flag_curvature(spec: MetricSpec, at: EvalPoint, u: Sequence, backend: Backend) -> TensorBundle:
    tower = _tower(spec, at, backend)
    return TensorBundle.from_fields(tower.algebra, 'K', 0, tower.flag_curvature(u))


@dataclass
class FieldResiduals:
    """Левые части вакуумного уравнения и уравнения с 𝓡"""
    point: EvalPoint
    backend: str
    pw_residual: TensorBundle
    cs_residual: TensorBundle
    r_avg: float
    scale: float
    pw_vanishes: bool
    cs_vanishes: bool
    ricci_trace_residual: Optional[TensorBundle] = None
    ricci_flat_residual: Optional[TensorBundle] = None

    @property
    def pw(self) -> float:
        return float(self.pw_residual.values)

    @property
    def cs(self) -> float:
        return float(self.cs_residual.values)

    @property
    def ricci_trace(self) -> float:
        return float(self.ricci_trace_residual.values)

    @property
    def ricci_flat(self) -> float:
        return float(self.ricci_flat_residual.values)


def field_residuals(spec: MetricSpec, at: EvalPoint, r_avg: Any = 0, backend: Optional[Backend] = None,
                    tower: Optional[CurvatureTower] = None) -> FieldResiduals:
    """-2Ric + (2F^2/3) g^ij R_ij + (2F^2/3) g^ij{...} и его вариант с (2F/3)𝓡 (n = 4)"""
    _require_dimension_four(spec)
    if tower is None:
        tower = _tower(spec, at, _residual_backend(backend))
    algebra = tower.algebra
    structure = tower.structure
    n = tower.n
    F, F2 = structure.F, structure.F2
    g_inv = structure.g_inv
    ricci_trace = total(g_inv[i][j] * tower.Ric_tensor[i][j] for i in range(n) for j in range(n))
    j_term = tower.j_term()
    pieces = [tower.Ric * -2, F2 * ricci_trace * Fraction(2, 3), F2 * j_term * Fraction(2, 3)]
    pw = total(pieces)
    r_value = _r_avg_value(algebra, r_avg)
    cs = pw - F * r_value * Fraction(2, 3)
    scale = max(tower.ricci_scale * max(1.0, abs(algebra.evaluate(F2))),
                max(abs(algebra.evaluate(piece)) for piece in pieces))
    cs_scale = max(scale, abs(algebra.evaluate(F)) * abs(float(r_value)))
    logger.debug(f"Остатки уравнений поля в {at.label()}: pw = {algebra.evaluate(pw):.3e}")
    return FieldResiduals(
        point=at,
        backend=algebra.name,
        pw_residual=TensorBundle.from_fields(algebra, 'pw_residual', 0, pw),
        cs_residual=TensorBundle.from_fields(algebra, 'cs_residual', 0, cs),
        r_avg=float(r_value),
        scale=scale,
        pw_vanishes=algebra.is_zero(pw, scale),
        cs_vanishes=algebra.is_zero(cs, cs_scale),
        ricci_trace_residual=ricci_tensor_trace_residual(spec, at, r_avg=r_avg, tower=tower),
        ricci_flat_residual=ricci_flat_field_residual(spec, at, tower=tower),
    )


@dataclass
class ReducedResiduals:
    """Приведённые левые части для слабо эйнштейновой метрики"""
    pw: float
    cs: float
    einstein_form: float
    trace_h: float
    trace_g: float
    model_pw: float
    consistent: bool
    exact_parts: Dict[str, Any] = field(default_factory=dict, repr=False)


def reduced_weak_einstein_residual(spec: MetricSpec, at: EvalPoint, K: Any, theta: Sequence,
                                   backend: Backend, r_avg: Any = 0) -> ReducedResiduals:
    """2KF^2 - 3θF + (2F^2/3) g^ij{...} при заданных K и θ_i

    Сверяется с полным остатком, в который подставлены
    Ric = (n-1)(3θF + KF^2) и R_ij = ½ ∂̇∂̇ Ric.
    """
    _require_dimension_four(spec)
    tower = _tower(spec, at, _residual_backend(backend))
    algebra, structure, n, ys = tower.algebra, tower.structure, tower.n, tower.ys
    if len(theta) != n:
        raise DimensionMismatch(f"θ длины {len(theta)} при n = {n}")
    convert = to_rational if algebra.exact else float
    K = convert(K)
    theta = [convert(t) for t in theta]
    r_value = _r_avg_value(algebra, r_avg)
    F, F2, g, g_inv, h = structure.F, structure.F2, structure.g, structure.g_inv, structure.h
    theta_y = total(ys[i] * theta[i] for i in range(n))
    j_term = tower.j_term()
    pw = F2 * K * 2 - theta_y * F * 3 + F2 * j_term * Fraction(2, 3)
    cs = pw - F * r_value * Fraction(2, 3)
    einstein_form = F2 * K * 3 + F2 * j_term - F * r_value
    trace_h = total(g_inv[i][j] * h[i][j] for i in range(n) for j in range(n))
    trace_g = total(g_inv[i][j] * g[i][j] for i in range(n) for j in range(n))
    model_ric = (theta_y * F * 3 + F2 * K) * (n - 1)
    model_tensor = [[model_ric.dy(i).dy(j) * Fraction(1, 2) for j in range(n)] for i in range(n)]
    model_trace = total(g_inv[i][j] * model_tensor[i][j] for i in range(n) for j in range(n))
    model_pw = model_ric * -2 + F2 * model_trace * Fraction(2, 3) + F2 * j_term * Fraction(2, 3)
    scale = max(abs(algebra.evaluate(x)) for x in (F2 * K * 2, theta_y * F * 3, F2 * j_term, model_ric))
    traces_ok = algebra.agree(trace_h, algebra.constant(n - 1), n) and algebra.agree(trace_g, algebra.constant(n), n)
    consistent = traces_ok and algebra.agree(pw, model_pw, scale)
    if not consistent:
        raise CrossCheckFailed("Приведённый остаток не совпадает с подстановкой модели Ric",
                               {'point': at.label(), 'object': 'reduced_weak_einstein'})
    return ReducedResiduals(
        pw=algebra.evaluate(pw),
        cs=algebra.evaluate(cs),
        einstein_form=algebra.evaluate(einstein_form),
        trace_h=algebra.evaluate(trace_h),
        trace_g=algebra.evaluate(trace_g),
        model_pw=algebra.evaluate(model_pw),
        consistent=consistent,
        exact_parts={'pw': algebra.value(pw), 'einstein_form': algebra.value(einstein_form)} if algebra.exact else {},
    )


def ricci_tensor_trace_residual(spec: MetricSpec, at: EvalPoint, backend: Optional[Backend] = None,
                                r_avg: Any = None, tower: Optional[CurvatureTower] = None) -> TensorBundle:
    """(F^2 g^ij - 3 y^i y^j) R_ij, при заданном 𝓡 минус F𝓡"""
    _require_dimension_four(spec)
    if tower is None:
        tower = _tower(spec, at, _residual_backend(backend))
    algebra, structure, n, ys = tower.algebra, tower.structure, tower.n, tower.ys
    R = tower.Ric_tensor
    value = total((structure.F2 * structure.g_inv[i][j] - ys[i] * ys[j] * 3) * R[i][j]
                  for i in range(n) for j in range(n))
    if r_avg is not None:
        value = value - structure.F * _r_avg_value(algebra, r_avg)
    return TensorBundle.from_fields(algebra, 'ricci_trace_residual', 0, value)


def ricci_flat_field_residual(spec: MetricSpec, at: EvalPoint, backend: Optional[Backend] = None,
                              tower: Optional[CurvatureTower] = None) -> TensorBundle:
    """F^2 g^ij (2J_{i|j} + y^l δ_l ∂̇_i J_j + N^k_i ∂̇_k J_j - N^k_j ∂̇_i J_k)"""
    _require_dimension_four(spec)
    if tower is None:
        tower = _tower(spec, at, _residual_backend(backend))
    algebra, structure, n, ys = tower.algebra, tower.structure, tower.n, tower.ys
    J, N = tower.J, tower.N
    dJ = [[J[j].dy(i) for j in range(n)] for i in range(n)]

    def bracket(i, j):
        return (tower.J_chern[i][j] * 2
                + total(ys[l] * tower.delta(dJ[i][j], l) for l in range(n))
                + total(N[k][i] * dJ[k][j] for k in range(n))
                - total(N[k][j] * dJ[i][k] for k in range(n)))

    value = structure.F2 * total(structure.g_inv[i][j] * bracket(i, j) for i in range(n) for j in range(n))
    return TensorBundle.from_fields(algebra, 'ricci_flat_field_residual', 0, value)


def homogeneity_checks(spec: MetricSpec, at: EvalPoint, backend: Backend,
                       factors: Sequence = (2, 3, Fraction(1, 2)), rtol: float = 1e-12) -> Dict[str, bool]:
    """F, G, N, Ric при y -> λy: степени 1, 2, 1, 2"""
    base = _tower(spec, at, backend)
    algebra = base.algebra
    n = base.n
    objects = {
        'F': (1, lambda t: [t.structure.F]),
        'G': (2, lambda t: t.G),
        'N': (1, lambda t: [t.N[i][j] for i in range(n) for j in range(n)]),
        'Ric': (2, lambda t: [t.Ric]),
    }
    reference = {name: [algebra.value(f) for f in getter(base)] for name, (_, getter) in objects.items()}
    results = {}
    for factor in factors:
        factor = to_rational(factor) if algebra.exact else float(factor)
        scaled = _tower(spec, at.scaled(factor), backend)
        for name, (degree, getter) in objects.items():
            values = [scaled.algebra.value(f) for f in getter(scaled)]
            key = f"{name}_degree_{degree}"
            if algebra.exact:
                ok = all(_exact_scaled_equal(algebra, scaled.algebra, r, v, factor ** degree)
                         for r, v in zip(reference[name], values))
            else:
                scale = max(abs(r) for r in reference[name]) * float(factor) ** degree
                ok = all(abs(v - r * float(factor) ** degree) <= rtol * scale + algebra.atol
                         for r, v in zip(reference[name], values))
            results[key] = results.get(key, True) and ok
    return results


def _exact_scaled_equal(algebra, scaled_algebra, reference, value, multiplier) -> bool:
    """Точное сравнение значений в точках (x, y) и (x, λy)"""
    a, b, radicand = reference.exact_parts(algebra.values)
    a2, b2, radicand2 = value.exact_parts(scaled_algebra.values)
    if b == 0 and b2 == 0:
        return a2 == a * multiplier
    # w(λy) = |λ| w(y) при однородном подкоренном выражении степени 2
    return a2 == a * multiplier and b2 * b2 * radicand2 == b * b * radicand * multiplier * multiplier and (b2 * b >= 0)
