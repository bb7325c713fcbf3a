"""
Классификация метрики: таблица рациональности, дефекты специальных
типов и подгонка Эйнштейна

Свободные функции определений (K, θ_i, c, σ) зависят только от x, поэтому
при фиксированном x каждая подгонка - маленькая линейная задача
наименьших квадратов по выборке направлений y.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.autodiff import EvalPoint
from src.backends import Backend, ExactBackend, NumericBackend
from src.curvature import CurvatureTower
from src.errors import DegenerateFlag, DomainViolation, InsufficientSamples
from src.geometry import FinslerStructure
from src.metric_io import MetricSpec
from src.ratfun import Certificate
from src.sampling import sample_cone
from src.tensors import TensorBundle

logger = logging.getLogger(__name__)


class Property(str, Enum):
    ISOTROPIC_MEAN_BERWALD = 'IsotropicMeanBerwald'
    ISOTROPIC_MEAN_LANDSBERG = 'IsotropicMeanLandsberg'
    RELATIVELY_ISOTROPIC_LANDSBERG = 'RelativelyIsotropicLandsberg'
    ISOTROPIC_S_CURVATURE = 'IsotropicSCurvature'
    WEAK_EINSTEIN = 'WeakEinstein'
    EINSTEIN = 'Einstein'
    RICCI_FLAT = 'RicciFlat'
    ALMOST_VANISHING_H = 'AlmostVanishingH'
    ALMOST_ISOTROPIC_FLAG = 'AlmostIsotropicFlag'
    BERWALD = 'Berwald'
    WEAKLY_BERWALD = 'WeaklyBerwald'
    LANDSBERG = 'Landsberg'
    WEAKLY_LANDSBERG = 'WeaklyLandsberg'

    @classmethod
    def parse(cls, name: str) -> "Property":
        for item in cls:
            if item.value.lower() == name.replace('-', '').replace('_', '').lower() or item.name == name:
                return item
        raise ValueError(f"Неизвестное свойство: {name}")


PARAMETER_FREE = {Property.RICCI_FLAT, Property.BERWALD, Property.WEAKLY_BERWALD,
                  Property.LANDSBERG, Property.WEAKLY_LANDSBERG}


class Verdict(str, Enum):
    HOLDS = 'Holds'
    FAILS = 'Fails'


@dataclass
class RationalityRow:
    object: str
    m_tested: int
    certificate: Certificate
    expected: str

    @property
    def expected_certificate(self) -> Certificate:
        if self.expected == 'odd':
            return Certificate.RATIONAL if self.m_tested % 2 else Certificate.IRRATIONAL
        return Certificate.RATIONAL

    @property
    def matches(self) -> bool:
        return self.certificate == self.expected_certificate

    def to_dict(self) -> Dict[str, Any]:
        return {
            'object': self.object,
            'm_tested': self.m_tested,
            'certificate': self.certificate.value,
            'expected': self.expected,
            'expected_certificate': self.expected_certificate.value,
            'matches': self.matches,
        }


# объект, условие рациональности: odd - только для нечётного m, integer/real - для любого целого m
RATIONALITY_ROWS: Tuple[Tuple[str, str], ...] = (
    ('F', 'odd'), ('F^2', 'integer'), ('g_ij', 'integer'), ('eta', 'integer'), ('a_ij', 'integer'),
    ('C_ijk', 'integer'), ('I_i', 'real'), ('d_j log eta', 'real'), ('dot d_j log eta', 'real'),
    ('h_ij', 'integer'), ('l_i', 'odd'), ('G^i', 'real'), ('N^i_j', 'real'), ('G^i_jk', 'real'),
    ('G^i_jkl', 'real'), ('E_ij', 'real'), ('H_ij', 'real'), ('J_i', 'real'), ('R^i_j', 'real'),
    ('Ric', 'real'), ('S', 'real'), ('K', 'integer'), ('L_ijk', 'integer'),
)


def _flag_field(tower: CurvatureTower):
    for k in range(tower.n):
        u = [1 if i == k else 0 for i in range(tower.n)]
        try:
            return tower.flag_curvature(u)
        except DegenerateFlag:
            continue
    raise DegenerateFlag("Нет невырожденного координатного флага")


def _rationality_fields(tower: CurvatureTower) -> Dict[str, Tuple[int, Any]]:
    s = tower.structure
    return {
        'F': (0, lambda: s.F), 'F^2': (0, lambda: s.F2), 'g_ij': (2, lambda: s.g), 'eta': (0, lambda: s.eta),
        'a_ij': (2, lambda: s.a), 'C_ijk': (3, lambda: s.C), 'I_i': (1, lambda: s.I),
        'd_j log eta': (1, lambda: s.dlog_eta_x), 'dot d_j log eta': (1, lambda: s.dlog_eta_y),
        'h_ij': (2, lambda: s.h), 'l_i': (1, lambda: s.ell), 'G^i': (1, lambda: tower.G),
        'N^i_j': (2, lambda: tower.N), 'G^i_jk': (3, lambda: tower.Gamma_berwald),
        'G^i_jkl': (4, lambda: tower.B), 'E_ij': (2, lambda: tower.E), 'H_ij': (2, lambda: tower.H),
        'J_i': (1, lambda: tower.J), 'R^i_j': (2, lambda: tower.R_riem), 'Ric': (0, lambda: tower.Ric),
        'S': (0, lambda: tower.s_curvature()), 'K': (0, lambda: _flag_field(tower)),
        'L_ijk': (3, lambda: tower.L),
    }


def _rational_direction(spec: MetricSpec, at_x: Sequence) -> Tuple[Fraction, ...]:
    points = sample_cone(spec, seed=0, count=1, x=at_x, workers=1, rational=True, max_draws=100_000)
    return points[0].y


def rationality_table(spec: MetricSpec, at_x: Sequence, backend: Optional[ExactBackend] = None,
                      y: Optional[Sequence] = None) -> List[RationalityRow]:
    """Сертификаты рациональности по строкам таблицы для целого m"""
    backend = backend or ExactBackend()
    backend.check_spec(spec)
    at_x = tuple(Fraction(v) if not isinstance(v, float) else Fraction(repr(v)) for v in at_x)
    y = tuple(y) if y is not None else _rational_direction(spec, at_x)
    point = EvalPoint(at_x, y)
    tower = CurvatureTower(FinslerStructure(spec, backend.algebra(spec, point)))
    fields = _rationality_fields(tower)
    m = int(spec.family.m)
    rows = []
    for name, expected in RATIONALITY_ROWS:
        rank, getter = fields[name]
        bundle = TensorBundle.from_fields(tower.algebra, name, rank, getter())
        row = RationalityRow(name, m, bundle.certificate(), expected)
        if not row.matches:
            logger.warning(f"Строка {name}: {row.certificate.value}, ожидалось {row.expected_certificate.value}")
        rows.append(row)
    logger.info(f"Таблица рациональности для m = {m}: {sum(r.matches for r in rows)}/{len(rows)} совпадений")
    return rows


@dataclass
class DefectReport:
    prop: Property
    best_fit_params: Dict[str, Any]
    residual: float
    tol: float
    samples: List[EvalPoint]
    verdict: Verdict
    backend: str = 'numeric'
    seed: Optional[int] = None
    conclusions: Dict[str, bool] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS

    @property
    def conclusions_hold(self) -> bool:
        return all(self.conclusions.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'property': self.prop.value,
            'params': self.best_fit_params,
            'residual': self.residual,
            'tol': self.tol,
            'verdict': self.verdict.value,
            'n_samples': len(self.samples),
            'seed': self.seed,
            'backend': self.backend,
            'conclusions': dict(self.conclusions),
        }


@dataclass
class _SampleRows:
    """Строки линейной задачи target - design @ params в одной точке"""
    target: np.ndarray
    design: np.ndarray
    scale: float
    literal_zero: Optional[bool] = None
    extras: Dict[str, float] = field(default_factory=dict)
    sign_alpha: int = 1


def _values(algebra, items) -> np.ndarray:
    return np.array([algebra.evaluate(item) for item in items], dtype=float)


def _flatten(tensor, rank: int) -> List:
    if rank == 0:
        return [tensor]
    return [item for sub in tensor for item in _flatten(sub, rank - 1)]


def _parameter_names(prop: Property, n: int) -> List[str]:
    theta = [f"theta_{i + 1}" for i in range(n)]
    return {
        Property.ISOTROPIC_MEAN_BERWALD: ['c'],
        Property.ISOTROPIC_MEAN_LANDSBERG: ['c'],
        Property.RELATIVELY_ISOTROPIC_LANDSBERG: ['c'],
        Property.ISOTROPIC_S_CURVATURE: ['c'],
        Property.WEAK_EINSTEIN: ['K'] + theta,
        Property.EINSTEIN: ['K'],
        Property.ALMOST_VANISHING_H: theta,
        Property.ALMOST_ISOTROPIC_FLAG: theta + ['sigma'],
    }.get(prop, [])


def _sample_rows(prop: Property, tower: CurvatureTower, index: int) -> _SampleRows:
    """Нормированные уравнения свойства в одной точке; множитель |F|^-deg"""
    algebra, structure, n = tower.algebra, tower.structure, tower.n
    F = algebra.evaluate(structure.F)
    absF = abs(F)
    y = _values(algebra, tower.ys)
    count = len(_parameter_names(prop, n))

    def parameter_free(items, degree):
        values = _values(algebra, items) * absF ** (-degree)
        zero = all(algebra.is_zero(item) for item in items) if algebra.exact else None
        return _SampleRows(values, np.zeros((len(values), 0)), float(np.max(np.abs(values), initial=0.0)), zero)

    if prop == Property.RICCI_FLAT:
        rows = parameter_free([tower.Ric], 2)
        rows.scale = tower.ricci_scale / absF ** 2
        return rows
    if prop == Property.BERWALD:
        return parameter_free(_flatten(tower.B, 4), -1)
    if prop == Property.WEAKLY_BERWALD:
        return parameter_free(_flatten(tower.E, 2), -1)
    if prop == Property.LANDSBERG:
        return parameter_free(_flatten(tower.L, 3), 0)
    if prop == Property.WEAKLY_LANDSBERG:
        return parameter_free(tower.J, 0)

    if prop == Property.ISOTROPIC_MEAN_BERWALD:
        target = _values(algebra, _flatten(tower.E, 2)) * absF
        h = _values(algebra, _flatten(structure.h, 2))
        design = ((n + 1) / (2 * F) * h * absF).reshape(-1, 1)
        extras = {'max_E': float(np.max(np.abs(target)))}
    elif prop == Property.ISOTROPIC_MEAN_LANDSBERG:
        target = _values(algebra, tower.J)
        design = (F * _values(algebra, structure.I)).reshape(-1, 1)
        extras = {'max_J': float(np.max(np.abs(target)))}
    elif prop == Property.RELATIVELY_ISOTROPIC_LANDSBERG:
        target = _values(algebra, _flatten(tower.L, 3))
        design = (F * _values(algebra, _flatten(structure.C, 3))).reshape(-1, 1)
        extras = {'max_L': float(np.max(np.abs(target)))}
    elif prop == Property.ISOTROPIC_S_CURVATURE:
        target = np.array([algebra.evaluate(tower.s_curvature()) / absF])
        design = np.array([[(n + 1) * F / absF]])
        extras = {}
    elif prop in (Property.WEAK_EINSTEIN, Property.EINSTEIN):
        ric = algebra.evaluate(tower.Ric)
        target = np.array([ric / F ** 2])
        row = [(n - 1) * F ** 2 / F ** 2]
        if prop == Property.WEAK_EINSTEIN:
            row += list(3 * (n - 1) * y * F / F ** 2)
        design = np.array([row])
        extras = {'ric_over_F2': float(target[0])}
    elif prop == Property.ALMOST_VANISHING_H:
        target = _values(algebra, _flatten(tower.H, 2))
        h = _values(algebra, _flatten(structure.h, 2))
        design = np.outer((n + 1) / (2 * F) * h, y)
        extras = {'max_H': float(np.max(np.abs(target)))}
    elif prop == Property.ALMOST_ISOTROPIC_FLAG:
        K = None
        for shift in range(n):
            u = [1 if i == (index + shift) % n else 0 for i in range(n)]
            try:
                K = algebra.evaluate(tower.flag_curvature(u))
                break
            except DegenerateFlag:
                continue
        if K is None:
            raise DegenerateFlag(f"Нет невырожденного флага в точке {algebra.point.label()}")
        target = np.array([K])
        design = np.array([list(3 * y / F) + [1.0]])
        extras = {}
    else:
        raise ValueError(f"Свойство {prop} не поддерживается")
    scale = float(np.max(np.abs(target), initial=0.0))
    if count and design.size:
        scale = max(scale, float(np.max(np.abs(design))))
    if prop in (Property.WEAK_EINSTEIN, Property.EINSTEIN):
        scale = max(scale, tower.ricci_scale / absF ** 2)
    return _SampleRows(target, design, scale, None, extras)


def _group_by_x(samples: Sequence[EvalPoint]) -> Dict[Tuple, List[int]]:
    groups: Dict[Tuple, List[int]] = {}
    for index, point in enumerate(samples):
        groups.setdefault(tuple(point.x), []).append(index)
    return groups


def _tower_at(spec: MetricSpec, point: EvalPoint, backend: Backend) -> CurvatureTower:
    return CurvatureTower(FinslerStructure(spec, backend.algebra(spec, point)))


def _collect_rows(prop: Property, spec: MetricSpec, samples: Sequence[EvalPoint], backend: Backend,
                  workers: int) -> List[_SampleRows]:
    def work(args):
        index, point = args
        tower = _tower_at(spec, point, backend)
        rows = _sample_rows(prop, tower, index)
        rows.sign_alpha = tower.algebra.sign_alpha
        return rows

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        rows = list(executor.map(work, enumerate(samples)))
    require_common_sign([r.sign_alpha for r in rows], samples)
    return rows


def require_common_sign(signs: Sequence[int], points: Sequence[EvalPoint]):
    """Знак α^2 не меняется между точками одного вычисления"""
    for sign, point in zip(signs, points):
        if sign != signs[0]:
            raise DomainViolation(f"Знак α^2 меняется между {points[0].label()} и {point.label()}",
                                  {'point': point.label()})


def _fit(rows: Sequence[_SampleRows], n_params: int) -> Tuple[np.ndarray, np.ndarray]:
    target = np.concatenate([r.target for r in rows])
    if n_params == 0:
        return np.zeros(0), np.abs(target)
    design = np.vstack([r.design for r in rows])
    params, *_ = linalg.lstsq(design, target)
    return params, np.abs(target - design @ params)


def defect(prop: Property, spec: MetricSpec, samples: Sequence[EvalPoint], backend: Backend,
           tol: float = 1e-8, workers: int = 1, seed: Optional[int] = None) -> DefectReport:
    """Дефект свойства после оптимальной подгонки свободных функций при фиксированном x"""
    prop = Property(prop)
    samples = list(samples)
    if not samples:
        raise InsufficientSamples("Пустая выборка")
    backend.check_spec(spec)
    n = spec.dimension
    names = _parameter_names(prop, n)
    groups = _group_by_x(samples)
    for x, indices in groups.items():
        if len(indices) < len(names):
            raise InsufficientSamples(f"В точке x = {x} {len(indices)} направлений для {len(names)} параметров",
                                      {'property': prop.value})
    rows = _collect_rows(prop, spec, samples, backend, workers)
    scale = max(1.0, max(r.scale for r in rows))
    effective_tol = tol * scale
    residual = 0.0
    params_by_x: Dict[str, Dict[str, Any]] = {}
    group_params: Dict[Tuple, np.ndarray] = {}
    for x, indices in groups.items():
        params, defects = _fit([rows[i] for i in indices], len(names))
        group_params[x] = params
        residual = max(residual, float(np.max(defects, initial=0.0)))
        params_by_x[samples[indices[0]].label().split(';')[0]] = {
            name: float(value) for name, value in zip(names, params)
        }
    if backend.exact and prop in PARAMETER_FREE:
        holds = all(r.literal_zero for r in rows)
    else:
        holds = residual <= effective_tol
    verdict = Verdict.HOLDS if holds else Verdict.FAILS
    best = next(iter(params_by_x.values())) if len(params_by_x) == 1 else params_by_x
    report = DefectReport(prop, best, residual, effective_tol, samples, verdict, backend.name, seed)
    if holds:
        report.conclusions = _rigidity_conclusions(prop, spec, samples, backend, rows, group_params,
                                                   effective_tol, workers)
        if not report.conclusions_hold:
            logger.error(f"Следствие теоремы жёсткости нарушено для {prop.value}: {report.conclusions}")
    logger.info(f"Дефект {prop.value}: {residual:.3e} (допуск {effective_tol:.1e}) - {verdict.value}")
    return report


def _max_defect(prop: Property, spec, samples, backend, workers) -> float:
    rows = _collect_rows(prop, spec, samples, backend, workers)
    return max(float(np.max(np.abs(r.target), initial=0.0)) for r in rows)


def _rigidity_conclusions(prop: Property, spec: MetricSpec, samples, backend, rows, group_params,
                          tol: float, workers: int) -> Dict[str, bool]:
    """Наблюдаемые следствия теорем жёсткости при выполненной гипотезе"""
    family = spec.family
    conclusions: Dict[str, bool] = {}
    if family.is_even_m:
        extra_key = {
            Property.ISOTROPIC_MEAN_BERWALD: ('weakly_berwald', 'max_E'),
            Property.ISOTROPIC_MEAN_LANDSBERG: ('weakly_landsberg', 'max_J'),
            Property.RELATIVELY_ISOTROPIC_LANDSBERG: ('landsberg', 'max_L'),
            Property.ALMOST_VANISHING_H: ('vanishing_H', 'max_H'),
        }
        if prop in extra_key:
            name, key = extra_key[prop]
            conclusions[name] = max(r.extras[key] for r in rows) <= tol
        elif prop in (Property.WEAK_EINSTEIN, Property.ALMOST_ISOTROPIC_FLAG):
            n = spec.dimension
            start = 1 if prop == Property.WEAK_EINSTEIN else 0
            theta = max(float(np.max(np.abs(p[start:start + n]), initial=0.0)) for p in group_params.values())
            conclusions['theta_vanishes'] = theta <= tol
        elif prop == Property.ISOTROPIC_S_CURVATURE:
            conclusions['s_curvature_vanishes'] = max(abs(float(p[0])) for p in group_params.values()) <= tol
    if not family.is_integer_m and prop == Property.EINSTEIN:
        conclusions['ricci_flat'] = max(abs(r.extras['ric_over_F2']) for r in rows) <= tol
    if prop == Property.BERWALD:
        conclusions['landsberg'] = _max_defect(Property.LANDSBERG, spec, samples, backend, workers) <= tol
        conclusions['weakly_landsberg'] = _max_defect(Property.WEAKLY_LANDSBERG, spec, samples, backend,
                                                      workers) <= tol
    if prop == Property.LANDSBERG:
        conclusions['weakly_landsberg'] = _max_defect(Property.WEAKLY_LANDSBERG, spec, samples, backend,
                                                      workers) <= tol
    return conclusions


@dataclass
class EinsteinFit:
    K: float
    theta: List[float]
    residual: float
    classification: str
    tol: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {'K': self.K, 'theta': list(self.theta), 'residual': self.residual,
                'classification': self.classification, 'tol': self.tol, 'n_samples': self.n_samples}


def einstein_fit(spec: MetricSpec, x: Sequence, y_samples: Sequence[Sequence], backend: Backend,
                 ricci: Optional[Callable[[EvalPoint], float]] = None, tol: float = 1e-8) -> EinsteinFit:
    """Подгонка Ric = (n-1)(3θ_i y^i F + K F^2) по направлениям при фиксированном x

    Малое θ понижает ответ до einstein, малый Ric - до ricci-flat.
    """
    n = spec.dimension
    if len(y_samples) < n + 2:
        raise InsufficientSamples(f"Нужно не меньше {n + 2} направлений, получено {len(y_samples)}")
    numeric = backend if not backend.exact else NumericBackend(x_order=0, y_order=0)
    norm_backend = numeric.with_orders(x_order=0, y_order=0)
    target, design, scales, signs, points = [], [], [], [], []
    for y in y_samples:
        point = EvalPoint(tuple(x), tuple(y))
        structure = FinslerStructure(spec, norm_backend.algebra(spec, point))
        signs.append(structure.fields.sign_alpha)
        points.append(point)
        F = structure.F.primal
        if ricci is not None:
            ric = float(ricci(point))
            scale = abs(ric) / F ** 2
        else:
            tower = _tower_at(spec, point, backend)
            ric = tower.algebra.evaluate(tower.Ric)
            scale = tower.ricci_scale / F ** 2
        y_values = np.array([float(v) for v in y])
        target.append(ric / F ** 2)
        design.append([n - 1] + list(3 * (n - 1) * y_values / F))
        scales.append(scale)
    require_common_sign(signs, points)
    target = np.array(target)
    design = np.array(design, dtype=float)
    params, *_ = linalg.lstsq(design, target)
    residual = float(np.max(np.abs(target - design @ params)))
    effective_tol = tol * max(1.0, max(scales))
    K, theta = float(params[0]), [float(t) for t in params[1:]]
    if float(np.max(np.abs(target))) <= effective_tol:
        classification = 'ricci-flat'
    elif residual <= effective_tol and max(abs(t) for t in theta) <= effective_tol:
        classification = 'einstein'
    elif residual <= effective_tol:
        classification = 'weak-einstein'
    else:
        classification = 'none'
    logger.info(f"Подгонка Эйнштейна: K = {K:.6g}, остаток {residual:.3e}, {classification}")
    return EinsteinFit(K, theta, residual, classification, effective_tol, len(y_samples))


@dataclass
class BerwaldFit:
    residual: float
    tol: float
    holds: bool
    n_points: int

    def to_dict(self) -> Dict[str, Any]:
        return {'residual': self.residual, 'tol': self.tol, 'holds': self.holds, 'n_points': self.n_points}


def berwald_quadratic_fit(spec: MetricSpec, base_points: Sequence[Sequence], y0: Sequence, backend: Backend,
                          step: float = 0.05, tol: float = 1e-9) -> BerwaldFit:
    """G^i вдоль y0 + t e_k на сетке из 5 точек приближается квадратичным многочленом по t"""
    ts = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * step
    n = spec.dimension
    y0 = np.array([float(v) for v in y0])
    residual = 0.0
    evaluated = 0
    for x in base_points:
        for k in range(n):
            values = []
            try:
                for t in ts:
                    y = y0.copy()
                    y[k] += t
                    tower = _tower_at(spec, EvalPoint(tuple(x), tuple(y)), backend)
                    values.append(_values(tower.algebra, tower.G))
            except (DomainViolation, DegenerateFlag) as e:
                logger.warning(f"Пропуск линии x = {x}, k = {k + 1}: {e}")
                continue
            values = np.array(values)
            scale = max(1.0, float(np.max(np.abs(values))))
            for i in range(n):
                coefficients = np.polyfit(ts, values[:, i], 2)
                fitted = np.polyval(coefficients, ts)
                residual = max(residual, float(np.max(np.abs(fitted - values[:, i]))) / scale)
            evaluated += 1
    if not evaluated:
        raise InsufficientSamples("Ни одна линия сетки не попала в коническую область")
    return BerwaldFit(residual, tol, residual <= tol, evaluated)
