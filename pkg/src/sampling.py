"""
Выборка точек конической области и среднее Ric по индикатрисе
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.autodiff import EvalPoint
from src.backends import NumericBackend
from src.curvature import CurvatureTower
from src.errors import ConfigError, DomainViolation, EmptyCone, EngineError, InsufficientSamples
from src.geometry import FinslerStructure
from src.metric_io import MetricSpec

logger = logging.getLogger(__name__)

Box = Sequence[Tuple[float, float]]


def admissible(spec: MetricSpec, x: Sequence[float], y: Sequence[float],
               reference_sign: Optional[int] = 1) -> bool:
    """β > 0 (при m = 0 знак β любой), cα^2 + rβ^2 > 0, α^2 != 0, согласованный знак α^2, rβ^2 != cmα^2"""
    family = spec.family
    x = np.asarray([float(v) for v in x])
    y = np.asarray([float(v) for v in y])
    try:
        alpha2 = float(y @ spec.alpha_at(x) @ y)
        beta = float(spec.beta_at(x) @ y)
    except (ValueError, ZeroDivisionError, OverflowError):
        return False
    if not (np.isfinite(alpha2) and np.isfinite(beta)) or alpha2 == 0.0:
        return False
    if family.m != 0 and beta == 0.0:
        return False
    sign = 1 if alpha2 > 0 else -1
    if reference_sign is not None and sign != reference_sign:
        return False
    if family.m != 0 and beta < 0:
        return False
    c, r, m = float(family.c), float(family.r), float(family.m)
    alpha2_bar = sign * alpha2
    if c * alpha2_bar + r * beta * beta <= 0:
        return False
    if family.m != 0 and r * beta * beta == c * m * alpha2_bar:
        return False
    return True


def _quantize(values: np.ndarray, max_denominator: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(float(v)).limit_denominator(max_denominator) for v in values)


def _default_box(spec: MetricSpec, box: float) -> List[Tuple[float, float]]:
    return [(-box, box)] * spec.dimension


def _draw_one(spec: MetricSpec, seed_sequence: np.random.SeedSequence, budget: int,
              low: np.ndarray, high: np.ndarray, x: Optional[Sequence], rational: bool,
              max_denominator: int, reference_sign: Optional[int]) -> Tuple[EvalPoint, int]:
    """Первая допустимая точка своего подпотока и число попыток"""
    rng = np.random.default_rng(seed_sequence)
    n = spec.dimension
    for draws in range(1, budget + 1):
        base = np.asarray([float(v) for v in x]) if x is not None else rng.uniform(low, high)
        direction = rng.uniform(-1.0, 1.0, size=n)
        if rational:
            base_values = tuple(x) if x is not None else _quantize(base, max_denominator)
            direction_values = _quantize(direction, max_denominator)
        else:
            base_values, direction_values = tuple(float(v) for v in base), tuple(float(v) for v in direction)
        if admissible(spec, base_values, direction_values, reference_sign):
            return EvalPoint(base_values, direction_values), draws
    raise EmptyCone(f"Подпоток не нашёл допустимой точки за {budget} попыток", {'draws': budget})


def _draw_worker(spec: MetricSpec, seed_sequences: Sequence[np.random.SeedSequence], budget: int,
                 base_box: Box, x: Optional[Sequence], rational: bool, max_denominator: int,
                 reference_sign: Optional[int]) -> List[EvalPoint]:
    low = np.array([b[0] for b in base_box], dtype=float)
    high = np.array([b[1] for b in base_box], dtype=float)
    points: List[EvalPoint] = []
    draws = 0
    for seed_sequence in seed_sequences:
        point, used = _draw_one(spec, seed_sequence, budget, low, high, x, rational, max_denominator,
                                reference_sign)
        points.append(point)
        draws += used
    logger.debug(f"Поток выборки: принято {len(points)} из {draws}")
    return points


def sample_cone(spec: MetricSpec, seed: int, count: int, x: Optional[Sequence] = None,
                base_box: Optional[Box] = None, box: float = 1.0, max_draws: int = 1_000_000,
                workers: int = 4, rational: bool = False, max_denominator: int = 16,
                reference_sign: Optional[int] = 1) -> List[EvalPoint]:
    """Точки (x, y) конической области, детерминированные по seed

    Каждая точка выбирается из своего подпотока SeedSequence с номером точки,
    поэтому результат не зависит от числа потоков.
    """
    if seed is None:
        raise ConfigError("Для выборки нужен seed")
    if count <= 0:
        return []
    if x is not None and len(x) != spec.dimension:
        raise DomainViolation(f"Базовая точка размерности {len(x)} при n = {spec.dimension}")
    workers = max(1, min(workers, count))
    base_box = list(base_box) if base_box is not None else _default_box(spec, box)
    budget = max(1, max_draws // count)
    children = np.random.SeedSequence(seed).spawn(count)
    chunks = [children[k::workers] for k in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(_draw_worker, spec, chunk, budget, base_box, x, rational,
                            max_denominator, reference_sign)
            for chunk in chunks
        ]
        batches = [future.result() for future in futures]
    points: List[EvalPoint] = [None] * count
    for k, batch in enumerate(batches):
        points[k::workers] = batch
    logger.info(f"Выбрано {len(points)} точек конической области (seed={seed}, потоков={workers})")
    return points


@dataclass
class IndicatrixEstimate:
    """Среднее Ric по направлениям, нормированным на F = 1"""
    mean: float
    standard_error: float
    n_samples: int
    seed: int

    def to_dict(self):
        return {'mean': self.mean, 'standard_error': self.standard_error,
                'n_samples': self.n_samples, 'seed': self.seed}


def _finsler_norm(spec: MetricSpec, point: EvalPoint, backend: NumericBackend) -> float:
    return FinslerStructure(spec, backend.algebra(spec, point)).F.primal


def _ricci_at(spec: MetricSpec, backend: NumericBackend) -> Callable[[EvalPoint], float]:
    def ricci(point: EvalPoint) -> float:
        tower = CurvatureTower(FinslerStructure(spec, backend.algebra(spec, point)))
        return tower.algebra.evaluate(tower.Ric)
    return ricci


def indicatrix_average(spec: MetricSpec, x: Sequence[float], seed: int, n_samples: int,
                       backend: Optional[NumericBackend] = None,
                       ricci: Optional[Callable[[EvalPoint], float]] = None,
                       workers: int = 4, max_draws: int = 1_000_000) -> IndicatrixEstimate:
    """Оценка Монте-Карло 𝓡 по равномерной выборке направлений, приведённых к F = 1"""
    if n_samples < 2:
        raise InsufficientSamples(f"Для стандартной ошибки нужно не меньше 2 точек, получено {n_samples}")
    backend = backend or NumericBackend()
    if backend.exact:
        raise DomainViolation("Среднее по индикатрисе считается только численным бэкендом")
    norm_backend = backend.with_orders(x_order=0, y_order=0)
    candidates = sample_cone(spec, seed, n_samples, x=x, max_draws=max_draws, workers=workers,
                             reference_sign=None)
    unit_points = []
    for point in candidates:
        try:
            F = _finsler_norm(spec, point, norm_backend)
        except EngineError as e:
            logger.warning(f"Направление {point.label()} отброшено: {e}")
            continue
        if F > 0:
            unit_points.append(point.scaled(1.0 / F))
    if len(unit_points) < 2:
        raise EmptyCone(f"На индикатрисе F = 1 осталось {len(unit_points)} направлений")
    ricci = ricci or _ricci_at(spec, backend)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        values = np.array(list(executor.map(ricci, unit_points)), dtype=float)
    mean = float(np.mean(values))
    error = float(stats.sem(values)) if np.ptp(values) > 0 else 0.0
    logger.info(f"Среднее Ric по индикатрисе: {mean:.6g} ± {error:.2g} ({len(values)} направлений)")
    return IndicatrixEstimate(mean=mean, standard_error=error, n_samples=len(values), seed=seed)
