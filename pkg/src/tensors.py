"""
Помеченные наборы компонент тензоров и общие операции над полями
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DegenerateMetric
from src.ratfun import Certificate

logger = logging.getLogger(__name__)


def total(items: Iterable):
    """Сумма полей без начального нуля"""
    items = list(items)
    if not items:
        raise ValueError("Пустая сумма полей")
    return reduce(lambda a, b: a + b, items)


def symmetric_key(indices: Sequence[int]) -> Tuple[int, ...]:
    return tuple(sorted(indices))


def build_tensor(rank: int, n: int, component: Callable[..., Any],
                 symmetric: Sequence[int] = ()) -> Any:
    """Вложенные списки компонент; позиции symmetric вычисляются один раз на класс перестановок"""
    cache: Dict[Tuple[int, ...], Any] = {}
    symmetric = tuple(symmetric)

    def key_of(index: Tuple[int, ...]) -> Tuple[int, ...]:
        if not symmetric:
            return index
        ordered = sorted(index[p] for p in symmetric)
        key = list(index)
        for p, v in zip(symmetric, ordered):
            key[p] = v
        return tuple(key)

    def make(prefix: Tuple[int, ...]):
        if len(prefix) == rank:
            key = key_of(prefix)
            if key not in cache:
                cache[key] = component(*key)
            return cache[key]
        return [make(prefix + (i,)) for i in range(n)]

    return make(())


def tensor_items(tensor: Any, rank: int, n: int):
    """Пары (индексы, компонента)"""
    for index in itertools.product(range(n), repeat=rank):
        value = tensor
        for i in index:
            value = value[i]
        yield index, value


def map_tensor(tensor: Any, rank: int, function: Callable[[Any], Any]) -> Any:
    if rank == 0:
        return function(tensor)
    return [map_tensor(item, rank - 1, function) for item in tensor]


def eliminate(matrix: List[List[Any]], magnitude: Callable[[Any], float],
              one: Callable[[], Any], invert: bool = True,
              vanishes: Optional[Callable[[Any], bool]] = None) -> Tuple[Any, Optional[List[List[Any]]]]:
    """Гаусс-Жордан над произвольным полем: (определитель, обратная матрица)

    Ведущий элемент выбирается по наибольшей величине magnitude в точке.
    Строка пропускается только при тождественно нулевом множителе (vanishes);
    для джетов нулевое значение в точке не означает нулевых производных.
    Без vanishes элементы считаются числами.
    """
    vanishes = vanishes or (lambda entry: magnitude(entry) == 0.0)
    n = len(matrix)
    rows = [list(row) for row in matrix]
    if invert:
        inverse = [[one() if i == j else one() * 0 for j in range(n)] for i in range(n)]
    else:
        inverse = None
    det = one()
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: magnitude(rows[r][col]))
        if magnitude(rows[pivot][col]) == 0.0:
            raise DegenerateMetric("Вырожденная матрица: нулевой ведущий элемент")
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            if inverse is not None:
                inverse[col], inverse[pivot] = inverse[pivot], inverse[col]
            det = -det
        head = rows[col][col]
        det = det * head
        scale = 1 / head
        rows[col] = [entry * scale for entry in rows[col]]
        if inverse is not None:
            inverse[col] = [entry * scale for entry in inverse[col]]
        for r in range(n):
            if r == col:
                continue
            factor = rows[r][col]
            if vanishes(factor):
                continue
            rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
            if inverse is not None:
                inverse[r] = [a - factor * b for a, b in zip(inverse[r], inverse[col])]
    return det, inverse


@dataclass
class TensorBundle:
    """Набор компонент одного объекта с записанными симметриями"""
    name: str
    rank: int
    values: Any
    symmetries: Tuple[Tuple[int, ...], ...] = ()
    certificates: Optional[Any] = None
    exact: Optional[Any] = field(default=None, repr=False)

    @classmethod
    def from_fields(cls, algebra, name: str, rank: int, fields: Any,
                    symmetries: Tuple[Tuple[int, ...], ...] = ()) -> "TensorBundle":
        values = map_tensor(fields, rank, algebra.evaluate)
        certificates = None
        exact = None
        if algebra.exact:
            certificates = map_tensor(fields, rank, algebra.certificate)
            exact = map_tensor(fields, rank, algebra.value)
        return cls(name, rank, np.asarray(values, dtype=float), symmetries, certificates, exact)

    def certificate(self):
        """Rational, если рациональны все компоненты"""
        if self.certificates is None:
            return None
        flat = np.asarray(self.certificates, dtype=object).ravel().tolist()
        return Certificate.RATIONAL if all(c == Certificate.RATIONAL for c in flat) else Certificate.IRRATIONAL

    def rows(self) -> List[Dict[str, Any]]:
        """Строки отчёта: объект, индексы, значение, сертификат"""
        n = self.values.shape[0] if self.rank else 1
        result = []
        if self.rank == 0:
            items = [((), self.values.item())]
        else:
            items = [(index, float(self.values[index])) for index in itertools.product(range(n), repeat=self.rank)]
        for index, value in items:
            row = {
                'object': self.name,
                'index': ''.join(str(i + 1) for i in index),
                'value': float(value),
            }
            if self.certificates is not None:
                certificate = self.certificates
                for i in index:
                    certificate = certificate[i]
                row['certificate'] = certificate.value
            result.append(row)
        return result
