"""
Тесты описания метрики: коэффициенты, семейство, JSON
"""

import unittest
from fractions import Fraction
import os
import sys
import tempfile

# Добавляем путь к модулям
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.errors import ConfigError
from src.metric_io import (Family, MetricSpec, dump_metric, load_metric, metric_from_json, metric_to_json,
                           parse_coefficient)


def plane_data(**family):
    return {
        'dimension': 2,
        'alpha': [['1', 'x1*x2'], ['x1*x2', '1 + x1^2']],
        'beta': ['1', '0'],
        'family': dict({'tag': 'm-kropina', 'm': 2}, **family),
    }


class TestCoefficients(unittest.TestCase):
    """Тесты разбора коэффициентов"""

    def test_polynomial(self):
        field = parse_coefficient('x1^2 + 1/2*x2', 2)
        self.assertTrue(field.is_polynomial)
        self.assertAlmostEqual(field.evaluate([2.0, 4.0]), 6.0)
        self.assertEqual(field.exact_taylor([Fraction(2), Fraction(4)], (1, 0)), Fraction(4))
        self.assertEqual(field.exact_taylor([Fraction(2), Fraction(4)], (2, 0)), Fraction(1))

    def test_transcendental(self):
        field = parse_coefficient('exp(x1)', 1)
        self.assertFalse(field.is_polynomial)
        self.assertAlmostEqual(field.numeric_taylor([0.0], (2,)), 0.5)
        with self.assertRaises(ValueError):
            field.exact_taylor([Fraction(0)], (0,))

    def test_rejected_input(self):
        for text in ('__import__("os")', 'x3', 'y1 + 1', '', 'x1; x2'):
            with self.assertRaises(ConfigError, msg=text):
                parse_coefficient(text, 2)


class TestMetricSpec(unittest.TestCase):
    """Тесты MetricSpec и Family"""

    def test_family_defaults(self):
        family = Family.from_dict({'tag': 'kropina'})
        self.assertEqual((family.m, family.c, family.r, family.sign), (1, 1, 0, 1))
        family = Family.from_dict({'tag': 'generalized-m-kropina', 'm': '3/2', 'c': 2, 'r': -1, 'sign': '-'})
        self.assertEqual(family.m, Fraction(3, 2))
        self.assertEqual(family.sign, -1)
        self.assertFalse(family.is_integer_m)

    def test_c_zero_rejected(self):
        with self.assertRaises(ConfigError) as context:
            MetricSpec.from_dict(plane_data(c=0))
        self.assertIn("c = 0 has to be excluded", context.exception.message)

    def test_invalid_specs(self):
        asymmetric = plane_data()
        asymmetric['alpha'] = [['1', 'x1'], ['0', '1']]
        zero_beta = plane_data()
        zero_beta['beta'] = ['0', '0']
        wrong_size = plane_data()
        wrong_size['beta'] = ['1']
        missing = plane_data()
        del missing['family']
        for data in (asymmetric, zero_beta, wrong_size, missing, plane_data(m=-1), plane_data(m=0)):
            with self.assertRaises(ConfigError):
                MetricSpec.from_dict(data)

    def test_with_family(self):
        spec = MetricSpec.from_dict(plane_data())
        changed = spec.with_family(m='5')
        self.assertEqual(changed.family.m, 5)
        self.assertEqual(spec.family.m, 2)
        self.assertEqual(changed.alpha, spec.alpha)

    def test_json_file(self):
        spec = MetricSpec.from_dict(plane_data(tag='generalized-m-kropina', r='1/3'), name='plane')
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'metric.json')
            dump_metric(spec, path)
            loaded = load_metric(path)
        self.assertEqual(loaded.to_dict(), spec.to_dict())
        self.assertEqual(metric_to_json(metric_from_json(metric_to_json(spec))), metric_to_json(spec))

    def test_bad_json(self):
        with self.assertRaises(ConfigError):
            metric_from_json('{"dimension": 2,')
        with self.assertRaises(ConfigError):
            load_metric('/nonexistent/metric.json')


if __name__ == '__main__':
    unittest.main()
