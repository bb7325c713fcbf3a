"""
Тесты фундаментальных тензоров (α,β)-метрик
"""

import unittest
from fractions import Fraction
import math
import numpy as np
import sys
import os

# Добавляем путь к модулям
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.autodiff import EvalPoint
from src.backends import ExactBackend, NumericBackend
from src.builtin_metrics import euclidean_fixture, minkowski_fixture
from src.errors import ConfigError, DegenerateMetric, DomainViolation
from src.geometry import (FinslerStructure, fundamental_tensors, phi_family, positive_definiteness_probe,
                          structure_checks)
from src.metric_io import Family, MetricSpec
from src.ratfun import Certificate
from src.sampling import sample_cone


def kropina_plane() -> MetricSpec:
    return MetricSpec.from_dict({
        'dimension': 2,
        'alpha': [['1', '0'], ['0', '1']],
        'beta': ['1', '0'],
        'family': {'tag': 'kropina'},
    }, name='kropina-plane')


def tilted_kropina_plane() -> MetricSpec:
    """α_01 = x1 обращается в ноль в начале координат, но не тождественно"""
    return MetricSpec.from_dict({
        'dimension': 2,
        'alpha': [['1', 'x1'], ['x1', '2']],
        'beta': ['1', '0'],
        'family': {'tag': 'kropina'},
    }, name='tilted-kropina-plane')


def generalized_plane(m, r=1) -> MetricSpec:
    return MetricSpec.from_dict({
        'dimension': 2,
        'alpha': [['1', '0'], ['0', '1']],
        'beta': ['1', '0'],
        'family': {'tag': 'generalized-m-kropina', 'm': m, 'c': 1, 'r': r},
    }, name='generalized-plane')


class TestPhiFamily(unittest.TestCase):
    """Тесты φ, φ', φ''"""

    def test_kropina_values(self):
        values = phi_family(2.0, Family('kropina', Fraction(1)))
        self.assertAlmostEqual(values.phi, 0.5)
        self.assertAlmostEqual(values.dphi, -0.25)
        self.assertAlmostEqual(values.ddphi, 0.25)

    def test_generalized_values(self):
        values = phi_family(1.0, Family('generalized-m-kropina', Fraction(2), Fraction(1), Fraction(1)))
        self.assertAlmostEqual(values.phi, 2 * math.sqrt(2))
        self.assertAlmostEqual(values.dphi, -math.sqrt(2))

    def test_pseudo_riemannian(self):
        values = phi_family(0.5, Family('pseudo-riemannian', Fraction(0), Fraction(1), Fraction(1)))
        self.assertAlmostEqual(values.phi, math.sqrt(1.25))
        at_zero = phi_family(0.0, Family('pseudo-riemannian', Fraction(0), Fraction(1), Fraction(1)))
        self.assertEqual(at_zero, (1.0, 0.0, 1.0))

    def test_negative_branch(self):
        plus = phi_family(1.5, Family('m-kropina', Fraction(3)))
        minus = phi_family(1.5, Family('m-kropina', Fraction(3), sign=-1))
        self.assertAlmostEqual(minus.phi, -plus.phi)
        self.assertAlmostEqual(minus.dphi / minus.phi, plus.dphi / plus.phi)

    def test_domain(self):
        with self.assertRaises(DomainViolation):
            phi_family(0.0, Family('kropina', Fraction(1)))
        with self.assertRaises(DegenerateMetric):
            phi_family(1.0, Family('generalized-m-kropina', Fraction(1), Fraction(1), Fraction(1)))

    def test_family_validation(self):
        with self.assertRaises(ConfigError) as context:
            Family('m-kropina', Fraction(2), c=Fraction(0))
        self.assertIn("c = 0 has to be excluded", str(context.exception))
        with self.assertRaises(ConfigError):
            Family('m-kropina', Fraction(0))
        with self.assertRaises(ConfigError):
            Family('generalized-m-kropina', Fraction(-1), Fraction(1), Fraction(1))


class TestFundamentalTensors(unittest.TestCase):
    """Тесты F, g, C, I, h, η на обоих бэкендах"""

    def setUp(self):
        self.numeric = NumericBackend()
        self.exact = ExactBackend()

    def test_kropina_value(self):
        spec = kropina_plane()
        numeric = fundamental_tensors(spec, EvalPoint((0.0, 0.0), (1.0, 1.0)), self.numeric)
        self.assertAlmostEqual(float(numeric.F.values), 2.0, places=12)
        exact = fundamental_tensors(spec, EvalPoint((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))),
                                    self.exact)
        self.assertEqual(exact.F.exact.exact_parts([0, 0, 1, 1])[0], Fraction(2))
        self.assertEqual(exact.F.certificate(), Certificate.RATIONAL)

    def test_rationality_of_F(self):
        point = EvalPoint((Fraction(0), Fraction(0)), (Fraction(1), Fraction(2)))
        odd = fundamental_tensors(generalized_plane(3), point, self.exact)
        self.assertEqual(odd.F.certificate(), Certificate.RATIONAL)
        even = fundamental_tensors(generalized_plane(2), point, self.exact)
        self.assertEqual(even.F.certificate(), Certificate.IRRATIONAL)
        self.assertEqual(even.F2.certificate(), Certificate.RATIONAL)
        self.assertEqual(even.eta.certificate(), Certificate.RATIONAL)
        self.assertEqual(even.g.certificate(), Certificate.RATIONAL)
        self.assertEqual(even.C.certificate(), Certificate.RATIONAL)
        self.assertEqual(even.I.certificate(), Certificate.RATIONAL)
        self.assertEqual(even.ell.certificate(), Certificate.IRRATIONAL)

    def test_cross_checks_numeric(self):
        spec = euclidean_fixture(m=2, dimension=3, c=1, r=1).spec
        for point in sample_cone(spec, seed=7, count=10, workers=2):
            tensors = fundamental_tensors(spec, point, self.numeric)
            self.assertTrue(all(tensors.checks.values()), tensors.checks)

    def test_cross_checks_exact(self):
        spec = generalized_plane(3)
        point = EvalPoint((Fraction(1, 2), Fraction(0)), (Fraction(2), Fraction(-1, 3)))
        checks = structure_checks(FinslerStructure(spec, self.exact.algebra(spec, point)))
        self.assertTrue(all(checks.values()), checks)

    def test_euler_identities(self):
        spec = euclidean_fixture(m=3, dimension=3).spec
        point = EvalPoint((0.2, 0.1, -0.3), (1.0, 0.4, -0.7))
        tensors = fundamental_tensors(spec, point, self.numeric)
        y = point.y_array()
        g = tensors.g.values
        F = float(tensors.F.values)
        self.assertAlmostEqual(float(y @ g @ y), F * F, places=9)
        np.testing.assert_allclose(tensors.h.values @ y, 0.0, atol=1e-9)
        np.testing.assert_allclose(np.einsum('ijk,k->ij', tensors.C.values, y), 0.0, atol=1e-9)
        np.testing.assert_allclose(tensors.C.values, np.transpose(tensors.C.values, (1, 0, 2)), atol=1e-12)

    def test_pseudo_riemannian_reduction(self):
        spec = euclidean_fixture(m=0, dimension=3).spec
        tensors = fundamental_tensors(spec, EvalPoint((0.1, 0.2, 0.3), (1.0, -1.0, 0.5)), self.numeric)
        np.testing.assert_allclose(tensors.C.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(tensors.I.values, 0.0, atol=1e-12)
        self.assertAlmostEqual(float(tensors.eta.values), 1.0)
        np.testing.assert_allclose(tensors.g.values, np.eye(3), atol=1e-12)

    def test_eta_log_derivative_closed_form(self):
        spec = euclidean_fixture(m=2, dimension=3, c=1, r=1).spec
        point = EvalPoint((0.5, 0.2, 0.1), (1.0, 0.3, -0.4))
        structure = FinslerStructure(spec, self.numeric.algebra(spec, point))
        y = point.y_array()
        b = np.array([1.0, 0.5, 0.0])
        alpha2 = float(y @ y)
        beta = float(b @ y)
        m, c, r = 2.0, 1.0, 1.0
        expected = -2 * m * c * (alpha2 * b - beta * y) / ((c * alpha2 + r * beta * beta) * beta)
        actual = [structure.algebra.evaluate(v) for v in structure.dlog_eta_y]
        np.testing.assert_allclose(actual, expected, rtol=1e-9)

    def test_sign_branch(self):
        spec = generalized_plane(2)
        point = EvalPoint((0.0, 0.0), (1.0, 0.5))
        plus = fundamental_tensors(spec, point, self.numeric)
        minus = fundamental_tensors(spec.with_family(sign=-1), point, self.numeric)
        self.assertAlmostEqual(float(minus.F.values), -float(plus.F.values))
        np.testing.assert_allclose(minus.g.values, plus.g.values, rtol=1e-12)

    def test_backends_agree(self):
        spec = generalized_plane(2)
        exact_point = EvalPoint((Fraction(1, 3), Fraction(0)), (Fraction(3, 2), Fraction(1, 4)))
        numeric_point = EvalPoint((1 / 3, 0.0), (1.5, 0.25))
        exact = fundamental_tensors(spec, exact_point, self.exact)
        numeric = fundamental_tensors(spec, numeric_point, self.numeric)
        for left, right in zip(exact.bundles(), numeric.bundles()):
            np.testing.assert_allclose(left.values, right.values, rtol=1e-9, atol=1e-12, err_msg=left.name)

    def test_domain_violations(self):
        spec = kropina_plane()
        with self.assertRaises(DomainViolation):
            fundamental_tensors(spec, EvalPoint((0.0, 0.0), (0.0, 1.0)), self.numeric)
        with self.assertRaises(DomainViolation):
            fundamental_tensors(spec, EvalPoint((0.0, 0.0), (-1.0, 1.0)), self.numeric)

    def test_alpha_inverse_keeps_derivatives_of_vanishing_entries(self):
        spec = tilted_kropina_plane()
        points = {
            'numeric': (self.numeric, EvalPoint((0.0, 0.0), (1.0, 1 / 3))),
            'exact': (self.exact, EvalPoint((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1, 3)))),
        }
        for name, (backend, point) in points.items():
            structure = FinslerStructure(spec, backend.algebra(spec, point))
            algebra = structure.algebra
            inverse = structure.fields.alpha_inv
            # ᾱ^-1 = [[2, -x1], [-x1, 1]] / (2 - x1^2)
            self.assertAlmostEqual(algebra.evaluate(inverse[0][1]), 0.0, msg=name)
            self.assertAlmostEqual(algebra.evaluate(inverse[0][1].dx(0)), -0.5, places=12, msg=name)
            self.assertAlmostEqual(algebra.evaluate(inverse[1][1]), 0.5, places=12, msg=name)
            self.assertFalse(algebra.identically_zero(structure.fields.alpha[0][1]), name)
            self.assertTrue(algebra.identically_zero(structure.fields.alpha[0][1] * 0), name)

    def test_direct_determinant_with_vanishing_entries(self):
        spec = euclidean_fixture(m=1).spec
        point = EvalPoint((Fraction(1, 2), Fraction(0), Fraction(0), Fraction(0)),
                          (Fraction(1), Fraction(1, 3), Fraction(0), Fraction(2)))
        checks = structure_checks(FinslerStructure(spec, self.exact.algebra(spec, point)))
        self.assertTrue(checks['det_lemma_equals_direct'])
        self.assertTrue(checks['det_formula_equals_direct'])
        self.assertTrue(all(checks.values()), checks)

    def test_pseudo_riemannian_allows_vanishing_beta(self):
        numeric = fundamental_tensors(euclidean_fixture(m=0, dimension=3).spec,
                                      EvalPoint((0.0, 0.2, 0.3), (0.0, 1.0, 0.5)), self.numeric)
        self.assertAlmostEqual(float(numeric.F.values), math.sqrt(1.25), places=12)
        np.testing.assert_allclose(numeric.g.values, np.eye(3), atol=1e-12)
        self.assertTrue(all(numeric.checks.values()), numeric.checks)
        exact = fundamental_tensors(euclidean_fixture(m=0, dimension=3).spec,
                                    EvalPoint((Fraction(0),) * 3, (Fraction(0), Fraction(1), Fraction(1, 2))),
                                    self.exact)
        np.testing.assert_allclose(exact.g.values, np.eye(3), atol=1e-15)
        self.assertTrue(all(exact.checks.values()), exact.checks)
        with self.assertRaises(DomainViolation):
            fundamental_tensors(euclidean_fixture(m=2, dimension=3).spec,
                                EvalPoint((0.0, 0.2, 0.3), (0.0, 1.0, 0.5)), self.numeric)


class TestPositiveDefiniteness(unittest.TestCase):
    """Тесты пробы положительной определённости"""

    def test_euclidean_riemannian(self):
        spec = euclidean_fixture(m=0, dimension=3).spec
        report = positive_definiteness_probe(spec, sample_cone(spec, seed=3, count=20, workers=2))
        self.assertTrue(report.all_positive_definite)

    def test_kropina_consistent_signature(self):
        spec = kropina_plane()
        report = positive_definiteness_probe(spec, sample_cone(spec, seed=5, count=100, workers=2))
        self.assertEqual(len(report.signatures), 1)

    def test_lorentzian_background(self):
        spec = minkowski_fixture(m=2).spec
        samples = sample_cone(spec, seed=11, count=20, workers=2, reference_sign=None)
        report = positive_definiteness_probe(spec, samples)
        self.assertFalse(report.all_positive_definite)
        for sample in report.samples:
            if sample.error is None:
                self.assertIsNotNone(sample.printed_condition)
                self.assertIsNotNone(sample.standard_condition)


if __name__ == '__main__':
    unittest.main()
