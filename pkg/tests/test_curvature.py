"""
Тесты спрея, башни кривизн и остатков уравнений поля
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
from src.builtin_metrics import (ClosedForm, RiemannianOracle, euclidean_fixture, example1_flat_anisotropic,
                                 example2_vsi, minkowski_fixture, sphere_fixture, sphere_product_fixture)
from src.curvature import (curvature_tower, field_residuals, flag_curvature, homogeneity_checks,
                           reduced_weak_einstein_residual, ricci_tensor_trace_residual, s_curvature, spray,
                           spray_factors, spray_factors_from_phi)
from src.errors import ConfigError, DegenerateFlag, DimensionMismatch
from src.geometry import phi_family
from src.metric_io import Family, MetricSpec
from src.ratfun import Certificate


class TestSprayFactors(unittest.TestCase):
    """Тесты Q, Θ, Ψ"""

    def test_kropina_q(self):
        family = Family('kropina', Fraction(1))
        for s in (0.5, 2.0, 3.0):
            self.assertAlmostEqual(spray_factors(s, 1.0, family)['Q'], -1 / (2 * s))

    def test_closed_form_matches_phi(self):
        family = Family('generalized-m-kropina', Fraction(2), Fraction(1), Fraction(1))
        s, b2 = 0.7, 1.3
        closed = spray_factors(s, b2, family)
        by_definition = spray_factors_from_phi(s, b2, phi_family(s, family))
        for name in ('Q', 'Theta', 'Psi'):
            self.assertAlmostEqual(closed[name], by_definition[name], places=12, msg=name)

    def test_split_spray_matches_closed_form(self):
        spec = euclidean_fixture(m=2, dimension=3, c=1, r=1).spec
        point = EvalPoint((0.4, -0.1, 0.2), (1.0, 0.6, -0.3))
        data = spray(spec, point, NumericBackend())
        y = point.y_array()
        b = np.array([1.0, 0.4, 0.0])
        s = float(b @ y) / math.sqrt(float(y @ y))
        expected = spray_factors(s, float(b @ b), spec.family)
        self.assertAlmostEqual(data.Q, expected['Q'], places=10)
        self.assertAlmostEqual(data.Theta, expected['Theta'], places=10)
        self.assertAlmostEqual(data.Psi, expected['Psi'], places=10)
        self.assertTrue(data.routes_agree)


class TestCurvatureTower(unittest.TestCase):
    """Тесты башни кривизн"""

    def setUp(self):
        self.numeric = NumericBackend()

    def test_flat_background_is_flat(self):
        spec = minkowski_fixture(m=1).spec
        tower = curvature_tower(spec, EvalPoint((0.0, 0.0, 0.0, 0.0), (0.2, 1.0, 0.3, -0.4)), self.numeric)
        evaluate = tower.algebra.evaluate
        n = tower.n
        for i in range(n):
            self.assertAlmostEqual(evaluate(tower.G[i]), 0.0, places=14)
            for k in range(n):
                self.assertAlmostEqual(evaluate(tower.R_riem[i][k]), 0.0, places=14)
        self.assertAlmostEqual(evaluate(tower.Ric), 0.0, places=14)

    def test_sphere_flag_curvature(self):
        example = sphere_fixture()
        point = EvalPoint((0.2, -0.3, 0.25), (1.0, 0.5, -0.2))
        for u in ((0.3, 1.0, 0.7), (0.0, 0.0, 1.0), (-1.0, 2.0, 0.5)):
            K = flag_curvature(example.spec, point, u, self.numeric)
            self.assertAlmostEqual(float(K.values), 1.0, places=8)

    def test_sphere_ricci_and_s_curvature(self):
        spec = sphere_fixture().spec
        point = EvalPoint((0.1, 0.4, -0.2), (0.8, -0.5, 1.0))
        tower = curvature_tower(spec, point, self.numeric)
        F2 = tower.algebra.evaluate(tower.structure.F2)
        self.assertAlmostEqual(tower.algebra.evaluate(tower.Ric), 2 * F2, places=8)
        S = s_curvature(spec, point, None, self.numeric)
        self.assertAlmostEqual(float(S.values), 0.0, places=10)

    def test_flag_invariance(self):
        spec = euclidean_fixture(m=2, dimension=3).spec
        point = EvalPoint((0.3, 0.1, -0.2), (1.0, 0.2, 0.5))
        u = np.array([0.1, 1.0, -0.4])
        y = point.y_array()
        first = float(flag_curvature(spec, point, u, self.numeric).values)
        shifted = float(flag_curvature(spec, point, u + 3 * y, self.numeric).values)
        self.assertAlmostEqual(first, shifted, delta=1e-8 * max(1.0, abs(first)))

    def test_degenerate_flag(self):
        spec = euclidean_fixture(m=2, dimension=3).spec
        point = EvalPoint((0.3, 0.1, -0.2), (1.0, 0.2, 0.5))
        with self.assertRaises(DegenerateFlag):
            flag_curvature(spec, point, 2 * point.y_array(), self.numeric)

    def test_tower_checks(self):
        spec = euclidean_fixture(m=3, dimension=3, c=1, r=1).spec
        tower = curvature_tower(spec, EvalPoint((0.5, 0.2, 0.1), (1.0, -0.3, 0.4)), self.numeric)
        self.assertTrue(all(tower.checks().values()))

    def test_example1_exact_ricci_flat(self):
        example = example1_flat_anisotropic(m=2)
        point = EvalPoint(example.base_point, (Fraction(1, 2), Fraction(1), Fraction(0), Fraction(1)))
        tower = curvature_tower(example.spec, point, ExactBackend())
        self.assertTrue(tower.algebra.value(tower.Ric).is_zero)

    def test_homogeneity_numeric(self):
        spec = euclidean_fixture(m=2, dimension=3, c=1, r=1).spec
        point = EvalPoint((0.2, 0.3, -0.1), (0.9, 0.4, 0.2))
        results = homogeneity_checks(spec, point, self.numeric, rtol=1e-9)
        self.assertTrue(all(results.values()), results)

    def test_homogeneity_exact(self):
        spec = euclidean_fixture(m=1, dimension=2).spec
        point = EvalPoint((Fraction(1, 3), Fraction(1, 2)), (Fraction(1), Fraction(2)))
        results = homogeneity_checks(spec, point, ExactBackend(), factors=(2,))
        self.assertTrue(all(results.values()), results)

    def test_sphere_with_vanishing_beta(self):
        spec = sphere_fixture().spec
        point = EvalPoint((0.2, -0.3, 0.25), (0.0, 1.0, 0.5))
        for u in ((1.0, 0.0, 0.0), (0.3, 1.0, 0.7)):
            K = flag_curvature(spec, point, u, self.numeric)
            self.assertAlmostEqual(float(K.values), 1.0, places=8)
        tower = curvature_tower(spec, point, self.numeric)
        F2 = tower.algebra.evaluate(tower.structure.F2)
        self.assertAlmostEqual(tower.algebra.evaluate(tower.Ric), 2 * F2, places=8)

    def test_ricci_continuous_where_alpha_entry_vanishes(self):
        spec = MetricSpec.from_dict({
            'dimension': 2,
            'alpha': [['1', 'x1'], ['x1', '2']],
            'beta': ['1', '0'],
            'family': {'tag': 'kropina'},
        }, name='tilted-kropina-plane')
        y = (1.0, 1 / 3)

        def ricci(x1):
            tower = curvature_tower(spec, EvalPoint((x1, 0.0), y), self.numeric)
            return tower.algebra.evaluate(tower.Ric)

        at_zero = ricci(0.0)
        for shift in (1e-7, -1e-7):
            self.assertAlmostEqual(ricci(shift), at_zero, delta=1e-5 * max(1.0, abs(at_zero)))
        exact = curvature_tower(spec, EvalPoint((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1, 3))),
                                ExactBackend())
        self.assertAlmostEqual(exact.algebra.evaluate(exact.Ric), at_zero, delta=1e-9 * max(1.0, abs(at_zero)))


class TestVsiExample(unittest.TestCase):
    """Тесты VSI-примера: Ric = m/(m-1) β y^3"""

    def setUp(self):
        self.x = (1 / 3, -0.25, 0.5, 2 / 3)
        self.y = (1.0, 0.2, 0.5, -1 / 3)

    def test_numeric_ricci(self):
        for m, expected in ((2, 1.0), (3, 0.75)):
            spec = example2_vsi(m=m).spec
            tower = curvature_tower(spec, EvalPoint(self.x, self.y), NumericBackend())
            ric = tower.algebra.evaluate(tower.Ric)
            self.assertAlmostEqual(ric, expected, delta=1e-8 * max(1.0, tower.ricci_scale))

    def test_ricci_vanishes_with_y3(self):
        spec = example2_vsi(m=2).spec
        tower = curvature_tower(spec, EvalPoint(self.x, (1.0, 0.2, 0.0, -1 / 3)), NumericBackend())
        self.assertAlmostEqual(tower.algebra.evaluate(tower.Ric), 0.0, delta=1e-8 * max(1.0, tower.ricci_scale))

    def test_exact_ricci(self):
        example = example2_vsi(m=2)
        y = (Fraction(1), Fraction(1, 5), Fraction(1, 2), Fraction(-1, 3))
        tower = curvature_tower(example.spec, EvalPoint(example.base_point, y), ExactBackend())
        self.assertTrue(tower.algebra.point_is_zero(tower.Ric - Fraction(1)))
        self.assertEqual(tower.algebra.certificate(tower.Ric), Certificate.RATIONAL)


class TestClosedForm(unittest.TestCase):
    """Тесты замкнутых выражений для утверждений о Ric"""

    def test_exact_at_rational_point(self):
        form = ClosedForm('3/2*y1*y3 + x2^2', 4)
        point = EvalPoint((Fraction(0), Fraction(1, 3), Fraction(0), Fraction(0)),
                          (Fraction(1), Fraction(0), Fraction(1, 2), Fraction(0)))
        self.assertEqual(form(point), Fraction(3, 4) + Fraction(1, 9))
        self.assertIsInstance(form(point), Fraction)

    def test_float_point(self):
        form = ClosedForm('2*y1*y3', 4)
        self.assertAlmostEqual(form(EvalPoint((0.1, 0.2, 0.3, 0.4), (1.5, 0.0, -0.5, 0.0))), -1.5)

    def test_unknown_names(self):
        with self.assertRaises(ConfigError):
            ClosedForm('y5 + t', 4)


class TestFieldResiduals(unittest.TestCase):
    """Тесты остатков уравнений поля"""

    def setUp(self):
        self.numeric = NumericBackend()

    def test_riemannian_residual_matches_oracle(self):
        spec = sphere_product_fixture().spec
        oracle = RiemannianOracle(spec)
        x, y = (1 / 3, -0.25, 0.0, 0.0), (0.5, 1.0, 0.7, -0.3)
        residuals = field_residuals(spec, EvalPoint(x, y), 0, self.numeric)
        expected = oracle.vacuum_residual(x, y)
        self.assertAlmostEqual(residuals.pw, expected, delta=1e-8 * max(1.0, abs(expected)))
        self.assertFalse(residuals.pw_vanishes)

    def test_flat_residual_vanishes(self):
        spec = minkowski_fixture(m=2).spec
        residuals = field_residuals(spec, EvalPoint((0.0,) * 4, (0.2, 1.0, 0.3, -0.4)), 0, self.numeric)
        self.assertTrue(residuals.pw_vanishes)
        self.assertTrue(residuals.cs_vanishes)
        self.assertAlmostEqual(residuals.ricci_trace, 0.0, places=10)
        self.assertAlmostEqual(residuals.ricci_flat, 0.0, places=10)

    def test_cs_residual_shift(self):
        spec = sphere_product_fixture().spec
        point = EvalPoint((0.1, 0.2, 0.0, 0.0), (1.0, 0.5, 0.3, 0.2))
        plain = field_residuals(spec, point, 0, self.numeric)
        shifted = field_residuals(spec, point, 1.5, self.numeric)
        F = math.sqrt(float(point.y_array() @ spec.alpha_at(point.x_array()) @ point.y_array()))
        self.assertAlmostEqual(shifted.cs, plain.pw - F * 1.5 * 2 / 3, places=9)
        self.assertEqual(shifted.r_avg, 1.5)

    def test_ricci_trace_and_flat_parts(self):
        spec = sphere_product_fixture().spec
        x, y = (1 / 3, -0.25, 0.0, 0.0), (0.5, 1.0, 0.7, -0.3)
        residuals = field_residuals(spec, EvalPoint(x, y), 0, self.numeric)
        conformal = 4 / (1 + x[0] ** 2 + x[1] ** 2) ** 2
        sphere_part = conformal * (y[0] ** 2 + y[1] ** 2)
        alpha2 = sphere_part + y[2] ** 2 + y[3] ** 2
        # на S^2 x R^2: g^ij R_ij = 2, Ric(y, y) = конформный множитель на сферической части
        expected = 2 * alpha2 - 3 * sphere_part
        self.assertAlmostEqual(residuals.ricci_trace, expected, delta=1e-8 * max(1.0, abs(expected)))
        self.assertAlmostEqual(residuals.ricci_flat, 0.0, delta=1e-9)
        self.assertAlmostEqual(residuals.pw, 2 / 3 * residuals.ricci_trace, delta=1e-8 * max(1.0, abs(expected)))

    def test_ricci_trace_with_average_curvature(self):
        spec = sphere_product_fixture().spec
        point = EvalPoint((0.1, 0.2, 0.0, 0.0), (1.0, 0.5, 0.3, 0.2))
        plain = float(ricci_tensor_trace_residual(spec, point, self.numeric).values)
        shifted = float(ricci_tensor_trace_residual(spec, point, self.numeric, r_avg=1.5).values)
        F = math.sqrt(float(point.y_array() @ spec.alpha_at(point.x_array()) @ point.y_array()))
        self.assertAlmostEqual(shifted, plain - F * 1.5, places=9)

    def test_requires_dimension_four(self):
        spec = sphere_fixture().spec
        with self.assertRaises(DimensionMismatch):
            field_residuals(spec, EvalPoint((0.1, 0.2, 0.3), (1.0, 0.0, 0.0)), 0, self.numeric)

    def test_reduced_weak_einstein_traces(self):
        spec = euclidean_fixture(m=2).spec
        point = EvalPoint((0.2, 0.1, 0.0, -0.3), (1.0, 0.3, -0.2, 0.5))
        reduced = reduced_weak_einstein_residual(spec, point, 5, [0, 0, 0, 0], self.numeric)
        self.assertAlmostEqual(reduced.trace_h, 3.0, places=9)
        self.assertAlmostEqual(reduced.trace_g, 4.0, places=9)
        self.assertTrue(reduced.consistent)
        self.assertAlmostEqual(reduced.pw, reduced.model_pw, delta=1e-8 * max(1.0, abs(reduced.pw)))


if __name__ == '__main__':
    unittest.main()
