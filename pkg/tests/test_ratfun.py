"""
Тесты точной арифметики: многочлены, рациональные функции, расширение w
"""

import unittest
from fractions import Fraction
import sys
import os

# Добавляем путь к модулям
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.errors import DivisionByZero, PerfectSquareRadicand
from src.ratfun import (Certificate, ExtScalar, MultiPoly, RadicandContext, RatFun, base_var, ext_diff,
                        fiber_var, is_rational, poly_diff, polynomial_square_root, ratfun_arith)


class TestMultiPoly(unittest.TestCase):
    """Тесты для MultiPoly"""

    def setUp(self):
        """Переменные x1, x2, y1, y2 при n = 2"""
        self.n = 2
        self.x1 = MultiPoly.variable(self.n, base_var(0))
        self.x2 = MultiPoly.variable(self.n, base_var(1))
        self.y1 = MultiPoly.variable(self.n, fiber_var(self.n, 0))
        self.y2 = MultiPoly.variable(self.n, fiber_var(self.n, 1))

    def test_fiber_derivative(self):
        """d/dy1 (y1 y2 + 3 x1^2) = y2"""
        p = self.y1 * self.y2 + 3 * self.x1 ** 2
        self.assertEqual(poly_diff(p, fiber_var(self.n, 0)), self.y2)

    def test_derivative_of_constant(self):
        self.assertTrue(poly_diff(MultiPoly.constant(self.n, 5), fiber_var(self.n, 0)).is_zero)

    def test_base_derivative(self):
        """d/dx1 (x1^2 y1) = 2 x1 y1"""
        p = self.x1 ** 2 * self.y1
        self.assertEqual(poly_diff(p, base_var(0)), 2 * self.x1 * self.y1)

    def test_leibniz_rule(self):
        p = self.x1 * self.y1 ** 2 + self.x2 - 7
        q = self.y2 ** 3 + Fraction(1, 3) * self.x1 * self.y2
        for var in range(2 * self.n):
            left = poly_diff(p * q, var)
            right = poly_diff(p, var) * q + p * poly_diff(q, var)
            self.assertEqual(left, right)

    def test_ring_axioms(self):
        p = self.x1 + self.y1 ** 2
        q = self.x2 * self.y2 - 1
        r = Fraction(2, 5) * self.y1 * self.y2
        self.assertEqual((p * q) * r, p * (q * r))
        self.assertEqual(p * (q + r), p * q + p * r)
        self.assertEqual((p + q) + r, p + (q + r))

    def test_no_zero_terms(self):
        p = self.x1 + self.y1 - self.x1
        self.assertEqual(list(p.terms.values()), [Fraction(1)])
        for exponents in p.terms:
            self.assertEqual(len(exponents), 2 * self.n)

    def test_evaluate(self):
        p = self.x1 * self.y2 + Fraction(1, 2)
        self.assertEqual(p.evaluate([Fraction(2), 0, 0, Fraction(3)]), Fraction(13, 2))

    def test_wrong_exponent_length(self):
        with self.assertRaises(ValueError):
            MultiPoly.from_terms(self.n, {(1, 0, 0): 1})

    def test_square_root(self):
        square = (self.y1 + 2 * self.x1) ** 2 * 9
        root = polynomial_square_root(square)
        self.assertIsNotNone(root)
        self.assertEqual(root * root, square)
        self.assertIsNone(polynomial_square_root(self.y1 ** 2 + self.y2 ** 2))
        self.assertIsNone(polynomial_square_root(2 * self.y1 ** 2))


class TestRatFun(unittest.TestCase):
    """Тесты для RatFun"""

    def setUp(self):
        self.n = 2
        self.x1 = MultiPoly.variable(self.n, base_var(0))
        self.y1 = MultiPoly.variable(self.n, fiber_var(self.n, 0))
        self.y2 = MultiPoly.variable(self.n, fiber_var(self.n, 1))

    def test_inverse_pair(self):
        product = RatFun(self.y1, self.y2) * RatFun(self.y2, self.y1)
        self.assertEqual(product, RatFun.constant(self.n, 1))

    def test_like_terms(self):
        total = RatFun(MultiPoly.constant(self.n, 1), self.y1) + RatFun(MultiPoly.constant(self.n, 1), self.y1)
        self.assertEqual(total, RatFun(MultiPoly.constant(self.n, 2), self.y1))

    def test_division(self):
        left = RatFun(self.y1 + self.y2, self.y1)
        right = RatFun(self.y1 + self.y2, self.y1 * self.y2)
        self.assertEqual(ratfun_arith(left, right, 'div'), RatFun(self.y2))

    def test_canonical_form(self):
        value = RatFun(self.x1 * self.y1, self.x1 * self.x1)
        self.assertEqual(value.numerator, self.y1)
        self.assertEqual(value.denominator, self.x1)
        again = RatFun(value.numerator, value.denominator)
        self.assertEqual(again.numerator, value.numerator)
        self.assertEqual(again.denominator, value.denominator)

    def test_normalized_denominator(self):
        value = RatFun(self.y1, -2 * self.y2)
        self.assertEqual(value.denominator.terms[(0, 0, 0, 1)], Fraction(1))
        self.assertEqual(value, RatFun(-Fraction(1, 2) * self.y1, self.y2))

    def test_zero_denominator(self):
        with self.assertRaises(DivisionByZero):
            RatFun(self.y1, MultiPoly.constant(self.n, 0))
        with self.assertRaises(DivisionByZero):
            RatFun(self.y1) / RatFun.zero(self.n)

    def test_quotient_rule(self):
        f = RatFun(self.y1 ** 2, self.y2)
        var = fiber_var(self.n, 1)
        self.assertEqual(f.diff(var), RatFun(-1 * self.y1 ** 2, self.y2 ** 2))


class TestExtScalar(unittest.TestCase):
    """Тесты для элементов a + b w"""

    def setUp(self):
        self.n = 2
        self.y1 = MultiPoly.variable(self.n, fiber_var(self.n, 0))
        self.y2 = MultiPoly.variable(self.n, fiber_var(self.n, 1))
        self.radicand = self.y1 ** 2 + self.y2 ** 2
        self.context = RadicandContext(self.radicand)
        self.w = ExtScalar.root(self.context)

    def test_derivative_of_root(self):
        """d/dy1 w = y1/(y1^2 + y2^2) w"""
        derivative = ext_diff(self.w, fiber_var(self.n, 0))
        self.assertTrue(derivative.rat_part.is_zero)
        self.assertEqual(derivative.irr_part, RatFun(self.y1, self.radicand))

    def test_rational_element_derivative(self):
        a = ExtScalar.rational(self.y1 ** 3, self.context)
        derivative = ext_diff(a, fiber_var(self.n, 0))
        self.assertEqual(derivative.rat_part, RatFun(3 * self.y1 ** 2))
        self.assertTrue(derivative.irr_part.is_zero)

    def test_square_of_root_two_ways(self):
        var = fiber_var(self.n, 0)
        direct = ExtScalar.rational(self.radicand, self.context).diff(var)
        product = ext_diff(self.w * self.w, var)
        self.assertEqual(direct, product)

    def test_square_derivative_identity(self):
        e = ExtScalar(RatFun(self.y1, self.y2), RatFun(self.y2 + 1), self.context)
        var = fiber_var(self.n, 1)
        self.assertEqual(ext_diff(e * e, var), e * ext_diff(e, var) * 2)

    def test_multiplication_closed(self):
        a = ExtScalar(RatFun(self.y1), RatFun(MultiPoly.constant(self.n, 2)), self.context)
        b = ExtScalar(RatFun(self.y2), RatFun(MultiPoly.constant(self.n, 3)), self.context)
        product = a * b
        self.assertEqual(product.rat_part, RatFun(self.y1 * self.y2 + 6 * self.radicand))
        self.assertEqual(product.irr_part, RatFun(3 * self.y1 + 2 * self.y2))

    def test_inverse(self):
        e = ExtScalar(RatFun(self.y1 + 1), RatFun(MultiPoly.constant(self.n, 1)), self.context)
        self.assertEqual(e * e.inverse(), ExtScalar.rational(1, self.context))

    def test_certificates(self):
        self.assertEqual(is_rational(self.w), Certificate.IRRATIONAL)
        self.assertEqual(is_rational(self.w * self.w), Certificate.RATIONAL)
        factor = RatFun(self.y1 + 3, self.y2)
        self.assertEqual(is_rational(self.w * factor), Certificate.IRRATIONAL)
        self.assertEqual(is_rational(ExtScalar.rational(self.y1, self.context) * factor), Certificate.RATIONAL)

    def test_perfect_square_rejected(self):
        with self.assertRaises(PerfectSquareRadicand):
            RadicandContext((self.y1 + self.y2) ** 2)

    def test_evaluate(self):
        values = [0, 0, Fraction(3), Fraction(4)]
        self.assertAlmostEqual(self.w.evaluate(values), 5.0)
        a, b, radicand = (self.w * 2 + 1).exact_parts(values)
        self.assertEqual((a, b, radicand), (Fraction(1), Fraction(2), Fraction(25)))


if __name__ == '__main__':
    unittest.main()
