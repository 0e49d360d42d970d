import math
import os
from fractions import Fraction
from unittest import TestCase

import numpy as np
from parameterized import parameterized

from data import DATA_DIR
from polytope_em.expansion.euler_maclaurin import gamma_coefficients_complex
from polytope_em.fields.scalar_field import ScalarField
from polytope_em.geometry.lattice_geometry import load_complex, weighted_sum
from polytope_em.quadrature.extrapolation import (CSV_COLUMNS, convergence_table, extrapolated_integral,
                                                  fit_even_powers, local_orders, vandermonde_coeffs)


def fixture(name: str):
    return load_complex(os.path.join(DATA_DIR, name))


class TestVandermondeCoefficients(TestCase):

    @parameterized.expand([
        (0, (Fraction(1),)),
        (1, (Fraction(1),)),
        (2, (Fraction(-1, 3), Fraction(4, 3))),
        (3, (Fraction(-1, 3), Fraction(4, 3))),
    ])
    def test_small_orders(self, w, expected):
        self.assertEqual(vandermonde_coeffs(w).coefficients, expected)

    @parameterized.expand([(4,), (5,), (8,)])
    def test_moments_are_exact(self, w):
        rule = vandermonde_coeffs(w)
        self.assertEqual(rule.levels, w // 2 + 1)
        self.assertEqual(rule.moments(), [Fraction(1)] + [Fraction(0)] * (rule.levels - 1))

    def test_negative_order(self):
        with self.assertRaises(ValueError):
            vandermonde_coeffs(-1)


class TestExtrapolatedIntegral(TestCase):

    @parameterized.expand([(2,), (4,), (8,)])
    def test_square_polynomial_on_interval(self, N):
        # S_N = 1/3 + 1/(6 N^2) exactly
        value = extrapolated_integral(fixture('unit_interval.json'), ScalarField.parse('x1^2', 1), N, 2)
        self.assertAlmostEqual(value, 1 / 3, delta=1e-12)

    def test_constant_on_square(self):
        value = extrapolated_integral(fixture('unit_square.json'), ScalarField.constant(2), 4, 4)
        self.assertAlmostEqual(value, 1.0, places=13)

    def test_threads_do_not_change_the_result(self):
        triangle = fixture('standard_triangle.json')
        f = ScalarField.parse('exp(x1 + x2)', 2)
        self.assertEqual(extrapolated_integral(triangle, f, 4, 4, threads=1),
                         extrapolated_integral(triangle, f, 4, 4, threads=3))

    def test_raw_sums_converge_at_second_order(self):
        triangle = fixture('standard_triangle.json')
        f = ScalarField.parse('exp(x1 + x2)', 2)
        Ns = (16, 32, 64)
        errors = [abs(weighted_sum(triangle, f, n) - 1.0) for n in Ns]
        for order in local_orders(Ns, errors)[:-1]:
            self.assertAlmostEqual(order, 2.0, delta=0.05)


class TestConvergenceTable(TestCase):

    @parameterized.expand([
        ('unit_square.json', (math.e - 1) ** 2),
        ('standard_triangle.json', 1.0),
    ])
    def test_extrapolated_order(self, name, reference):
        rows = convergence_table(fixture(name), ScalarField.parse('exp(x1 + x2)', 2), (8, 16, 32, 64), 3,
                                 reference=reference)
        self.assertEqual([row.N for row in rows], [8, 16, 32, 64])
        for row in rows[:-1]:
            self.assertGreaterEqual(row.local_order, 3.7)
        self.assertTrue(math.isnan(rows[-1].local_order))
        self.assertEqual(len(rows[0].as_tuple()), len(CSV_COLUMNS))

    def test_default_reference(self):
        rows = convergence_table(fixture('unit_interval.json'), ScalarField.parse('exp(x1)', 1), (4, 8), 2)
        self.assertLess(rows[-1].abs_error, 1e-6)
        self.assertLess(rows[-1].abs_error, rows[0].abs_error)


class TestHelpers(TestCase):

    def test_local_orders(self):
        orders = local_orders((1, 2, 4, 8), (1.0, 0.25, 0.0, 0.01))
        self.assertAlmostEqual(orders[0], 2.0, places=14)
        self.assertTrue(all(math.isnan(v) for v in orders[1:]))

    def test_fit_even_powers(self):
        Ns = np.array([4, 8, 16, 32, 64, 128])
        values = 2.0 + 0.5 / Ns ** 2 + 0.25 / Ns ** 4
        np.testing.assert_allclose(fit_even_powers(Ns, values, 2.0), [0.0, 0.5, 0.0, 0.25], atol=1e-8)


class TestWeightedSumExpansion(TestCase):
    """
    S_N(exp(x1 + x2)) on lattice polygons: only even powers of 1/N appear, and the
    N^{-2} coefficient is the first gamma coefficient.
    """

    Ns = (8, 16, 32, 64, 128)

    def fitted(self, name, reference):
        P = fixture(name)
        f = ScalarField.parse('exp(x1 + x2)', 2)
        values = [weighted_sum(P, f, N) for N in self.Ns]
        return P, f, fit_even_powers(self.Ns, values, reference)

    @parameterized.expand([
        ('unit_square.json', (math.e - 1) ** 2),
        ('standard_triangle.json', 1.0),
    ])
    def test_odd_powers_vanish(self, name, reference):
        _, _, coefficients = self.fitted(name, reference)
        self.assertLess(abs(coefficients[0]), 1e-3 * abs(coefficients[1]))
        self.assertLess(abs(coefficients[2]), 1e-3 * abs(coefficients[1]))

    @parameterized.expand([
        ('unit_square.json', (math.e - 1) ** 2),
        ('standard_triangle.json', 1.0),
    ])
    def test_second_order_coefficient_is_first_gamma(self, name, reference):
        P, f, coefficients = self.fitted(name, reference)
        gamma = gamma_coefficients_complex(P, f, 2)[0]
        self.assertAlmostEqual(coefficients[1], gamma, delta=1e-5 * abs(gamma))
