import math
from fractions import Fraction
from unittest import TestCase

import numpy as np
from hypothesis import given, settings, strategies as st
from parameterized import parameterized

from polytope_em.bernoulli.bernoulli_1d import (BernoulliTable, DEFAULT_TABLE, bernoulli_fourier_partial,
                                                bernoulli_poly, periodized_eval)


class TestBernoulliPolynomials(TestCase):

    def test_low_degrees(self):
        self.assertEqual(bernoulli_poly(0).coeffs, (Fraction(1),))
        self.assertEqual(bernoulli_poly(1).coeffs, (Fraction(-1, 2), Fraction(1)))
        self.assertEqual(bernoulli_poly(2).coeffs, (Fraction(1, 12), Fraction(-1, 2), Fraction(1, 2)))

    def test_exact_value(self):
        self.assertEqual(bernoulli_poly(2).value(Fraction(1, 2)), Fraction(-1, 24))
        self.assertEqual(bernoulli_poly(4).value(0), Fraction(-1, 720))

    def test_derivative_and_mean(self):
        for n in range(1, 12):
            self.assertEqual(bernoulli_poly(n).derivative(), bernoulli_poly(n - 1).coeffs)
            self.assertEqual(bernoulli_poly(n).mean(), 0)

    @parameterized.expand([(n,) for n in range(3, 16, 2)])
    def test_odd_degrees_vanish_at_endpoints(self, n):
        self.assertEqual(bernoulli_poly(n).value(0), 0)
        self.assertEqual(bernoulli_poly(n).value(1), 0)
        self.assertEqual(bernoulli_poly(n).value(Fraction(1, 2)), 0)

    def test_table_matches_direct_build(self):
        table = BernoulliTable(max_degree=10)
        for n in range(0, 14):
            self.assertEqual(table.poly(n), bernoulli_poly(n))

    def test_negative_degree(self):
        with self.assertRaises(ValueError):
            bernoulli_poly(-1)
        with self.assertRaises(ValueError):
            periodized_eval(-2, 0.5)


class TestPeriodizedBernoulli(TestCase):

    @parameterized.expand([
        (2, 0, 1 / 12),
        (2, 1, 1 / 12),
        (1, 0.25, -0.25),
        (1, 0, 0.0),
        (1, -3, 0.0),
        (1, Fraction(7, 2), 0.0),
        (3, 0.5, 0.0),
        (0, 0.7, 1.0),
    ])
    def test_values(self, n, x, expected):
        self.assertAlmostEqual(periodized_eval(n, x), expected, places=15)

    def test_fraction_and_float_agree(self):
        for n in range(0, 8):
            self.assertAlmostEqual(periodized_eval(n, Fraction(13, 10)), periodized_eval(n, 0.3), places=14)

    def test_array_matches_scalar(self):
        x = np.array([-1.0, -0.75, 0.0, 0.1, 0.5, 1.0, 2.25])
        for n in range(0, 6):
            expected = [periodized_eval(n, float(v)) for v in x]
            np.testing.assert_allclose(DEFAULT_TABLE.periodized_eval_array(n, x), expected, atol=1e-15)

    def test_sup_norm_bounds(self):
        # (2 pi)^-n <= sup |B_n| <= (pi^2 / 3) (2 pi)^-n
        for n in range(0, 13):
            sup = DEFAULT_TABLE.sup_norm(n)
            self.assertGreaterEqual(sup, (2 * math.pi) ** -n)
            self.assertLessEqual(sup, (math.pi ** 2 / 3) * (2 * math.pi) ** -n * (1 + 1e-12))

    @parameterized.expand([(1, 0.3), (2, 0.3), (3, 0.8), (4, 0.05)])
    def test_fourier_partial_sum(self, n, x):
        self.assertAlmostEqual(bernoulli_fourier_partial(n, x, 4000), periodized_eval(n, x), delta=1e-4)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=2, max_value=10), st.floats(min_value=-5, max_value=5))
    def test_periodic_and_reflection(self, n, x):
        self.assertAlmostEqual(periodized_eval(n, x + 1), periodized_eval(n, x), places=9)
        self.assertAlmostEqual(periodized_eval(n, -x), (-1) ** n * periodized_eval(n, x), places=9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=2, max_value=12), st.floats(min_value=0.05, max_value=0.95))
    def test_derivative_chain_by_central_differences(self, n, x):
        h = 1e-5
        difference = (periodized_eval(n, x + h) - periodized_eval(n, x - h)) / (2 * h)
        self.assertAlmostEqual(difference, periodized_eval(n - 1, x), delta=1e-7)
