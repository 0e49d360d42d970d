import math
from fractions import Fraction
from unittest import TestCase

import numpy as np
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from parameterized import parameterized

from polytope_em.exceptions import DerivativeOrderError, DimensionError, ExpressionError
from polytope_em.fields.expression_parser import parse_expression, variables
from polytope_em.fields.scalar_field import ScalarField

x1, x2, x3 = variables(3)


def expressions(depth: int):
    """ Random expressions in x1, x2 whose trees are at most depth + 1 deep """
    leaves = st.sampled_from([x1, x2, sympy.Rational(1, 2)])
    if depth == 0:
        return leaves
    sub = expressions(depth - 1)
    return st.one_of(
        leaves,
        st.builds(lambda a, b: a + b, sub, sub),
        st.builds(lambda a, b: a * b, sub, sub),
        st.builds(sympy.sin, sub),
        st.builds(sympy.cos, sub),
        st.builds(lambda a: sympy.exp(sympy.sin(a)), sub),
    )


class TestExpressionParser(TestCase):

    @parameterized.expand([
        ('-x1^2', -x1 ** 2),
        ('2*x1 + 3*x2 - 1', 2 * x1 + 3 * x2 - 1),
        ('x1 - x2 - x1', -x2),
        ('x1 / 2 / 2', x1 / 4),
        ('2^3^2', sympy.Integer(512)),
        ('(x1 + x2)^2', (x1 + x2) ** 2),
        ('exp(x1 + x2)', sympy.exp(x1 + x2)),
        ('cos(2*x1)*sin(x2)', sympy.cos(2 * x1) * sympy.sin(x2)),
        ('log(1 + x1^2)', sympy.log(1 + x1 ** 2)),
        ('0.25 * x1', x1 / 4),
        ('1e-1', sympy.Rational(1, 10)),
        ('x1^-1', 1 / x1),
        ('--x2', x2),
    ])
    def test_parse(self, src, expected):
        self.assertEqual(sympy.simplify(parse_expression(src, 2) - expected), 0)

    @parameterized.expand([
        ('x1 +', None),
        ('x1 * (x2', None),
        ('foo(x1)', 0),
        ('x3', 0),
        ('x1 + y', 5),
        ('exp(x1, x2)', 0),
        ('1 / 0', None),
        ('x1 ^ 0.5', None),
    ])
    def test_errors_carry_position(self, src, position):
        with self.assertRaises(ExpressionError) as context:
            parse_expression(src, 2)
        self.assertIsNotNone(context.exception.position)
        if position is not None:
            self.assertEqual(context.exception.position, position)

    def test_error_is_value_error(self):
        with self.assertRaises(ValueError):
            parse_expression('x1 x2', 2)

    def test_dimension(self):
        with self.assertRaises(ExpressionError):
            parse_expression('1', 0)
        self.assertEqual(parse_expression('x3', 3), x3)


class TestScalarField(TestCase):

    def test_partials(self):
        f = ScalarField.parse('x1^3 * exp(x2)', 2)
        self.assertEqual(sympy.simplify(f.partial((2, 1)) - 6 * x1 * sympy.exp(x2)), 0)
        self.assertAlmostEqual(f.eval_partial((2, 1), [0.5, 0.0]), 3.0, places=14)
        self.assertAlmostEqual(f.eval_partial((0, 0), [2.0, math.log(3.0)]), 24.0, places=12)

    def test_array_evaluation(self):
        f = ScalarField.parse('x1 * x2 + 1', 2)
        points = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 3.0]])
        np.testing.assert_allclose(f.evaluate(points), [1.0, 3.0, -2.0])
        np.testing.assert_allclose(f.eval_partial_array((1, 1), points), [1.0, 1.0, 1.0])

    def test_constant_broadcast(self):
        f = ScalarField.constant(3, Fraction(1, 2))
        values = f.evaluate(np.zeros((4, 3)))
        self.assertEqual(values.shape, (4,))
        np.testing.assert_array_equal(values, 0.5)

    def test_exact_evaluation(self):
        f = ScalarField.parse('x1^2 - x2/3', 2)
        self.assertEqual(f.eval_exact((0, 0), [Fraction(1, 2), 1]), Fraction(-1, 12))
        self.assertEqual(f.eval_exact((1, 0), [Fraction(1, 2), 1]), 1)
        g = ScalarField.parse('exp(x1)', 1)
        self.assertEqual(g.eval_exact((1,), [0]), 1)
        self.assertEqual(g.eval_exact((0,), [1]), sympy.E)

    def test_polynomial_detection(self):
        self.assertTrue(ScalarField.parse('x1^4 - x1*x2', 2).is_polynomial)
        self.assertFalse(ScalarField.parse('exp(x1)', 2).is_polynomial)

    def test_max_order(self):
        f = ScalarField.parse('exp(x1)', 1, max_order=3)
        f.partial((3,))
        with self.assertRaises(DerivativeOrderError):
            f.partial((4,))

    def test_invalid_multi_index(self):
        f = ScalarField.parse('x1', 2)
        with self.assertRaises(DimensionError):
            f.partial((1,))
        with self.assertRaises(DimensionError):
            f.partial((-1, 0))
        with self.assertRaises(DimensionError):
            f.eval_partial((0, 0), [1.0])

    def test_stray_symbols(self):
        with self.assertRaises(DimensionError):
            ScalarField(1, x1 + x2)

    def test_compose_affine(self):
        f = ScalarField.parse('x1^2 + x2', 2)
        g = f.compose_affine([[2, 0], [1, 1]], [1, 0])
        # g(y) = (2 y1 + 1)^2 + y1 + y2
        self.assertAlmostEqual(g.eval_partial((0, 0), [0.5, 0.25]), 4.75, places=14)
        self.assertEqual(g.eval_exact((1, 0), [0, 0]), 5)

    def test_compose_changes_dimension(self):
        f = ScalarField.parse('x1 * x2', 2)
        g = f.compose_affine([[1], [2]])
        self.assertEqual(g.d, 1)
        self.assertEqual(g.eval_exact((0,), [3]), 18)
        with self.assertRaises(DimensionError):
            f.compose_affine([[1, 0]])

    def test_translate(self):
        f = ScalarField.parse('x1 * x2', 2)
        self.assertEqual(f.translate([1, Fraction(1, 2)]).eval_exact((0, 0), [1, 1]), 3)

    def test_partials_of_exponential_at_origin(self):
        f = ScalarField.parse('exp(x1 + x2)', 2)
        self.assertEqual(f.eval_exact((3, 2), [0, 0]), 1)
        self.assertAlmostEqual(f.eval_partial((3, 2), [0.0, 0.0]), 1.0, places=14)

    @settings(max_examples=30, deadline=None)
    @given(expressions(3))
    def test_partials_match_central_differences(self, expr):
        f = ScalarField(2, expr)
        points = np.random.default_rng(0).uniform(-0.5, 0.5, size=(20, 2))
        h = 1e-4
        for k in range(2):
            step = h * np.eye(2)[k]
            difference = (f.evaluate(points + step) - f.evaluate(points - step)) / (2 * h)
            exact = f.eval_partial_array(tuple(int(i == k) for i in range(2)), points)
            np.testing.assert_array_less(np.abs(difference - exact), 1e-5 * np.maximum(1.0, np.abs(exact)))

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.integers(-2, 2), min_size=4, max_size=4), st.lists(st.integers(-2, 2), min_size=4, max_size=4),
           st.lists(st.integers(-3, 3), min_size=2, max_size=2), st.lists(st.integers(-3, 3), min_size=2, max_size=2))
    def test_compose_affine_associative(self, a, c, b, e):
        f = ScalarField.parse('exp((x1 - x2) / 4) * cos(x1 + x2 / 3)', 2)
        A = np.array(a).reshape(2, 2)
        C = np.array(c).reshape(2, 2)
        b = [Fraction(v, 2) for v in b]
        e = [Fraction(v, 3) for v in e]
        # f(A (C y + e) + b) = f(A C y + (A e + b))
        nested = f.compose_affine(A.tolist(), b).compose_affine(C.tolist(), e)
        offset = [sum(int(A[r, j]) * e[j] for j in range(2)) + b[r] for r in range(2)]
        direct = f.compose_affine((A @ C).tolist(), offset)
        points = np.random.default_rng(1).uniform(-0.5, 0.5, size=(10, 2))
        np.testing.assert_allclose(nested.evaluate(points), direct.evaluate(points), rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(nested.eval_partial_array((1, 1), points), direct.eval_partial_array((1, 1), points),
                                   rtol=1e-10, atol=1e-10)
