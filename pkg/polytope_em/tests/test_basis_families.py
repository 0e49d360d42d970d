import itertools
from unittest import TestCase

from hypothesis import given, settings, strategies as st
from parameterized import parameterized
from sympy import Matrix

from polytope_em.exceptions import DimensionError
from polytope_em.geometry.basis_families import (Theta, build_family, classify_frequency, delta_membership, in_cone,
                                                 i_multiindex, union_vectors)


class TestBuildFamily(TestCase):

    def test_dimension_one(self):
        family = build_family(1)
        self.assertEqual(family.bases, (((1,),),))
        self.assertEqual(family.lam((1,)), (0,))
        self.assertEqual(family.lam((2,)), (1,))

    def test_dimension_two(self):
        family = build_family(2)
        self.assertEqual(family.basis((1, 1)), ((1, 0), (0, 1)))
        self.assertEqual(family.basis((1, 2)), ((1, -1), (0, 1)))

    def test_dimension_three_example(self):
        family = build_family(3)
        self.assertEqual(family.lam((1, 2, 2)), (0, 1, 0))
        self.assertEqual(family.basis((1, 2, 2)), ((1, -1, 0), (0, 1, -1), (0, 0, 1)))

    @parameterized.expand([(d,) for d in range(1, 7)])
    def test_unimodular_and_distinct(self, d):
        family = build_family(d)
        self.assertEqual(len(family.bases), 2 ** (d - 1))
        self.assertEqual(len(set(family.bases)), len(family.bases))
        union = set(union_vectors(d))
        negated = {tuple(-v for v in u) for u in union}
        for basis in family.bases:
            self.assertEqual(abs(Matrix(basis).det()), 1)
            for b in basis:
                self.assertIn(b, union | negated)

    def test_lambda_is_a_vertex(self):
        # lambda_V is 0 or a unit vector: a vertex of the standard simplex
        family = build_family(4)
        for V in family.indices():
            lam = family.lam(V)
            self.assertIn(sum(lam), (0, 1))
            self.assertTrue(all(v in (0, 1) for v in lam))

    def test_d_matrix_columns(self):
        family = build_family(3)
        D = family.d_matrix((1, 2, 2))
        self.assertEqual(D, ((1, 0, 0), (-1, 1, 0), (0, -1, 1)))

    def test_dimension_cap(self):
        with self.assertRaises(DimensionError):
            build_family(0)
        with self.assertRaises(DimensionError):
            build_family(7)

    def test_invalid_index(self):
        with self.assertRaises(DimensionError):
            build_family(2).basis((1, 3))


class TestClassifyFrequency(TestCase):

    def setUp(self):
        self.family = build_family(2)

    def test_zero_frequency(self):
        theta = classify_frequency(self.family, (0, 0))
        self.assertEqual(theta.flags, frozenset(range(3)))
        self.assertEqual(theta.dim, 2)

    def test_diagonal_frequency(self):
        theta = classify_frequency(self.family, (3, 3))
        self.assertEqual(theta.vectors(), [(1, -1)])
        self.assertEqual(theta, Theta.span(2, [(1, -1)]))

    def test_generic_frequency(self):
        theta = classify_frequency(self.family, (1, 2))
        self.assertEqual(theta.flags, frozenset())
        self.assertEqual(theta.dim, 0)

    def test_rational_frequency(self):
        self.assertEqual(classify_frequency(self.family, ('1/2', 0)).vectors(), [(0, 1)])

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            classify_frequency(self.family, (1, 2, 3))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=2, max_value=4).flatmap(
        lambda d: st.lists(st.integers(min_value=-20, max_value=20), min_size=d, max_size=d)))
    def test_partition(self, xi):
        family = build_family(len(xi))
        theta = classify_frequency(family, xi)
        self.assertTrue(theta.is_closed())
        self.assertTrue(in_cone(family, theta, xi))


class TestMultiIndices(TestCase):

    def test_full_and_trivial_theta(self):
        family = build_family(3)
        full = classify_frequency(family, (0, 0, 0))
        trivial = classify_frequency(family, (1, 2, 4))
        for V in family.indices():
            self.assertEqual(i_multiindex(family, V, full), (0, 0, 0))
            self.assertEqual(i_multiindex(family, V, trivial), (1, 1, 1))

    def test_diagonal_theta(self):
        family = build_family(2)
        theta = Theta.span(2, [(1, -1)])
        self.assertEqual(i_multiindex(family, (1, 2), theta), (0, 1))
        self.assertEqual(i_multiindex(family, (1, 1), theta), (1, 1))

    def test_delta_membership(self):
        identity = ((1, 0), (0, 1))
        self.assertTrue(delta_membership((0, 0), identity, (0, 0)))
        self.assertFalse(delta_membership((1, 1), identity, (0, 0)))
        self.assertTrue(delta_membership((1, 0), identity, (5, 0)))
        self.assertFalse(delta_membership((1, 0), identity, (5, 1)))

    @parameterized.expand([
        (((1, 0), (0, 1)), 8),
        (((1, 1), (0, 1)), 8),
        (((2, 1), (1, 1)), 8),
        (((1, 0, 0), (0, 1, 0), (0, 0, 1)), 3),
        (((1, 1, 0), (0, 1, 1), (0, 0, 1)), 3),
        (((1, 0, 1), (1, 1, 1), (0, 1, 2)), 3),
    ])
    def test_cone_cosets_match_delta(self, M, bound):
        """
        Integer xi with M^T xi in the cone of theta lie in Delta(I, (M D_V)^T)
        for I = I(V, theta), and in no other Delta(I', .).
        """
        d = len(M)
        family = build_family(d)
        M_sym = Matrix(M)
        lattice = {V: [[int(v) for v in row] for row in (M_sym * Matrix(family.d_matrix(V))).T.tolist()]
                   for V in family.indices()}
        all_I = list(itertools.product((0, 1), repeat=d))
        for xi in itertools.product(range(-bound, bound + 1), repeat=d):
            eta = [int(v) for v in M_sym.T * Matrix(xi)]
            theta = classify_frequency(family, eta)
            for V in family.indices():
                I = i_multiindex(family, V, theta)
                members = [J for J in all_I if delta_membership(J, lattice[V], xi)]
                self.assertEqual(members, [I])
