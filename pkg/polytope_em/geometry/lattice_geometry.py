import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from sympy import Matrix

from polytope_em.exceptions import DegenerateGeometryError, DimensionError
from polytope_em.geometry.solid_angles import ExactLowDim, SolidAngleMethod
from polytope_em.utils.reduction import pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

IntVector = Tuple[int, ...]
IntMatrix = Tuple[Tuple[int, ...], ...]
Rational = Union[int, float, Fraction]

INT64_SAFE = 2 ** 62


def as_fractions(values: Sequence[Rational]) -> Tuple[Fraction, ...]:
    """ Exact rationals; floats are taken at their binary value """
    return tuple(Fraction(v) for v in values)


def _common_denominator(values: Sequence[Fraction]) -> int:
    q = 1
    for v in values:
        q = q * v.denominator // math.gcd(q, v.denominator)
    return q


@dataclass
class LatticeWeights:
    """ Points x + n of a shifted lattice inside a polytope, with their solid angles """
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def total(self) -> float:
        return pairwise_array_sum(self.weights)

    @staticmethod
    def concatenate(parts: Sequence['LatticeWeights'], d: int) -> 'LatticeWeights':
        parts = [p for p in parts if len(p)]
        if not parts:
            return LatticeWeights(np.zeros((0, d)), np.zeros(0))
        return LatticeWeights(np.vstack([p.points for p in parts]),
                              np.concatenate([p.weights for p in parts]))


@dataclass(frozen=True)
class IntegerSimplex:
    """
    Simplex with vertices p, p + m_1, ..., p + m_d; M holds the m_j as columns.
    """
    p: IntVector
    M: IntMatrix

    def __post_init__(self):
        d = len(self.p)
        if len(self.M) != d or any(len(row) != d for row in self.M):
            raise DimensionError(f"Base point of dimension {d} needs a {d}x{d} edge matrix")
        if self.det == 0:
            raise DegenerateGeometryError(f"Edge matrix {self.M} is singular")

    @classmethod
    def from_columns(cls, p: Sequence[int], columns: Sequence[Sequence[int]]) -> 'IntegerSimplex':
        d = len(p)
        return cls(p=tuple(int(v) for v in p),
                   M=tuple(tuple(int(columns[c][r]) for c in range(d)) for r in range(d)))

    @classmethod
    def standard(cls, d: int) -> 'IntegerSimplex':
        return cls(p=(0,) * d, M=tuple(tuple(int(r == c) for c in range(d)) for r in range(d)))

    @property
    def d(self) -> int:
        return len(self.p)

    @cached_property
    def det(self) -> int:
        return int(Matrix(self.M).det())

    @cached_property
    def adjugate(self) -> IntMatrix:
        """ adj(M) = det(M) M^{-1} """
        return tuple(tuple(int(v) for v in row) for row in Matrix(self.M).adjugate().tolist())

    @property
    def columns(self) -> List[IntVector]:
        return [tuple(self.M[r][c] for r in range(self.d)) for c in range(self.d)]

    @property
    def vertices(self) -> List[IntVector]:
        return [self.p] + [tuple(a + b for a, b in zip(self.p, m)) for m in self.columns]

    @property
    def volume(self) -> Fraction:
        return Fraction(abs(self.det), math.factorial(self.d))

    @cached_property
    def inward_normals(self) -> np.ndarray:
        """
        Gradients of the barycentric coordinates lambda_0..lambda_d, one per row;
        row 0 belongs to the facet opposite the base point's neighbours.
        """
        sign = 1 if self.det > 0 else -1
        rows = np.array(self.adjugate, dtype=float) * sign
        return np.vstack([-rows.sum(axis=0), rows])

    def translate(self, shift: Sequence[int]) -> 'IntegerSimplex':
        return IntegerSimplex(p=tuple(a + int(b) for a, b in zip(self.p, shift)), M=self.M)

    def barycentric_numerators(self, Z: np.ndarray, Q: int, tau: Fraction) -> np.ndarray:
        """
        Scaled barycentric coordinates of the points Z / Q with respect to tau * simplex.

        :param Z: integer array (n, d), exact numerators
        :param Q: common positive denominator
        :param tau: dilation
        :return: integer array (n, d + 1), each row a positive multiple of
            (lambda_0, ..., lambda_d); the sign pattern is exact
        """
        a, b = tau.numerator, tau.denominator
        sign = 1 if self.det > 0 else -1
        offset = np.array([a * Q * v for v in self.p], dtype=Z.dtype)
        centred = Z * b - offset
        adj = np.array(self.adjugate, dtype=Z.dtype) * sign
        mu = centred @ adj.T
        lam0 = abs(self.det) * a * Q - mu.sum(axis=1)
        return np.column_stack([lam0, mu])

    def contains(self, x: Sequence[Rational], tau: Rational = 1) -> bool:
        x = as_fractions(x)
        Q = _common_denominator(x)
        Z = np.array([[int(v * Q) for v in x]], dtype=object)
        bary = self.barycentric_numerators(Z, Q, Fraction(tau))
        return bool(np.all(bary >= 0))

    def bounding_box(self, tau: Fraction) -> Tuple[List[Fraction], List[Fraction]]:
        vertices = self.vertices
        lo = [tau * min(v[k] for v in vertices) for k in range(self.d)]
        hi = [tau * max(v[k] for v in vertices) for k in range(self.d)]
        return lo, hi

    def lattice_points(self, tau: Rational = 1, shift: Optional[Sequence[Rational]] = None,
                       method: Optional[SolidAngleMethod] = None) -> LatticeWeights:
        """
        Points z = shift + n, n integer, in the closed simplex tau * P, with the
        normalized solid angle of tau * P at z.

        :param tau: positive dilation, applied to base point and edges
        :param shift: the lattice offset x (zero by default)
        :param method: solid angle strategy
        """
        method = method or ExactLowDim()
        method.check_dimension(self.d)
        tau = Fraction(tau)
        if tau <= 0:
            raise ValueError(f"Dilation must be positive, got {tau}")
        shift = as_fractions(shift) if shift is not None else (Fraction(0),) * self.d
        if len(shift) != self.d:
            raise DimensionError(f"Shift {shift} does not have dimension {self.d}")
        Q = _common_denominator(shift)
        X = [int(v * Q) for v in shift]
        lo, hi = self.bounding_box(tau)
        ranges = [np.arange(math.ceil(l - s), math.floor(h - s) + 1) for l, h, s in zip(lo, hi, shift)]
        if any(len(r) == 0 for r in ranges):
            return LatticeWeights(np.zeros((0, self.d)), np.zeros(0))
        grid = np.stack(np.meshgrid(*ranges, indexing='ij'), axis=-1).reshape(-1, self.d)
        Z = self._numerators(grid, X, Q, tau)
        bary = self.barycentric_numerators(Z, Q, tau)
        nonneg = np.asarray(bary >= 0, dtype=bool)
        inside = np.all(nonneg, axis=1)
        active = np.asarray(bary[inside] == 0, dtype=bool)
        grid = grid[inside]
        weights = np.ones(len(grid))
        cache: Dict[Tuple[bool, ...], float] = {}
        normals = self.inward_normals
        for row, pattern in enumerate(map(tuple, active)):
            if not any(pattern):
                continue
            if pattern not in cache:
                cache[pattern] = method.cone_fraction(normals[np.array(pattern)])
            weights[row] = cache[pattern]
        points = grid.astype(float) + np.array([float(v) for v in shift])
        logger.debug(f"{len(points)} lattice points in {tau} * simplex {self.p}, {len(cache)} boundary strata")
        return LatticeWeights(points, weights)

    def _numerators(self, grid: np.ndarray, X: List[int], Q: int, tau: Fraction) -> np.ndarray:
        bound = (max(abs(v) for v in X) + Q * int(np.abs(grid).max(initial=0))) * tau.denominator \
            + abs(tau.numerator) * Q * max([abs(v) for v in self.p] + [1])
        bound *= (self.d + 1) ** 2 * max(abs(v) for row in self.adjugate for v in row)
        bound += abs(self.det) * abs(tau.numerator) * Q
        if bound < INT64_SAFE:
            return grid.astype(np.int64) * Q + np.array(X, dtype=np.int64)
        return grid.astype(object) * Q + np.array(X, dtype=object)


@dataclass(frozen=True)
class SimplicialComplex:
    """ Homogeneous d-complex given as integer simplices with disjoint interiors """
    simplices: Tuple[IntegerSimplex, ...]

    def __post_init__(self):
        if not self.simplices:
            raise DegenerateGeometryError("A complex needs at least one simplex")
        dims = {s.d for s in self.simplices}
        if len(dims) != 1:
            raise DimensionError(f"Mixed simplex dimensions {sorted(dims)}")

    @property
    def d(self) -> int:
        return self.simplices[0].d

    @property
    def volume(self) -> Fraction:
        return sum((s.volume for s in self.simplices), Fraction(0))

    def translate(self, shift: Sequence[int]) -> 'SimplicialComplex':
        return SimplicialComplex(tuple(s.translate(shift) for s in self.simplices))

    def validate(self, samples: int = 1000, seed: int = 0):
        """
        Probabilistic disjointness check: random interior points of every simplex
        must not fall strictly inside any other simplex.
        """
        rng = np.random.default_rng(seed)
        for i, first in enumerate(self.simplices):
            bary = rng.dirichlet(np.ones(self.d + 1), size=samples)
            vertices = np.array(first.vertices, dtype=float)
            points = bary @ vertices
            for j, second in enumerate(self.simplices):
                if j == i:
                    continue
                inverse = np.linalg.inv(np.array(second.M, dtype=float))
                mu = (points - np.array(second.p, dtype=float)) @ inverse.T
                lam = np.column_stack([1 - mu.sum(axis=1), mu])
                if np.any(np.all(lam > 1e-9, axis=1)):
                    raise DegenerateGeometryError(f"Simplices {i} and {j} have overlapping interiors")

    def lattice_points(self, tau: Rational = 1, shift: Optional[Sequence[Rational]] = None,
                       method: Optional[SolidAngleMethod] = None) -> LatticeWeights:
        parts = [s.lattice_points(tau, shift, method) for s in self.simplices]
        return LatticeWeights.concatenate(parts, self.d)


def _integer_list(value, what: str) -> List[int]:
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise DimensionError(f"{what} must be a list of integers, got {value!r}")
    return value


def _simplex_from_dict(index: int, entry) -> IntegerSimplex:
    if not isinstance(entry, dict) or 'p' not in entry or 'M' not in entry:
        raise DimensionError(f"Simplex {index} needs both 'p' and 'M'")
    p = _integer_list(entry['p'], f"Simplex {index} base point")
    if not p:
        raise DimensionError(f"Simplex {index} has an empty base point")
    columns = entry['M']
    if not isinstance(columns, list) or len(columns) != len(p):
        raise DimensionError(f"Simplex {index} needs {len(p)} edge columns for a base point of dimension {len(p)}")
    for c, column in enumerate(columns):
        if len(_integer_list(column, f"Simplex {index} column {c}")) != len(p):
            raise DimensionError(f"Simplex {index} column {c} has length {len(column)}, expected {len(p)}")
    return IntegerSimplex.from_columns(p, columns)


def complex_from_dict(data: dict, validate: bool = True) -> SimplicialComplex:
    """
    JSON layout {"d": 2, "simplices": [{"p": [...], "M": [[...], ...]}]} with M
    listed column by column; a bare {"p", "M"} object is a one-simplex complex.
    """
    if not isinstance(data, dict):
        raise DimensionError(f"Expected a JSON object for the complex, got {type(data).__name__}")
    if 'simplices' not in data:
        data = {'simplices': [data]}
    if not isinstance(data['simplices'], list):
        raise DimensionError("'simplices' must be a list of {\"p\", \"M\"} objects")
    simplices = tuple(_simplex_from_dict(i, s) for i, s in enumerate(data['simplices']))
    complex_ = SimplicialComplex(simplices)
    if 'd' in data and data['d'] != complex_.d:
        raise DimensionError(f"Declared dimension {data['d']} but simplices have dimension {complex_.d}")
    if validate:
        complex_.validate()
    return complex_


def complex_to_dict(complex_: SimplicialComplex) -> dict:
    return {
        'd': complex_.d,
        'simplices': [{'p': list(s.p), 'M': [list(c) for c in s.columns]} for s in complex_.simplices],
    }


def load_complex(path: str) -> SimplicialComplex:
    with open(path, 'r') as f:
        return complex_from_dict(json.load(f))


def solid_angle(P: SimplicialComplex, x: Sequence[Rational], method: Optional[SolidAngleMethod] = None) -> float:
    """
    Normalized solid angle of P at x, summed over the simplices of P.
    """
    method = method or ExactLowDim()
    method.check_dimension(P.d)
    x = as_fractions(x)
    if len(x) != P.d:
        raise DimensionError(f"Point {x} does not have dimension {P.d}")
    Q = _common_denominator(x)
    Z = np.array([[int(v * Q) for v in x]], dtype=object)
    total = []
    for simplex in P.simplices:
        bary = simplex.barycentric_numerators(Z, Q, Fraction(1))[0]
        if any(v < 0 for v in bary):
            continue
        active = np.array([v == 0 for v in bary])
        total.append(method.cone_fraction(simplex.inward_normals[active]) if active.any() else 1.0)
    return float(pairwise_sum(total)) if total else 0.0


def weighted_sum(P: SimplicialComplex, f, N: int, method: Optional[SolidAngleMethod] = None) -> float:
    """
    S_N(f, P) = N^{-d} sum_n omega_P(n / N) f(n / N).

    :param f: ScalarField
    """
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if f.d != P.d:
        raise DimensionError(f"Field of dimension {f.d} on a complex of dimension {P.d}")
    partial = []
    for simplex in P.simplices:
        lattice = simplex.lattice_points(N, None, method)
        if len(lattice):
            partial.append(pairwise_array_sum(lattice.weights * f.evaluate(lattice.points / N)))
    return pairwise_sum(partial) / N ** P.d


def weighted_lattice_count(P: SimplicialComplex, tau: Rational, method: Optional[SolidAngleMethod] = None) -> float:
    """ sum_{n in Z^d} omega_{tau P}(n) """
    return pairwise_sum([s.lattice_points(tau, None, method).total() for s in P.simplices])


def macdonald_fit(P: SimplicialComplex, taus: Sequence[int], method: Optional[SolidAngleMethod] = None) -> np.ndarray:
    """
    Least-squares degree-d polynomial through the weighted counts.

    :return: coefficients, highest power first (numpy.polyfit order)
    """
    counts = [weighted_lattice_count(P, tau, method) for tau in taus]
    return np.polyfit(np.array(taus, dtype=float), np.array(counts), P.d)


def triangulate_convex(vertices: Sequence[Sequence[int]]) -> SimplicialComplex:
    """
    Fan triangulation from the first vertex over the hull facets not containing it.
    Uses only the given vertices, which must be in convex position: every one of
    them a vertex of their hull. In d = 1 only the two extreme points are used.
    """
    points = np.array(vertices, dtype=np.int64)
    if points.ndim != 2 or len(points) < points.shape[1] + 1:
        raise DegenerateGeometryError(f"Need at least d + 1 points, got {len(points)}")
    d = points.shape[1]
    apex = points[0]
    if d == 1:
        lo, hi = int(points.min()), int(points.max())
        if lo == hi:
            raise DegenerateGeometryError("All points coincide")
        return SimplicialComplex((IntegerSimplex(p=(lo,), M=((hi - lo,),)),))
    try:
        hull = ConvexHull(points)
    except QhullError as e:
        raise DegenerateGeometryError(f"Input does not span R^{d}: {e}") from e
    inner = sorted(set(range(len(points))) - set(int(i) for i in hull.vertices))
    if inner:
        raise DegenerateGeometryError(f"Points {[tuple(int(v) for v in points[i]) for i in inner]} "
                                      f"are not vertices of the convex hull")
    simplices = []
    for facet in hull.simplices:
        if 0 in facet:
            continue
        edges = points[facet] - apex
        columns = [tuple(int(v) for v in edge) for edge in edges]
        candidate = tuple(tuple(columns[c][r] for c in range(d)) for r in range(d))
        if Matrix(candidate).det() == 0:
            continue
        simplices.append(IntegerSimplex(p=tuple(int(v) for v in apex), M=candidate))
    logger.debug(f"Fan triangulation of {len(points)} vertices into {len(simplices)} simplices")
    return SimplicialComplex(tuple(simplices))
