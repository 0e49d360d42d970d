import itertools
import logging
import math
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from sympy import Matrix

from polytope_em.bernoulli.bernoulli_1d import DEFAULT_TABLE
from polytope_em.bernoulli.hermite_normal_form import (IntMatrix, IntVector, as_int_matrix, cosets, hnf,
                                                       integer_kernel, k_diagonal)
from polytope_em.exceptions import DimensionError, ResidualImaginaryError, SingularMatrixError
from polytope_em.geometry.solid_angles import exact_cone_fraction
from polytope_em.utils.reduction import pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

BACKENDS = ('periodization', 'hnf', 'fourier')
IMAGINARY_TOL = 1e-10
# exp(-pi * t^2) drops below 1e-16 at t = 3.42
GAUSSIAN_REACH = 3.42
FOURIER_CHUNK = 1 << 18

Real = Union[float, int, Fraction]


def _exact_point(x: Sequence[Real]) -> Tuple[List[int], int]:
    """ Integer numerators and a common denominator of x """
    fractions = [Fraction(v) for v in x]
    q = 1
    for v in fractions:
        q = q * v.denominator // math.gcd(q, v.denominator)
    return [int(v * q) for v in fractions], q


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    cos = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, cos)))


class MvBernoulli:
    """
    Periodized multivariate Bernoulli polynomial

        B_{J,L}(x) = sum_n |det L|^{-1} prod_k B_{j_k}(((L^{-1})^T (x + n))_k)

    with the cell [0, 1)^d in y = (L^{-1})^T x. At discontinuities every backend
    returns the radial average of the values around x.
    """

    def __init__(self, J: Sequence[int], L: Sequence[Sequence[int]]):
        self.J = tuple(int(j) for j in J)
        self.L = as_int_matrix(L)
        self.d = len(self.J)
        if len(self.L) != self.d or any(len(row) != self.d for row in self.L):
            raise DimensionError(f"J of length {self.d} needs a {self.d}x{self.d} matrix, got {self.L}")
        if any(j < 0 for j in self.J):
            raise ValueError(f"Negative multi-index {self.J}")
        self.I = tuple(int(j > 0) for j in self.J)
        L_sym = Matrix(self.L)
        self.det = int(L_sym.det())
        if self.det == 0:
            raise SingularMatrixError(f"Singular matrix {self.L}")
        # (L^{-1})^T = adj(L)^T / det
        self.adj_t = as_int_matrix(L_sym.adjugate().T.tolist())
        self.H, self.U = hnf(self.L)
        self.k = k_diagonal(self.H)
        self.k_I = tuple(ks if i else 1 for ks, i in zip(self.k, self.I))
        self.cosets = cosets(self.H, self.k)
        directions = np.array(self.adj_t, dtype=float) / self.det
        self._directions = directions
        self._pair_weights = {
            (a, b): 0.25 * (1.0 - 2.0 * _angle(directions[a], directions[b]) / math.pi)
            for a, b in itertools.combinations(range(self.d), 2)
        }
        self._poly_coeffs = [DEFAULT_TABLE.poly(j).float_coeffs for j in self.J]

    def __repr__(self):
        return f"MvBernoulli(J={self.J}, L={self.L})"

    def evaluate(self, x: Sequence[Real], backend: str = 'hnf', **kwargs) -> float:
        if backend == 'periodization':
            return self.eval_periodization(x)
        if backend == 'hnf':
            return self.eval_hnf(x)
        if backend == 'fourier':
            return self.eval_fourier(x, **kwargs)
        raise ValueError(f"Unknown backend '{backend}', expected one of {BACKENDS}")

    def _check_point(self, x: Sequence[Real]):
        if len(x) != self.d:
            raise DimensionError(f"Point {x} does not have dimension {self.d}")

    def _cell_coordinates(self, numerators: np.ndarray, q: int) -> Tuple[np.ndarray, int]:
        """
        y = (L^{-1})^T (numerators / q) as integer numerators over a positive denominator.
        """
        adj_t = np.array(self.adj_t, dtype=object)
        Y = numerators @ adj_t.T
        D = self.det * q
        if D < 0:
            Y, D = -Y, -D
        return Y, D

    def eval_periodization(self, x: Sequence[Real]) -> float:
        """
        Sum over the translates x + n falling in the closed cell L^T [0, 1]^d.
        Summands on the cell boundary enter with the solid angle of the cell there.
        """
        self._check_point(x)
        X, q = _exact_point(x)
        corners = np.array(list(itertools.product((0, 1), repeat=self.d)), dtype=np.int64)
        images = corners @ np.array(self.L, dtype=np.int64)
        ranges = []
        for k in range(self.d):
            shift = Fraction(X[k], q)
            ranges.append(range(math.ceil(int(images[:, k].min()) - shift),
                                math.floor(int(images[:, k].max()) - shift) + 1))
        grid = np.array(list(itertools.product(*ranges)), dtype=object).reshape(-1, self.d)
        Y, D = self._cell_coordinates(grid * q + np.array(X, dtype=object), q)
        inside = np.asarray(np.all((Y >= 0) & (Y <= D), axis=1), dtype=bool)
        Y = Y[inside]
        values = []
        for row in Y:
            lower = [s for s in range(self.d) if row[s] == 0]
            upper = [s for s in range(self.d) if row[s] == D]
            y = [float(Fraction(int(v), D)) for v in row]
            value = 1.0
            for s in range(self.d):
                value *= npoly.polyval(y[s], self._poly_coeffs[s])
            if lower or upper:
                normals = [self._directions[s] for s in lower] + [-self._directions[s] for s in upper]
                value *= exact_cone_fraction(np.array(normals))
            values.append(value)
        return float(pairwise_sum(values)) / abs(self.det)

    def eval_hnf(self, x: Sequence[Real]) -> float:
        """
        Coset-wise evaluation on the diagonal sublattice K Z^d of L Z^d = H Z^d.
        Only cosets with v_s = 0 (mod k_s) wherever j_s = 0 contribute.
        """
        self._check_point(x)
        X, q = _exact_point(x)
        Y, D = self._cell_coordinates(np.array([X], dtype=object), q)
        Y = [int(v) for v in Y[0]]
        terms = []
        for v in self.cosets:
            if any(i == 0 and vs % ks for i, vs, ks in zip(self.I, v, self.k)):
                continue
            smooth, jumps = [], []
            for s in range(self.d):
                ks, j = self.k_I[s], self.J[s]
                smooth_sum, jump_sum = [], []
                for a in range(ks):
                    phase = np.exp(-2j * np.pi * a * v[s] / ks) if self.I[s] else 1.0
                    numerator = Y[s] * ks + a * D
                    if j == 1 and numerator % (D * ks) == 0:
                        jump_sum.append(phase)
                    else:
                        arg = Fraction(numerator, D * ks)
                        smooth_sum.append(phase * DEFAULT_TABLE.periodized_eval(j, arg))
                smooth.append(complex(pairwise_sum(smooth_sum)) / ks)
                jumps.append(complex(pairwise_sum(jump_sum)) / ks)
            terms.append(self._regularized_product(smooth, jumps))
        total = complex(pairwise_sum(terms))
        scale = max(1.0, sum(abs(t) for t in terms))
        if abs(total.imag) > IMAGINARY_TOL * scale:
            raise ResidualImaginaryError(f"{self}: imaginary residue {total.imag:.3e} at x={list(x)}")
        return total.real

    def _regularized_product(self, smooth: List[complex], jumps: List[complex]) -> complex:
        """
        Radial average of prod_s f_s where f_s is continuous (weight smooth[s]) or jumps
        by -1/2 sgn across its hyperplane (weight jumps[s]). Odd numbers of jumps average
        to zero; a pair averages to (1/4)(1 - 2 phi/pi).
        """
        jumping = [s for s in range(self.d) if jumps[s] != 0]
        result = complex(np.prod(smooth))
        if len(jumping) >= 4:
            raise DimensionError(f"{self}: regularization across {len(jumping)} jumps is not available")
        for a, b in itertools.combinations(jumping, 2):
            rest = [smooth[s] for s in range(self.d) if s not in (a, b)]
            result += self._pair_weights[(a, b)] * jumps[a] * jumps[b] * complex(np.prod(rest))
        return result

    @cached_property
    def delta_basis(self) -> np.ndarray:
        """ Integer basis (columns) of {n : (L n)_k = 0 wherever i_k = 0} """
        rows = [self.L[k] for k in range(self.d) if self.I[k] == 0]
        basis = integer_kernel(rows, self.d)
        return np.array(basis, dtype=np.int64).T.reshape(self.d, len(basis))

    def eval_fourier(self, x: Sequence[Real], epsilon: float = 1e-3, cutoff: Optional[int] = None) -> float:
        """
        (-1)^{|I|} sum_{n in Delta(I, L), |n|_inf <= cutoff} exp(-pi eps^2 |n|^2) e^{2 pi i n.x} / (2 pi i L n)^J

        :param epsilon: Gaussian mollifier width
        :param cutoff: box half-width; by default where the mollifier drops below 1e-16
        """
        self._check_point(x)
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        if cutoff is None:
            cutoff = int(math.ceil(GAUSSIAN_REACH / epsilon))
        x = np.array([float(v) for v in x])
        basis = self.delta_basis
        r = basis.shape[1]
        if r == 0:
            return 1.0
        # |t| bounds from n = basis t inside the box
        pinv = np.linalg.pinv(basis.astype(float))
        t_bounds = np.ceil(np.abs(pinv).sum(axis=1) * cutoff).astype(np.int64)
        L = np.array(self.L, dtype=np.int64)
        active = np.array(self.I, dtype=bool)
        J = np.array(self.J)
        partial = []
        for t in self._chunked_grid(t_bounds):
            n = t @ basis.T
            keep = np.all(np.abs(n) <= cutoff, axis=1)
            Ln = n[keep] @ L.T
            n = n[keep]
            keep = np.all(Ln[:, active] != 0, axis=1)
            n, Ln = n[keep], Ln[keep]
            if not len(n):
                continue
            weight = np.exp(-np.pi * epsilon ** 2 * np.sum(n.astype(float) ** 2, axis=1))
            denominator = np.prod((2j * np.pi * Ln[:, active]) ** J[active], axis=1)
            terms = weight * np.exp(2j * np.pi * (n @ x)) / denominator
            order = np.argsort(np.abs(terms), kind='stable')
            partial.append(pairwise_array_sum(terms[order]))
        total = complex(pairwise_sum(partial)) * (-1) ** sum(self.I)
        return total.real

    @staticmethod
    def _chunked_grid(bounds: np.ndarray):
        axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
        lead = axes[0]
        rest = axes[1:]
        rest_size = int(np.prod([len(a) for a in rest])) if rest else 1
        step = max(1, FOURIER_CHUNK // rest_size)
        for start in range(0, len(lead), step):
            block = [lead[start:start + step]] + rest
            yield np.stack(np.meshgrid(*block, indexing='ij'), axis=-1).reshape(-1, len(bounds))


@lru_cache(maxsize=4096)
def mv_bernoulli(J: Tuple[int, ...], L: IntMatrix) -> MvBernoulli:
    return MvBernoulli(J, L)


def lerch_rational(j: int, x: Real, p: int, q: int) -> complex:
    """
    Regularized L_j(x, p/q) = -sum_n e^{2 pi i n x} / (n + p/q)^j as a q-term
    average of periodized Bernoulli polynomials.
    """
    if j < 1:
        raise ValueError(f"j must be positive, got {j}")
    if q < 1:
        raise ValueError(f"q must be positive, got {q}")
    x = Fraction(x)
    total = pairwise_sum([
        np.exp(-2j * np.pi * a * p / q) * DEFAULT_TABLE.periodized_eval(j, (x + a) / q)
        for a in range(q)
    ])
    return complex((2j * np.pi * q) ** j * np.exp(-2j * np.pi * float(x) * p / q) * total / q)


def lerch_series(j: int, x: float, r: Real, epsilon: float = 1e-3, cutoff: Optional[int] = None) -> complex:
    """ Mollified defining series of L_j(x, r), summed over n + r != 0 """
    r = Fraction(r)
    if cutoff is None:
        cutoff = int(math.ceil(GAUSSIAN_REACH / epsilon + abs(r)))
    n = np.arange(-cutoff, cutoff + 1, dtype=np.int64)
    shifted = n.astype(float) + float(r)
    keep = shifted != 0.0
    n, shifted = n[keep], shifted[keep]
    terms = np.exp(-np.pi * (epsilon * shifted) ** 2) * np.exp(2j * np.pi * n * x) / shifted ** j
    order = np.argsort(np.abs(terms), kind='stable')
    return -complex(pairwise_array_sum(terms[order]))
