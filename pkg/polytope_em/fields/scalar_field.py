import logging
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from polytope_em.exceptions import DerivativeOrderError, DimensionError
from polytope_em.fields.expression_parser import parse_expression, variables

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 16

MultiIndex = Tuple[int, ...]
Rational = Union[int, Fraction]


def _to_sympy(value) -> sympy.Expr:
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        value = Fraction(value)
        return sympy.Rational(value.numerator, value.denominator)
    return sympy.sympify(value)


class ScalarField:
    """
    Integrand f: R^d -> R with exact mixed partial derivatives.

    Derivatives are built on demand by differentiating the cached
    lower-order derivative once, and lambdified for numpy evaluation.
    Instances are immutable once built; the caches only memoize.
    """

    def __init__(self, d: int, expr: sympy.Expr, max_order: int = DEFAULT_MAX_ORDER, source: Optional[str] = None):
        if d < 1:
            raise DimensionError(f"Dimension must be positive, got {d}")
        self.d = d
        self.expr = sympy.sympify(expr)
        self.max_order = max_order
        self.source = source if source is not None else str(self.expr)
        self.symbols = variables(d)
        stray = self.expr.free_symbols - set(self.symbols)
        if stray:
            raise DimensionError(f"Expression uses {sorted(map(str, stray))} outside x1..x{d}")
        self._partials: Dict[MultiIndex, sympy.Expr] = {(0,) * d: self.expr}
        self._functions: Dict[MultiIndex, Callable] = {}

    @classmethod
    def parse(cls, src: str, d: int, max_order: int = DEFAULT_MAX_ORDER) -> 'ScalarField':
        return cls(d, parse_expression(src, d), max_order=max_order, source=src)

    @classmethod
    def constant(cls, d: int, c=1) -> 'ScalarField':
        return cls(d, _to_sympy(c))

    def __repr__(self):
        return f"ScalarField(d={self.d}, '{self.source}')"

    @property
    def is_polynomial(self) -> bool:
        return self.expr.is_polynomial(*self.symbols)

    def _check_alpha(self, alpha: Sequence[int]) -> MultiIndex:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.d or any(a < 0 for a in alpha):
            raise DimensionError(f"Invalid multi-index {alpha} for dimension {self.d}")
        if sum(alpha) > self.max_order:
            raise DerivativeOrderError(f"Derivative order {sum(alpha)} exceeds max_order {self.max_order}")
        return alpha

    def partial(self, alpha: Sequence[int]) -> sympy.Expr:
        alpha = self._check_alpha(alpha)
        if alpha not in self._partials:
            k = max(i for i, a in enumerate(alpha) if a)
            lower = alpha[:k] + (alpha[k] - 1,) + alpha[k + 1:]
            self._partials[alpha] = sympy.diff(self.partial(lower), self.symbols[k])
        return self._partials[alpha]

    def _function(self, alpha: MultiIndex) -> Callable:
        if alpha not in self._functions:
            self._functions[alpha] = sympy.lambdify(self.symbols, self.partial(alpha), modules='numpy')
        return self._functions[alpha]

    def eval_partial(self, alpha: Sequence[int], x: Sequence[float]) -> float:
        """
        :param alpha: multi-index with |alpha| <= max_order
        :param x: point
        :return: d^alpha f (x)
        """
        if len(x) != self.d:
            raise DimensionError(f"Point {x} does not have dimension {self.d}")
        return float(self.eval_partial_array(alpha, np.asarray([x], dtype=float))[0])

    def eval_partial_array(self, alpha: Sequence[int], points: np.ndarray) -> np.ndarray:
        """ d^alpha f at each row of points (n, d) """
        alpha = self._check_alpha(alpha)
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.d:
            raise DimensionError(f"Points of shape {points.shape} for a field of dimension {self.d}")
        values = self._function(alpha)(*points.T)
        return np.broadcast_to(np.asarray(values, dtype=float), (points.shape[0],)).copy()

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.eval_partial_array((0,) * self.d, points)

    def eval_exact(self, alpha: Sequence[int], x: Sequence[Rational]):
        """ Exact value at a rational point; a Fraction whenever the result is rational """
        value = self.partial(alpha).xreplace({s: _to_sympy(v) for s, v in zip(self.symbols, x)})
        if value.is_Rational:
            return Fraction(int(value.p), int(value.q))
        return value

    def compose_affine(self, A: Sequence[Sequence[Rational]], b: Optional[Sequence[Rational]] = None) -> 'ScalarField':
        """
        g(y) = f(A y + b).

        :param A: d x d' matrix
        :param b: length d offset, zero by default
        """
        if len(A) != self.d:
            raise DimensionError(f"Affine map with {len(A)} rows for a field of dimension {self.d}")
        d_new = len(A[0])
        if any(len(row) != d_new for row in A):
            raise DimensionError("Ragged affine matrix")
        b = b if b is not None else [0] * self.d
        if len(b) != self.d:
            raise DimensionError(f"Offset of length {len(b)} for a field of dimension {self.d}")
        y = variables(d_new)
        mapping = {
            x: sum((_to_sympy(a) * yj for a, yj in zip(row, y)), sympy.Integer(0)) + _to_sympy(bi)
            for x, row, bi in zip(self.symbols, A, b)
        }
        composed = self.expr.xreplace(mapping)
        return ScalarField(d_new, composed, max_order=self.max_order,
                           source=f"({self.source}) o affine")

    def translate(self, p: Sequence[Rational]) -> 'ScalarField':
        """ y -> f(y + p) """
        identity = [[int(r == c) for c in range(self.d)] for r in range(self.d)]
        return self.compose_affine(identity, p)
