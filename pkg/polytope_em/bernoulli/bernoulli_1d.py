import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 32

Real = Union[float, int, Fraction]


@dataclass(frozen=True)
class BernoulliPoly:
    """
    Bernoulli polynomial B_n on (0, 1), normalized so that B_0 = 1,
    B_{n+1}' = B_n and the mean of B_{n+1} over [0, 1] vanishes.

    Coefficients are exact rationals in the monomial basis, lowest degree first.
    """
    degree: int
    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.degree + 1:
            raise ValueError(f"Degree {self.degree} polynomial needs {self.degree + 1} coefficients")

    def derivative(self) -> Tuple[Fraction, ...]:
        return tuple(k * c for k, c in enumerate(self.coeffs))[1:] or (Fraction(0),)

    def mean(self) -> Fraction:
        return sum((c / (k + 1) for k, c in enumerate(self.coeffs)), Fraction(0))

    def value(self, x: Real) -> Fraction:
        """ Exact Horner evaluation of the (non-periodized) polynomial """
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    @property
    def float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def _integrate_zero_mean(coeffs: Tuple[Fraction, ...]) -> Tuple[Fraction, ...]:
    antiderivative = [Fraction(0)] + [c / (k + 1) for k, c in enumerate(coeffs)]
    # mean of the antiderivative without its constant term
    antiderivative[0] = -sum(c / (k + 1) for k, c in enumerate(antiderivative))
    return tuple(antiderivative)


def bernoulli_poly(n: int) -> BernoulliPoly:
    """
    Build B_n from B_0 = 1 by repeated integration, fixing each constant
    of integration by the zero-mean condition.
    """
    if n < 0:
        raise ValueError(f"Bernoulli degree must be non-negative, got {n}")
    coeffs = (Fraction(1),)
    for _ in range(n):
        coeffs = _integrate_zero_mean(coeffs)
    return BernoulliPoly(degree=n, coeffs=coeffs)


class BernoulliTable:
    """
    Exact Bernoulli polynomials up to max_degree, built once at construction.
    Read-only afterwards.
    """

    def __init__(self, max_degree: int = DEFAULT_MAX_DEGREE):
        self.max_degree = max_degree
        self._polys: Dict[int, BernoulliPoly] = {}
        coeffs = (Fraction(1),)
        self._polys[0] = BernoulliPoly(0, coeffs)
        for n in range(1, max_degree + 1):
            coeffs = _integrate_zero_mean(coeffs)
            self._polys[n] = BernoulliPoly(n, coeffs)
        self._float_coeffs = {n: p.float_coeffs for n, p in self._polys.items()}
        logger.debug(f"Built Bernoulli table up to degree {max_degree}")

    def poly(self, n: int) -> BernoulliPoly:
        if n in self._polys:
            return self._polys[n]
        return bernoulli_poly(n)

    def _coeffs(self, n: int) -> np.ndarray:
        if n in self._float_coeffs:
            return self._float_coeffs[n]
        return self.poly(n).float_coeffs

    def periodized_eval(self, n: int, x: Real) -> float:
        """
        B_n({x}); B_1 is discontinuous at the integers and takes the
        two-sided average 0 there. Every other B_n is continuous.

        :param n: Degree
        :param x: Point, float or Fraction
        """
        if n < 0:
            raise ValueError(f"Bernoulli degree must be non-negative, got {n}")
        if isinstance(x, Fraction):
            frac = x - math.floor(x)
            if frac == 0 and n == 1:
                return 0.0
            return float(npoly.polyval(float(frac), self._coeffs(n)))
        frac = x - math.floor(x)
        if frac == 0.0 and n == 1:
            return 0.0
        return float(npoly.polyval(frac, self._coeffs(n)))

    def periodized_eval_array(self, n: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        frac = x - np.floor(x)
        values = npoly.polyval(frac, self._coeffs(n))
        if n == 1:
            values = np.where(frac == 0.0, 0.0, values)
        return values

    def sup_norm(self, n: int, samples: int = 10 ** 4) -> float:
        grid = np.linspace(0.0, 1.0, samples + 1)
        return float(np.max(np.abs(npoly.polyval(grid, self._coeffs(n)))))


DEFAULT_TABLE = BernoulliTable()


def periodized_eval(n: int, x: Real) -> float:
    return DEFAULT_TABLE.periodized_eval(n, x)


def bernoulli_fourier_partial(n: int, x: float, K: int) -> float:
    """
    Symmetric partial sum -sum_{0<|k|<=K} exp(2 pi i k x) / (2 pi i k)^n.

    The k and -k terms are paired so the result is real up to rounding.
    """
    if n < 1:
        raise ValueError(f"Fourier expansion needs n >= 1, got {n}")
    if K < 1:
        raise ValueError(f"Cutoff must be positive, got {K}")
    k = np.arange(1, K + 1, dtype=float)
    positive = np.exp(2j * np.pi * k * x) / (2j * np.pi * k) ** n
    negative = np.exp(-2j * np.pi * k * x) / (-2j * np.pi * k) ** n
    # sum from the smallest terms up
    total = np.sum((positive + negative)[::-1])
    return float(-total.real)
