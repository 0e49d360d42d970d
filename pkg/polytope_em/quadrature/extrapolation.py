import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sympy import Matrix, Rational

from polytope_em.geometry.lattice_geometry import SimplicialComplex, weighted_sum
from polytope_em.geometry.solid_angles import SolidAngleMethod
from polytope_em.utils.reduction import ordered_map, pairwise_sum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtrapolationRule:
    """
    Weights c_0..c_m, m = w // 2, of sum_j c_j S_{2^j N}. They solve
    sum_j c_j 4^{-kj} = [k == 0] for k = 0..m.
    """
    w: int
    coefficients: Tuple[Fraction, ...]

    @property
    def levels(self) -> int:
        return len(self.coefficients)

    def moments(self) -> List[Fraction]:
        """ sum_j c_j 4^{-kj} for k = 0..m; (1, 0, ..., 0) exactly """
        return [sum((c * Fraction(1, 4 ** (k * j)) for j, c in enumerate(self.coefficients)), Fraction(0))
                for k in range(self.levels)]


@lru_cache(maxsize=None)
def vandermonde_coeffs(w: int) -> ExtrapolationRule:
    if w < 0:
        raise ValueError(f"Order must be non-negative, got {w}")
    m = w // 2 + 1
    system = Matrix(m, m, lambda k, j: Rational(1, 4 ** (k * j)))
    rhs = Matrix([1] + [0] * (m - 1))
    solution = system.LUsolve(rhs)
    coefficients = tuple(Fraction(int(c.p), int(c.q)) for c in solution)
    return ExtrapolationRule(w=w, coefficients=coefficients)


def extrapolated_integral(P: SimplicialComplex, f, N: int, w: int, method: Optional[SolidAngleMethod] = None,
                          threads: int = 1) -> float:
    """
    sum_j c_j S_{2^j N}(f, P), accurate to O(N^{-w-1}) for smooth f.

    :param threads: the levels are independent and run concurrently
    """
    rule = vandermonde_coeffs(w)
    levels = [N * 2 ** j for j in range(rule.levels)]

    def level(n: int) -> float:
        value = weighted_sum(P, f, n, method)
        logger.info(f"S_{n} = {value!r}")
        return value

    sums = ordered_map(level, levels, threads)
    return float(pairwise_sum([float(c) * s for c, s in zip(rule.coefficients, sums)]))


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    S_N: float
    extrapolated: float
    abs_error: float
    local_order: float

    def as_tuple(self) -> tuple:
        return self.N, self.S_N, self.extrapolated, self.abs_error, self.local_order


CSV_COLUMNS = ('N', 'S_N', 'extrapolated', 'abs_error', 'local_order')


def local_orders(Ns: Sequence[int], errors: Sequence[float]) -> List[float]:
    """
    log(err_i / err_{i+1}) / log(N_{i+1} / N_i) per row; NaN on the last row
    and wherever an error vanishes.
    """
    orders = []
    for i in range(len(Ns)):
        if i + 1 == len(Ns) or errors[i] == 0 or errors[i + 1] == 0:
            orders.append(math.nan)
        else:
            orders.append(math.log(errors[i] / errors[i + 1]) / math.log(Ns[i + 1] / Ns[i]))
    return orders


def convergence_table(P: SimplicialComplex, f, Ns: Sequence[int], w: int, reference: Optional[float] = None,
                      method: Optional[SolidAngleMethod] = None, threads: int = 1) -> List[ConvergenceRow]:
    """
    Rows (N, S_N, extrapolated, |extrapolated - reference|, local order).

    Without a reference, extrapolation of order w + 2 from 2 max(Ns) serves as one.
    """
    if reference is None:
        reference = extrapolated_integral(P, f, 2 * max(Ns), w + 2, method, threads)
        logger.info(f"Reference integral {reference!r} from order {w + 2} at N = {2 * max(Ns)}")
    raw = ordered_map(lambda n: weighted_sum(P, f, n, method), list(Ns), threads)
    extrapolated = [extrapolated_integral(P, f, n, w, method, threads) for n in Ns]
    errors = [abs(e - reference) for e in extrapolated]
    orders = local_orders(Ns, errors)
    return [ConvergenceRow(n, s, e, err, order) for n, s, e, err, order in zip(Ns, raw, extrapolated, errors, orders)]


def fit_even_powers(Ns: Sequence[int], values: Sequence[float], reference: float) -> np.ndarray:
    """
    Least-squares coefficients of N^{-1}, N^{-2}, N^{-3}, N^{-4} in values - reference.
    """
    Ns = np.asarray(Ns, dtype=float)
    base = Ns.min()
    # columns in (base / N)^k keep the system well scaled
    design = np.column_stack([(base / Ns) ** k for k in range(1, 5)])
    scaled, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float) - reference, rcond=None)
    return scaled * base ** np.arange(1, 5)
