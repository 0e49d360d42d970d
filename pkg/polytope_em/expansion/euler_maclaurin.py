"""
Euler-MacLaurin expansions of solid-angle weighted lattice sums

    sum_n omega_{tau P}(x + n) q(x + n)
        = |det M| sum_V sum_I sum_{J <= I, |J| <= w} tau^{d - |I| - |J|}
              <mu(V, I, J), q_{tau, M}> B_{J + I, (M D_V)^T}(x - tau (p + M lambda_V)) + R

for an integer simplex P = p + M S_d, with q_{tau, M}(y) = q(tau (p + M y)).
"""
import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from polytope_em.bernoulli.bernoulli_1d import DEFAULT_TABLE
from polytope_em.bernoulli.multivariate_bernoulli import mv_bernoulli
from polytope_em.exceptions import DerivativeOrderError, DimensionError, ParityError
from polytope_em.expansion.fourier_simplex import j_multiindices, pulled_back_field
from polytope_em.expansion.functionals_mu import MuFunctional, Support, apply_mu_many, mu_support_filter
from polytope_em.geometry.basis_families import BasisFamily, build_family
from polytope_em.geometry.lattice_geometry import IntegerSimplex, SimplicialComplex, as_fractions
from polytope_em.geometry.solid_angles import SolidAngleMethod
from polytope_em.quadrature.gauss_legendre import integrate_interval
from polytope_em.utils.reduction import pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

MAX_W_BY_DIM = {1: 14, 2: 8, 3: 6}
PARITY_TOL = 1e-10
INTEGRAL_TOL = 1e-13

Index = Tuple[int, ...]


@dataclass(frozen=True)
class ExpansionTerm:
    V: Index
    I: Index
    J: Index
    tau_power: int
    coefficient: float
    bernoulli: float
    value: float


@dataclass
class ExpansionReport:
    main_terms: List[ExpansionTerm]
    total: float
    lhs_bruteforce: float
    residual: float
    w: int
    remainder_estimate: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            'w': self.w,
            'total': self.total,
            'lhs_bruteforce': self.lhs_bruteforce,
            'residual': self.residual,
            'remainder_estimate': self.remainder_estimate,
            'main_terms': [asdict(t) for t in self.main_terms],
            **self.metadata,
        }


def _report(terms: List[ExpansionTerm], lhs: float, w: int, remainder: Optional[float] = None) -> ExpansionReport:
    total = float(pairwise_sum([t.value for t in terms]))
    return ExpansionReport(main_terms=terms, total=total, lhs_bruteforce=lhs, residual=lhs - total, w=w,
                           remainder_estimate=remainder)


def mordell_expand_1d(q, a, b, x, w: int, tol: float = INTEGRAL_TOL) -> ExpansionReport:
    """
    sum_n omega_{[a, b]}(x + n) q(x + n)
        = int_a^b q + sum_{j <= w} (q^(j)(b) B_{j+1}(x - b) - q^(j)(a) B_{j+1}(x - a)) + R,

    R = -int_a^b q^(w+1)(y) B_{w+1}(x - y) dy, reported as remainder_estimate.
    Endpoint terms are labelled V = (1,) for a and V = (2,) for b.
    """
    if q.d != 1:
        raise DimensionError(f"The interval expansion needs a field of dimension 1, got {q.d}")
    a, b, x = Fraction(a), Fraction(b), Fraction(x)
    if not a < b:
        raise ValueError(f"Need a < b, got [{a}, {b}]")
    if q.max_order < w + 1:
        raise DerivativeOrderError(f"Order {w} needs derivatives up to {w + 1}, field allows {q.max_order}")

    points, weights = [], []
    for n in range(math.ceil(a - x), math.floor(b - x) + 1):
        point = x + n
        points.append(float(point))
        weights.append(0.5 if point in (a, b) else 1.0)
    lhs = pairwise_array_sum(np.array(weights) * q.evaluate(np.array(points).reshape(-1, 1))) if points else 0.0

    integral = integrate_interval(lambda t: q.evaluate(t[:, None]), float(a), float(b), tol)
    terms = [ExpansionTerm((1,), (0,), (0,), 0, integral, 1.0, integral)]
    for j in range(w + 1):
        for V, end, sign in (((1,), a, -1.0), ((2,), b, 1.0)):
            coefficient = sign * q.eval_partial((j,), [float(end)])
            factor = DEFAULT_TABLE.periodized_eval(j + 1, x - end)
            terms.append(ExpansionTerm(V, (1,), (j,), 0, coefficient, factor, coefficient * factor))

    breakpoints = [float(x + n) for n in range(math.floor(a - x), math.ceil(b - x) + 1)]
    remainder = -integrate_interval(
        lambda t: q.eval_partial_array((w + 1,), t[:, None]) * DEFAULT_TABLE.periodized_eval_array(w + 1, float(x) - t),
        float(a), float(b), tol, breakpoints)
    return _report(terms, lhs, w, remainder)


def _check_order(d: int, q, w: int):
    if d not in MAX_W_BY_DIM:
        raise DimensionError(f"Expansions are available for d <= 3, got {d}")
    if not 0 <= w <= MAX_W_BY_DIM[d]:
        raise ValueError(f"Order w must lie in [0, {MAX_W_BY_DIM[d]}] for d = {d}, got {w}")
    if q.max_order < w + 1 + d:
        raise DerivativeOrderError(f"Order {w} needs derivatives up to {w + 1 + d}, field allows {q.max_order}")


def _lattice_matrix(simplex: IntegerSimplex, family: BasisFamily, V: Index) -> Tuple[Tuple[int, ...], ...]:
    """ (M D_V)^T """
    D = family.d_matrix(V)
    d = simplex.d
    MD = [[sum(simplex.M[r][k] * D[k][c] for k in range(d)) for c in range(d)] for r in range(d)]
    return tuple(tuple(MD[r][c] for r in range(d)) for c in range(d))


def _functionals(d: int, w: int, orders: Optional[Sequence[int]] = None) -> List[MuFunctional]:
    """ Every (V, I, J) with J supported on I and |J| <= w that the support filter keeps """
    family = build_family(d)
    out = []
    for V in family.indices():
        for I in itertools.product((0, 1), repeat=d):
            for J in j_multiindices(I, w):
                if orders is not None and sum(I) + sum(J) not in orders:
                    continue
                mu = MuFunctional(V, I, J)
                if mu_support_filter(mu) is Support.NONZERO_POSSIBLE:
                    out.append(mu)
    return out


def _bernoulli_factor(simplex: IntegerSimplex, family: BasisFamily, mu: MuFunctional, point: Sequence[Fraction],
                      backend: str) -> float:
    JI = tuple(j + i for j, i in zip(mu.J, mu.I))
    # B is Z^d periodic
    reduced = [v - math.floor(v) for v in point]
    return mv_bernoulli(JI, _lattice_matrix(simplex, family, mu.V)).evaluate(reduced, backend=backend)


def expand_main(simplex: IntegerSimplex, q, tau, x: Sequence, w: int, method: Optional[SolidAngleMethod] = None,
                backend: str = 'hnf', tol: Optional[float] = None, threads: int = 1) -> ExpansionReport:
    """
    Expansion of order w of the weighted sum over x + Z^d in tau P, with the
    brute-force lattice sum as left-hand side.

    :param tau: positive dilation, int, float or Fraction
    :param x: lattice shift
    :param backend: evaluation backend of the Bernoulli factors
    """
    d = simplex.d
    _check_order(d, q, w)
    if q.d != d:
        raise DimensionError(f"Field of dimension {q.d} on a simplex of dimension {d}")
    tau = Fraction(tau)
    if tau <= 0:
        raise ValueError(f"Dilation must be positive, got {tau}")
    x = as_fractions(x)
    if len(x) != d:
        raise DimensionError(f"Shift {list(x)} does not have dimension {d}")

    family = build_family(d)
    functionals = _functionals(d, w)
    coefficients = apply_mu_many(functionals, pulled_back_field(simplex, q, tau), tol, threads)
    det = abs(simplex.det)
    terms = []
    for mu, coefficient in zip(functionals, coefficients):
        if coefficient == 0.0:
            continue
        lam = family.lam(mu.V)
        point = [x[r] - tau * (simplex.p[r] + sum(simplex.M[r][c] * lam[c] for c in range(d))) for r in range(d)]
        factor = _bernoulli_factor(simplex, family, mu, point, backend)
        power = d - sum(mu.I) - sum(mu.J)
        value = det * float(tau ** power) * coefficient * factor
        terms.append(ExpansionTerm(mu.V, mu.I, mu.J, power, coefficient, factor, value))
    logger.debug(f"Expansion of order {w}: {len(terms)} nonzero terms of {len(functionals)} functionals")

    lattice = simplex.lattice_points(tau, x, method)
    lhs = pairwise_array_sum(lattice.weights * q.evaluate(lattice.points)) if len(lattice) else 0.0
    return _report(terms, lhs, w)


def expand_euler_maclaurin(simplex: IntegerSimplex, q, tau: int, w: int, method: Optional[SolidAngleMethod] = None,
                           backend: str = 'hnf', tol: Optional[float] = None, threads: int = 1) -> ExpansionReport:
    """ x = 0 and integer tau: every Bernoulli factor is taken at the origin """
    if int(tau) != tau or tau < 1:
        raise ValueError(f"The lattice-point expansion needs a positive integer dilation, got {tau}")
    return expand_main(simplex, q, int(tau), (0,) * simplex.d, w, method, backend, tol, threads)


def expansion_partial_sums(simplex: IntegerSimplex, q, tau, x: Sequence, w_max: int,
                           method: Optional[SolidAngleMethod] = None, backend: str = 'hnf',
                           tol: Optional[float] = None, threads: int = 1) -> List[float]:
    """ Totals of the expansion truncated at w = 0..w_max, from one set of coefficients """
    report = expand_main(simplex, q, tau, x, w_max, method, backend, tol, threads)
    return [float(pairwise_sum([t.value for t in report.main_terms if sum(t.J) <= w]))
            for w in range(w_max + 1)]


def _check_parity(simplex: IntegerSimplex, family: BasisFamily, w: int, backend: str):
    odd = [s for s in range(1, w + 1) if s % 2]
    for V in family.indices():
        for I in itertools.product((0, 1), repeat=simplex.d):
            for J in j_multiindices(I, w):
                if sum(I) + sum(J) not in odd:
                    continue
                factor = _bernoulli_factor(simplex, family, MuFunctional(V, I, J), (Fraction(0),) * simplex.d,
                                           backend)
                if abs(factor) > PARITY_TOL:
                    raise ParityError(f"Bernoulli factor of order {sum(I) + sum(J)} at the origin is {factor:.3e} "
                                      f"for V={V}, I={I}, J={J}")


def gamma_coefficients(simplex: IntegerSimplex, f, w: int, backend: str = 'hnf', tol: Optional[float] = None,
                       threads: int = 1) -> List[float]:
    """
    gamma_1..gamma_{w // 2} of S_N(f, P) = int_P f + sum_k gamma_k N^{-2k} + O(N^{-w-1}).

    The odd-order Bernoulli factors at the origin are checked to vanish.
    """
    d = simplex.d
    _check_order(d, f, w)
    family = build_family(d)
    _check_parity(simplex, family, w, backend)
    K = w // 2
    if K == 0:
        return []
    functionals = _functionals(d, w, orders=[2 * k for k in range(1, K + 1)])
    coefficients = apply_mu_many(functionals, pulled_back_field(simplex, f, 1), tol, threads)
    blocks: List[List[float]] = [[] for _ in range(K)]
    origin = (Fraction(0),) * d
    for mu, coefficient in zip(functionals, coefficients):
        if coefficient == 0.0:
            continue
        factor = _bernoulli_factor(simplex, family, mu, origin, backend)
        blocks[(sum(mu.I) + sum(mu.J)) // 2 - 1].append(coefficient * factor)
    det = abs(simplex.det)
    gammas = [det * float(pairwise_sum(block)) for block in blocks]
    logger.debug(f"gamma coefficients of order {w}: {gammas}")
    return gammas


def gamma_coefficients_complex(P: SimplicialComplex, f, w: int, backend: str = 'hnf', tol: Optional[float] = None,
                               threads: int = 1) -> List[float]:
    """ Sum over the simplices of P """
    per_simplex = [gamma_coefficients(s, f, w, backend, tol, threads) for s in P.simplices]
    return [float(pairwise_sum(values)) for values in zip(*per_simplex)]


def classical_em_quadrature_1d(f, N: int, w: int) -> float:
    """
    Composite trapezoid rule on [0, 1] with the Euler-MacLaurin corrections
    B_{2j}(0) N^{-2j} (f^(2j-1)(1) - f^(2j-1)(0)), 1 <= j <= w / 2, subtracted.
    """
    if f.d != 1:
        raise DimensionError(f"Need a field of dimension 1, got {f.d}")
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    nodes = np.arange(N + 1, dtype=float) / N
    weights = np.ones(N + 1)
    weights[0] = weights[-1] = 0.5
    trapezoid = pairwise_array_sum(weights * f.evaluate(nodes[:, None])) / N
    corrections = []
    for j in range(1, w // 2 + 1):
        jump = f.eval_partial((2 * j - 1,), [1.0]) - f.eval_partial((2 * j - 1,), [0.0])
        corrections.append(float(DEFAULT_TABLE.poly(2 * j).coeffs[0]) * jump / N ** (2 * j))
    return trapezoid - float(pairwise_sum(corrections))
