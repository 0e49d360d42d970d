"""
Asymptotic expansion of the Fourier transform of g times the indicator of a simplex,

    int_{S_d} g(y) e^{-2 pi i y.eta} dy
        ~ sum_V sum_{|J| <= w} alpha(theta, V, J) e^{-2 pi i lambda_V.eta} / prod_k (2 pi i b_k.eta)^{j_k + 1}

for eta in the cone of theta, the product running over the vectors b_k of B_V outside theta.
General integer simplices p + M S_d are pulled back to the standard one.
"""
import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from polytope_em.exceptions import ConeMismatchError, DerivativeOrderError, DimensionError, QuadratureError
from polytope_em.expansion.functionals_mu import MuFunctional, Support, apply_mu_many, mu_support_filter
from polytope_em.geometry.basis_families import BasisFamily, Theta, build_family, classify_frequency, i_multiindex
from polytope_em.geometry.lattice_geometry import IntegerSimplex, as_fractions
from polytope_em.quadrature.gauss_legendre import ORDERS, collapsed_simplex_rule, panels_for_frequency
from polytope_em.utils.reduction import pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

# |xi| tau ||M|| above which the oracle refuses to integrate
OSCILLATION_CAP = 200.0
ORACLE_ROUNDING_FLOOR = 1e-14

Index = Tuple[int, ...]


@dataclass(frozen=True)
class FourierTerm:
    V: Index
    J: Index
    coefficient: float
    lam: Tuple[int, ...]
    # (b_k, j_k + 1) for the basis vectors outside theta
    denominators: Tuple[Tuple[Tuple[int, ...], int], ...]

    def value(self, eta: Sequence[float]) -> complex:
        phase = cmath.exp(-2j * math.pi * sum(l * e for l, e in zip(self.lam, eta)))
        denominator = 1.0 + 0j
        for b, power in self.denominators:
            denominator *= (2j * math.pi * sum(bk * e for bk, e in zip(b, eta))) ** power
        return self.coefficient * phase / denominator


@dataclass(frozen=True)
class FourierExpansion:
    """
    Truncated expansion of order w, valid on the cone of theta after the pullback
    eta = tau M^T xi. For the standard simplex tau = 1, M = Id and p = 0.
    """
    theta: Theta
    w: int
    terms: Tuple[FourierTerm, ...]
    family: BasisFamily
    prefactor: float = 1.0
    tau: Fraction = Fraction(1)
    M: Optional[Tuple[Tuple[int, ...], ...]] = None
    p: Optional[Tuple[int, ...]] = None

    @property
    def d(self) -> int:
        return self.family.d

    def pullback(self, xi: Sequence) -> Tuple[Fraction, ...]:
        """ eta = tau M^T xi, exactly """
        xi = as_fractions(xi)
        if len(xi) != self.d:
            raise DimensionError(f"Frequency {list(xi)} does not have dimension {self.d}")
        if self.M is None:
            return tuple(self.tau * v for v in xi)
        return tuple(self.tau * sum(self.M[r][c] * xi[r] for r in range(self.d)) for c in range(self.d))

    def evaluate(self, xi: Sequence) -> complex:
        eta = self.pullback(xi)
        found = classify_frequency(self.family, eta)
        if found != self.theta:
            raise ConeMismatchError(f"Frequency {list(xi)} lies in the cone of {found.vectors()}, "
                                    f"the expansion was built for {self.theta.vectors()}")
        eta_float = [float(v) for v in eta]
        total = complex(pairwise_sum([t.value(eta_float) for t in self.terms])) if self.terms else 0j
        if self.p is not None:
            shift = float(self.tau * sum(Fraction(pk) * Fraction(x) for pk, x in zip(self.p, as_fractions(xi))))
            total *= cmath.exp(-2j * math.pi * shift)
        return self.prefactor * total


def j_multiindices(I: Index, w: int) -> List[Index]:
    """ All J with J supported on I and |J| <= w """
    ranges = [range(w + 1) if i else range(1) for i in I]
    return [J for J in itertools.product(*ranges) if sum(J) <= w]


def expand_standard(g, theta: Theta, w: int, tol: Optional[float] = None, threads: int = 1) -> FourierExpansion:
    """
    :param g: ScalarField on R^d
    :param theta: the cone the expansion is evaluated on
    :param w: truncation order, |J| <= w
    """
    if w < 0:
        raise ValueError(f"Order must be non-negative, got {w}")
    if theta.d != g.d:
        raise DimensionError(f"Cone of dimension {theta.d} for a field of dimension {g.d}")
    if g.max_order < w + 1 + g.d:
        raise DerivativeOrderError(f"Order {w} needs derivatives up to {w + 1 + g.d}, field allows {g.max_order}")
    family = build_family(g.d)
    pending = []
    for V in family.indices():
        I = i_multiindex(family, V, theta)
        for J in j_multiindices(I, w):
            mu = MuFunctional(V, I, J)
            if mu_support_filter(mu) is Support.NONZERO_POSSIBLE:
                pending.append(mu)
    values = apply_mu_many(pending, g, tol, threads)
    terms = []
    for mu, value in zip(pending, values):
        if value == 0.0:
            continue
        basis = family.basis(mu.V)
        denominators = tuple((b, j + 1) for b, i, j in zip(basis, mu.I, mu.J) if i)
        coefficient = (-1) ** sum(mu.I) * value
        terms.append(FourierTerm(mu.V, mu.J, coefficient, family.lam(mu.V), denominators))
    logger.debug(f"Fourier expansion of order {w} on {theta.vectors()}: {len(terms)} of {len(pending)} terms")
    return FourierExpansion(theta=theta, w=w, terms=tuple(terms), family=family)


def pulled_back_field(simplex: IntegerSimplex, q, tau):
    """ y -> q(tau (p + M y)) """
    tau = Fraction(tau)
    A = [[tau * v for v in row] for row in simplex.M]
    b = [tau * v for v in simplex.p]
    return q.compose_affine(A, b)


def expand_general(simplex: IntegerSimplex, q, tau, theta: Theta, w: int, tol: Optional[float] = None,
                   threads: int = 1) -> FourierExpansion:
    """
    Expansion of int_{tau P} q(x) e^{-2 pi i x.xi} dx for P = p + M S_d.

    theta is the cone of the pulled back frequency M^T xi in the standard family.
    """
    tau = Fraction(tau)
    if tau <= 0:
        raise ValueError(f"Dilation must be positive, got {tau}")
    if q.d != simplex.d:
        raise DimensionError(f"Field of dimension {q.d} on a simplex of dimension {simplex.d}")
    standard = expand_standard(pulled_back_field(simplex, q, tau), theta, w, tol, threads)
    prefactor = float(tau) ** simplex.d * abs(simplex.det)
    return FourierExpansion(theta=theta, w=w, terms=standard.terms, family=standard.family,
                            prefactor=prefactor, tau=tau, M=simplex.M, p=simplex.p)


def cone_of(simplex: IntegerSimplex, xi: Sequence) -> Theta:
    """ theta with M^T xi in its cone """
    xi = as_fractions(xi)
    d = simplex.d
    eta = [sum(simplex.M[r][c] * xi[r] for r in range(d)) for c in range(d)]
    return classify_frequency(build_family(d), eta)


def oracle_ft(simplex: IntegerSimplex, q, tau, xi: Sequence, tol: float = 1e-10) -> complex:
    """
    Direct evaluation of int_{tau P} q(x) e^{-2 pi i x.xi} dx on the collapsed
    cube, with at least ten nodes per oscillation along every axis.
    """
    d = simplex.d
    xi = np.array([float(v) for v in xi])
    if len(xi) != d:
        raise DimensionError(f"Frequency {list(xi)} does not have dimension {d}")
    tau = float(tau)
    M = np.array(simplex.M, dtype=float)
    oscillation = float(np.linalg.norm(xi)) * tau * float(np.linalg.norm(M, 2))
    if oscillation > OSCILLATION_CAP:
        raise ValueError(f"|xi| tau ||M|| = {oscillation:.1f} exceeds the oscillation cap {OSCILLATION_CAP}")
    p = np.array(simplex.p, dtype=float)
    eta = tau * M.T @ xi
    frequency = float(np.abs(eta).sum())
    scale = tau ** d * abs(simplex.det)
    previous = None
    for n in ORDERS:
        y, weights = collapsed_simplex_rule(d, n, panels_for_frequency(frequency, n))
        x = tau * (p + y @ M.T)
        contributions = weights * q.evaluate(x) * np.exp(-2j * np.pi * (x @ xi))
        estimate = scale * complex(pairwise_array_sum(contributions))
        floor = ORACLE_ROUNDING_FLOOR * scale * float(np.abs(contributions).sum())
        if previous is not None and abs(estimate - previous) < max(tol, floor):
            logger.debug(f"Oracle converged at order {n} for xi={list(xi)}")
            return estimate
        previous = estimate
    raise QuadratureError(f"Oracle Fourier transform at xi={list(xi)} did not reach tolerance {tol}")
