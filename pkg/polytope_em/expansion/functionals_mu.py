"""
Integro-differential functionals mu(V, I, J) = T_1 T_2 ... T_d on the standard simplex.

Intermediate functions are kept as finite sums of RestrictedTerm values:

    coeff * int ... int (d^alpha g)(A z + b) dz_pending

where z lists the surviving variables in their original order, the first
n_current of them free and the rest integration slots with affine upper
limits in the variables before them. Every operator of the chain maps such
sums to such sums, so derivatives never touch a numeric closure.
"""
import enum
import logging
from collections import OrderedDict
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from polytope_em.exceptions import DerivativeOrderError, DimensionError, QuadratureError
from polytope_em.quadrature.gauss_legendre import ORDERS, nested_rule
from polytope_em.utils.reduction import ordered_map, pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

FracRow = Tuple[Fraction, ...]
# coefficients over the variables before the slot, then the constant
AffineLimit = Tuple[FracRow, Fraction]


ROUNDING_FLOOR = 1e-14


def default_tol(d: int) -> float:
    return 1e-12 if d <= 2 else 1e-10


class Support(enum.Enum):
    ZERO = 'zero'
    NONZERO_POSSIBLE = 'nonzero-possible'


@dataclass(frozen=True)
class MuFunctional:
    V: Tuple[int, ...]
    I: Tuple[int, ...]
    J: Tuple[int, ...]

    def __post_init__(self):
        d = len(self.V)
        if d == 0 or len(self.I) != d or len(self.J) != d:
            raise DimensionError(f"V, I, J must share a positive length: {self.V}, {self.I}, {self.J}")
        if any(v not in (1, 2) for v in self.V) or any(i not in (0, 1) for i in self.I):
            raise ValueError(f"V must lie in {{1,2}}^d and I in {{0,1}}^d: {self.V}, {self.I}")
        if any(j < 0 for j in self.J):
            raise ValueError(f"Negative derivative order in {self.J}")
        if any(j > 0 and i == 0 for i, j in zip(self.I, self.J)):
            raise ValueError(f"J={self.J} is not supported on I={self.I}")

    @property
    def d(self) -> int:
        return len(self.V)


@dataclass(frozen=True)
class RestrictedTerm:
    coeff: Fraction
    alpha: Tuple[int, ...]
    A: Tuple[FracRow, ...]
    b: FracRow
    n_current: int
    limits: Tuple[AffineLimit, ...]

    @property
    def n_live(self) -> int:
        return len(self.A[0]) if self.A else 0

    def key(self):
        return self.alpha, self.A, self.b, self.n_current, self.limits


def initial_terms(d: int) -> List[RestrictedTerm]:
    identity = tuple(tuple(Fraction(int(r == c)) for c in range(d)) for r in range(d))
    return [RestrictedTerm(Fraction(1), (0,) * d, identity, (Fraction(0),) * d, d, ())]


def merge(terms: Iterable[RestrictedTerm]) -> List[RestrictedTerm]:
    """ Collect equal terms, drop vanishing coefficients; first-seen order is kept """
    merged: Dict[tuple, Fraction] = OrderedDict()
    shapes: Dict[tuple, RestrictedTerm] = {}
    for term in terms:
        key = term.key()
        merged[key] = merged.get(key, Fraction(0)) + term.coeff
        shapes.setdefault(key, term)
    return [replace(shapes[k], coeff=c) for k, c in merged.items() if c != 0]


def restrict(term: RestrictedTerm, position: int, limit: AffineLimit) -> RestrictedTerm:
    """
    Substitute z_position = coeffs . z_{<position} + const and drop the variable.
    A pending slot at `position` disappears with it.
    """
    coeffs, const = limit
    A = []
    b = []
    for row, b_i in zip(term.A, term.b):
        pivot = row[position]
        new_row = [row[k] + pivot * coeffs[k] if k < position else row[k]
                   for k in range(len(row)) if k != position]
        A.append(tuple(new_row))
        b.append(b_i + pivot * const)
    limits = []
    for offset, (slot_coeffs, slot_const) in enumerate(term.limits):
        slot = term.n_current + offset
        if slot == position:
            continue
        if slot < position:
            limits.append((slot_coeffs, slot_const))
            continue
        pivot = slot_coeffs[position]
        new_coeffs = tuple(slot_coeffs[k] + pivot * coeffs[k] if k < position else slot_coeffs[k]
                           for k in range(len(slot_coeffs)) if k != position)
        limits.append((new_coeffs, slot_const + pivot * const))
    n_current = term.n_current - 1 if position < term.n_current else term.n_current
    return RestrictedTerm(term.coeff, term.alpha, tuple(A), tuple(b), n_current, tuple(limits))


def differentiate(term: RestrictedTerm, position: int) -> List[RestrictedTerm]:
    """
    d/dz_position of a term, position a free variable: the chain rule through A,
    plus one boundary term per integration slot whose upper limit moves with z_position.
    """
    if position >= term.n_current:
        raise ValueError(f"Variable {position} is an integration slot, not a free variable")
    out = []
    for i, row in enumerate(term.A):
        if row[position] != 0:
            alpha = term.alpha[:i] + (term.alpha[i] + 1,) + term.alpha[i + 1:]
            out.append(replace(term, coeff=term.coeff * row[position], alpha=alpha))
    for offset, limit in enumerate(term.limits):
        slope = limit[0][position]
        if slope != 0:
            boundary = restrict(term, term.n_current + offset, limit)
            out.append(replace(boundary, coeff=boundary.coeff * slope))
    return out


def apply_T(h: int, v: int, i: int, j: int, terms: Sequence[RestrictedTerm]) -> List[RestrictedTerm]:
    """
    One operator of the chain, acting on the last free variable z_{h-1}:

    (1,0,0): integrate z_{h-1} from 0 to 1 - (z_0 + ... + z_{h-2})
    (2,0,0): zero
    (1,1,j): -(d/dz_{h-1})^j at z_{h-1} = 0
    (2,1,j): +(d/dz_{h-1})^j at z_{h-1} = 1 - (z_0 + ... + z_{h-2})
    """
    if v not in (1, 2) or i not in (0, 1) or j < 0:
        raise ValueError(f"Invalid operator (v, i, j) = ({v}, {i}, {j})")
    if i == 0 and j > 0:
        raise ValueError(f"Operator (v, i, j) = ({v}, {i}, {j}) differentiates without restricting")
    position = h - 1
    for term in terms:
        if term.n_current != h:
            raise DimensionError(f"Level {h} operator applied to a term with {term.n_current} free variables")
    far_face: AffineLimit = (tuple(Fraction(-1) for _ in range(position)), Fraction(1))
    if (v, i) == (2, 0):
        return []
    if (v, i) == (1, 0):
        return [replace(t, n_current=h - 1, limits=(far_face,) + t.limits) for t in terms]
    current = list(terms)
    for _ in range(j):
        current = merge(d_term for t in current for d_term in differentiate(t, position))
    if v == 1:
        zero_face: AffineLimit = (tuple(Fraction(0) for _ in range(position)), Fraction(0))
        out = [restrict(replace(t, coeff=-t.coeff), position, zero_face) for t in current]
    else:
        out = [restrict(t, position, far_face) for t in current]
    return merge(out)


def mu_support_filter(mu: MuFunctional) -> Support:
    """ mu vanishes whenever some level has (v_h, i_h) = (2, 0) """
    if any((v, i) == (2, 0) for v, i in zip(mu.V, mu.I)):
        return Support.ZERO
    return Support.NONZERO_POSSIBLE


def mu_terms(mu: MuFunctional) -> List[RestrictedTerm]:
    """ Apply T_d first, then T_{d-1}, ..., T_1 """
    terms = initial_terms(mu.d)
    for h in range(mu.d, 0, -1):
        terms = apply_T(h, mu.V[h - 1], mu.I[h - 1], mu.J[h - 1], terms)
        logger.debug(f"{mu}: {len(terms)} terms after level {h}")
        if not terms:
            break
    return terms


def _term_values(term: RestrictedTerm, g, n: int) -> Tuple[float, float]:
    """ (value, sum of absolute contributions) of one term at quadrature order n """
    A = np.array(term.A, dtype=float).reshape(len(term.A), term.n_live)
    b = np.array(term.b, dtype=float)
    coeff = float(term.coeff)
    if term.n_live == 0:
        value = coeff * g.eval_partial(term.alpha, b)
        return value, abs(value)
    limits = [(tuple(float(c) for c in coeffs), float(const)) for coeffs, const in term.limits]
    z, w = nested_rule(limits, n)
    contributions = coeff * w * g.eval_partial_array(term.alpha, z @ A.T + b)
    return pairwise_array_sum(contributions), float(np.sum(np.abs(contributions)))


def evaluate_terms(terms: Sequence[RestrictedTerm], g, tol: float) -> float:
    """
    Sum of fully restricted terms; integration slots use Gauss-Legendre with
    order doubling until successive estimates differ by less than tol / slots,
    or by less than the rounding floor of the summed contributions.
    """
    if not terms:
        return 0.0
    slots = max(t.n_live for t in terms)
    if slots == 0:
        return float(pairwise_sum([_term_values(t, g, 1)[0] for t in terms]))
    previous = None
    for n in ORDERS:
        results = [_term_values(t, g, n) for t in terms]
        estimate = float(pairwise_sum([r[0] for r in results]))
        floor = ROUNDING_FLOOR * sum(r[1] for r in results)
        if previous is not None and abs(estimate - previous) < max(tol / slots, floor):
            logger.debug(f"{len(terms)} terms converged at order {n}")
            return estimate
        previous = estimate
    raise QuadratureError(f"Nested quadrature over {slots} slots did not reach tolerance {tol}")


def apply_mu(mu: MuFunctional, g, tol: Optional[float] = None) -> float:
    """
    <mu(V, I, J), g> for a ScalarField g on R^d.

    :param tol: absolute quadrature tolerance, 1e-12 for d <= 2 and 1e-10 for d = 3 by default
    """
    if g.d != mu.d:
        raise DimensionError(f"Field of dimension {g.d} for a functional of dimension {mu.d}")
    if g.max_order < sum(mu.J) + mu.d:
        raise DerivativeOrderError(f"{mu} needs derivatives up to {sum(mu.J) + mu.d}, field allows {g.max_order}")
    if mu_support_filter(mu) is Support.ZERO:
        return 0.0
    tol = default_tol(mu.d) if tol is None else tol
    return evaluate_terms(mu_terms(mu), g, tol)


def apply_mu_many(mus: Sequence[MuFunctional], g, tol: Optional[float] = None, threads: int = 1) -> List[float]:
    """ apply_mu over many functionals, concurrently when threads > 1; order is preserved """
    return ordered_map(lambda mu: apply_mu(mu, g, tol), list(mus), threads)
