import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from sympy import Matrix

from polytope_em.exceptions import DimensionError

logger = logging.getLogger(__name__)

MAX_FAMILY_DIMENSION = 6

IntVector = Tuple[int, ...]
Basis = Tuple[IntVector, ...]
Index = Tuple[int, ...]


def _unit(d: int, j: int) -> IntVector:
    return tuple(int(k == j) for k in range(d))


def union_vectors(d: int) -> Tuple[IntVector, ...]:
    """ e_1..e_d followed by e_l - e_k (l < k) in lexicographic order """
    units = [_unit(d, j) for j in range(d)]
    differences = [tuple(a - b for a, b in zip(units[l], units[k]))
                   for l, k in itertools.combinations(range(d), 2)]
    return tuple(units + differences)


def _dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def _rank(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    return Matrix(vectors).rank()


@dataclass(frozen=True)
class Theta:
    """
    Subspace spanned by union vectors, stored as the set of union-vector
    indices it contains. Equality compares the flags only.
    """
    d: int
    flags: FrozenSet[int]
    basis: Tuple[IntVector, ...] = field(default=(), compare=False)

    @classmethod
    def from_flags(cls, d: int, flags: Iterable[int]) -> 'Theta':
        union = union_vectors(d)
        flags = frozenset(flags)
        basis: List[IntVector] = []
        for i in sorted(flags):
            if _rank(basis + [union[i]]) > len(basis):
                basis.append(union[i])
        return cls(d=d, flags=flags, basis=tuple(basis))

    @classmethod
    def span(cls, d: int, generators: Sequence[Sequence[int]]) -> 'Theta':
        """ The smallest closed theta containing the generators """
        generators = [tuple(g) for g in generators if any(g)]
        rank = _rank(generators)
        flags = [i for i, u in enumerate(union_vectors(d)) if _rank(generators + [u]) == rank]
        return cls.from_flags(d, flags)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: Sequence[int]) -> bool:
        return _rank(list(self.basis) + [tuple(v)]) == len(self.basis)

    def is_closed(self) -> bool:
        union = union_vectors(self.d)
        return all((i in self.flags) == self.contains(u) for i, u in enumerate(union))

    def vectors(self) -> List[IntVector]:
        union = union_vectors(self.d)
        return [union[i] for i in sorted(self.flags)]


@dataclass(frozen=True)
class BasisFamily:
    d: int
    bases: Tuple[Basis, ...]
    lambdas: Dict[Index, IntVector] = field(compare=False, repr=False)

    @property
    def union(self) -> Tuple[IntVector, ...]:
        return union_vectors(self.d)

    def indices(self) -> List[Index]:
        return list(itertools.product((1, 2), repeat=self.d))

    def basis_index(self, V: Index) -> int:
        self._check_index(V)
        return sum((v - 1) << (h - 1) for h, v in enumerate(V) if h >= 1)

    def basis(self, V: Index) -> Basis:
        return self.bases[self.basis_index(V)]

    def lam(self, V: Index) -> IntVector:
        self._check_index(V)
        return self.lambdas[tuple(V)]

    def d_matrix(self, V: Index) -> Tuple[IntVector, ...]:
        """ D_V with the basis vectors of B_V as columns """
        basis = self.basis(V)
        return tuple(tuple(b[r] for b in basis) for r in range(self.d))

    def _check_index(self, V: Index):
        if len(V) != self.d or any(v not in (1, 2) for v in V):
            raise DimensionError(f"Invalid index {V} for a dimension {self.d} family")


def build_family(d: int) -> BasisFamily:
    """
    Recursive family of 2^{d-1} unimodular bases of Z^d and the vectors lambda_V.

    Bases of the second half append -(b'.1) to every vector of the
    lower-dimensional basis; both halves close with e_d.
    """
    if not 1 <= d <= MAX_FAMILY_DIMENSION:
        raise DimensionError(f"Basis families are built for 1 <= d <= {MAX_FAMILY_DIMENSION}, got {d}")
    bases: List[Basis] = [((1,),)]
    lambdas: Dict[Index, IntVector] = {(1,): (0,), (2,): (1,)}
    for h in range(2, d + 1):
        e_h = _unit(h, h - 1)
        first = [tuple(b + (0,) for b in basis) + (e_h,) for basis in bases]
        second = [tuple(b + (-sum(b),) for b in basis) + (e_h,) for basis in bases]
        bases = first + second
        lifted: Dict[Index, IntVector] = {}
        for V, lam in lambdas.items():
            lifted[V + (1,)] = lam + (0,)
            lifted[V + (2,)] = lam + (1 - sum(lam),)
        lambdas = lifted
    logger.debug(f"Built basis family of dimension {d} with {len(bases)} bases")
    return BasisFamily(d=d, bases=tuple(bases), lambdas=lambdas)


def classify_frequency(family: BasisFamily, xi: Sequence) -> Theta:
    """ The theta whose cone holds xi: exactly the union vectors orthogonal to xi """
    if len(xi) != family.d:
        raise DimensionError(f"Frequency {xi} does not have dimension {family.d}")
    xi = [Fraction(v) for v in xi]
    flags = [i for i, u in enumerate(family.union) if _dot(u, xi) == 0]
    return Theta.from_flags(family.d, flags)


def in_cone(family: BasisFamily, theta: Theta, xi: Sequence) -> bool:
    """ Definitional test: xi is orthogonal to the vectors of theta and to no other union vector """
    xi = [Fraction(v) for v in xi]
    return all((_dot(u, xi) == 0) == (i in theta.flags) for i, u in enumerate(family.union))


def i_multiindex(family: BasisFamily, V: Index, theta: Theta) -> Index:
    """ i_k = 0 iff the k-th vector of B_V lies in theta """
    return tuple(0 if theta.contains(b) else 1 for b in family.basis(V))


def delta_membership(I: Index, L: Sequence[Sequence[int]], n: Sequence[int]) -> bool:
    """ n is in Delta(I, L) iff (L n)_k = 0 exactly where i_k = 0 """
    Ln = [_dot(row, n) for row in L]
    return all((value == 0) == (i == 0) for value, i in zip(Ln, I))
