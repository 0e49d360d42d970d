import itertools
import logging
from typing import List, Sequence, Tuple

from sympy import Matrix

from polytope_em.exceptions import CosetError, DimensionError, SingularMatrixError

logger = logging.getLogger(__name__)

IntMatrix = Tuple[Tuple[int, ...], ...]
IntVector = Tuple[int, ...]


def as_int_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    matrix = tuple(tuple(int(v) for v in row) for row in rows)
    if not matrix or any(len(row) != len(matrix[0]) for row in matrix):
        raise DimensionError(f"Ragged or empty matrix: {rows}")
    return matrix


def _extgcd(a: int, b: int) -> Tuple[int, int, int]:
    """ Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0 """
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _combine_columns(A: Matrix, V: Matrix, row: int, p: int, q: int):
    """ Unimodular column operation on (p, q) leaving A[row, q] = 0 """
    a, b = int(A[row, p]), int(A[row, q])
    if b == 0:
        return
    g, x, y = _extgcd(a, b)
    D = Matrix([[x, -b // g],
                [y, a // g]])
    for M in (A, V):
        X = Matrix.hstack(M.col(p), M.col(q)) * D
        M[:, p] = X.col(0)
        M[:, q] = X.col(1)


def column_echelon(rows: Sequence[Sequence[int]]) -> Tuple[Matrix, Matrix, List[int]]:
    """
    Integer column echelon form.

    :param rows: r x c integer matrix A
    :return: (E, V, pivot_rows) with A V = E, V unimodular, E lower echelon with
        positive pivots; the first len(pivot_rows) columns of E are nonzero.
    """
    A = Matrix(rows)
    n_rows, n_cols = A.shape
    V = Matrix.eye(n_cols)
    pivot_rows = []
    col = 0
    for row in range(n_rows):
        if col >= n_cols:
            break
        for other in range(col + 1, n_cols):
            _combine_columns(A, V, row, col, other)
        if A[row, col] == 0:
            continue
        if A[row, col] < 0:
            A[:, col] = -A.col(col)
            V[:, col] = -V.col(col)
        pivot_rows.append(row)
        col += 1
    return A, V, pivot_rows


def hnf(L: Sequence[Sequence[int]]) -> Tuple[IntMatrix, IntMatrix]:
    """
    Column Hermite normal form L = H U.

    H is lower triangular with positive diagonal and 0 <= h_jk < h_jj for k < j;
    U is unimodular.
    """
    L = as_int_matrix(L)
    d = len(L)
    if any(len(row) != d for row in L):
        raise DimensionError(f"HNF needs a square matrix, got {len(L)}x{len(L[0])}")
    if Matrix(L).det() == 0:
        raise SingularMatrixError(f"Singular matrix {L}")
    H, V, pivots = column_echelon(L)
    for i in range(d):
        for k in range(i):
            q = H[i, k] // H[i, i]
            if q:
                H[:, k] = H.col(k) - q * H.col(i)
                V[:, k] = V.col(k) - q * V.col(i)
    U = V.inv()
    assert H * U == Matrix(L)
    return as_int_matrix(H.tolist()), as_int_matrix(U.tolist())


def integer_kernel(rows: Sequence[Sequence[int]], n_cols: int) -> List[IntVector]:
    """
    Z-basis of {n in Z^c : A n = 0}.

    :param rows: r x c integer matrix, r may be 0
    :param n_cols: c, needed when rows is empty
    """
    if not rows:
        return [tuple(int(i == j) for j in range(n_cols)) for i in range(n_cols)]
    E, V, pivots = column_echelon(rows)
    rank = len(pivots)
    return [tuple(int(v) for v in V.col(j)) for j in range(rank, n_cols)]


def k_diagonal(H: IntMatrix) -> IntVector:
    """ k_j = prod_{s >= j} h_ss """
    d = len(H)
    return tuple(_prod(H[s][s] for s in range(j, d)) for j in range(d))


def _prod(values) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def cosets(H: IntMatrix, k: IntVector) -> List[IntVector]:
    """
    Representatives of H Z^d / K Z^d, K = diag(k), reduced into [0, k_s).
    """
    d = len(H)
    seen = set()
    for m in itertools.product(*(range(ks) for ks in k)):
        v = tuple(sum(H[r][c] * m[c] for c in range(d)) % k[r] for r in range(d))
        seen.add(v)
    expected = _prod(k) // abs(int(Matrix(H).det()))
    if len(seen) != expected:
        raise CosetError(f"Found {len(seen)} cosets of K Z^d in H Z^d, expected {expected}")
    logger.debug(f"{expected} cosets for H={H}, k={k}")
    return sorted(seen)
