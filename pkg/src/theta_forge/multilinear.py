"""Compound matrices, cofactor tensors, and the box / star products.

A level-k compound matrix is a square array whose rows and columns are
labeled by the ordered k-subsets of {1..g} in lexicographic order.  Level 0
is a single scalar, level 1 an ordinary g-by-g matrix.  Entries are complex
floats at the main interface; every operation also accepts object-dtype
arrays of exact scalars (ints, Fractions), in which case all arithmetic is
carried out exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .indexkit import (
    IndexSet,
    binomial,
    box_table,
    perm_sign,
    subset_rank,
    subset_tuples,
)


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _det_exact(a: np.ndarray):
    """Exact determinant by Gaussian elimination over Fractions."""
    n = a.shape[0]
    if n == 0:
        return Fraction(1)
    rows = [[Fraction(x) for x in row] for row in a.tolist()]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / Fraction(rows[col][col])
        for r in range(col + 1, n):
            factor = rows[r][col] * inv
            if factor:
                for c in range(col, n):
                    rows[r][c] -= factor * rows[col][c]
    return det


def _det(a: np.ndarray):
    """Determinant dispatching on dtype: exact for object arrays, LAPACK otherwise."""
    n = a.shape[0]
    if n == 0:
        return Fraction(1) if _is_exact(a) else complex(1.0)
    if _is_exact(a):
        return _det_exact(a)
    if n == 1:
        return complex(a[0, 0])
    if n == 2:
        return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    if n == 3:
        return complex(
            a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
        )
    return complex(np.linalg.det(a))


def _empty(side: int, exact: bool) -> np.ndarray:
    if exact:
        arr = np.empty((side, side), dtype=object)
        arr[:] = 0
        return arr
    return np.zeros((side, side), dtype=complex)


@dataclass(frozen=True)
class CompoundMatrix:
    """Square array indexed by the ordered ``level``-subsets of {1..ambient}."""

    ambient: int
    level: int
    entries: np.ndarray

    def __post_init__(self):
        if not 0 <= self.level <= self.ambient:
            raise DomainError(f"level {self.level} outside 0..{self.ambient}")
        side = binomial(self.ambient, self.level)
        arr = np.asarray(self.entries)
        if arr.shape != (side, side):
            raise DomainError(
                f"level-{self.level} compound at g={self.ambient} needs shape "
                f"({side}, {side}), got {arr.shape}"
            )
        if arr.dtype != object:
            arr = arr.astype(complex)
        object.__setattr__(self, "entries", arr)

    @property
    def side(self) -> int:
        return self.entries.shape[0]

    def labels(self) -> tuple[tuple[int, ...], ...]:
        return subset_tuples(self.ambient, self.level)

    def entry(self, I: IndexSet, J: IndexSet):
        rank = subset_rank(self.ambient, self.level)
        return self.entries[rank[tuple(I)], rank[tuple(J)]]

    def scalar(self):
        if self.level not in (0, self.ambient):
            raise DomainError("scalar() only makes sense at level 0 or g")
        return self.entries[0, 0]

    def _check_compatible(self, other: "CompoundMatrix"):
        if self.ambient != other.ambient or self.level != other.level:
            raise DomainError("compound matrices differ in ambient or level")

    def __add__(self, other):
        self._check_compatible(other)
        return CompoundMatrix(self.ambient, self.level, self.entries + other.entries)

    def __sub__(self, other):
        self._check_compatible(other)
        return CompoundMatrix(self.ambient, self.level, self.entries - other.entries)

    def __neg__(self):
        return CompoundMatrix(self.ambient, self.level, -self.entries)

    def scale(self, c) -> "CompoundMatrix":
        return CompoundMatrix(self.ambient, self.level, self.entries * c)

    def max_abs(self) -> float:
        return float(max((abs(complex(x)) for x in self.entries.flat), default=0.0))


def scalar_compound(g: int, value) -> CompoundMatrix:
    """The level-0 compound holding a single scalar."""
    if isinstance(value, (int, Fraction)):
        arr = np.empty((1, 1), dtype=object)
        arr[0, 0] = value
    else:
        arr = np.array([[complex(value)]], dtype=complex)
    return CompoundMatrix(g, 0, arr)


def identity_compound(g: int, level: int, exact: bool = False) -> CompoundMatrix:
    side = binomial(g, level)
    if exact:
        arr = _empty(side, True)
        for i in range(side):
            arr[i, i] = 1
    else:
        arr = np.eye(side, dtype=complex)
    return CompoundMatrix(g, level, arr)


def zero_compound(g: int, level: int, exact: bool = False) -> CompoundMatrix:
    return CompoundMatrix(g, level, _empty(binomial(g, level), exact))


def from_matrix(M: np.ndarray) -> CompoundMatrix:
    """Wrap an ordinary g-by-g matrix as a level-1 compound."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("expected a square matrix")
    return CompoundMatrix(M.shape[0], 1, M)


def submatrix_det(M: np.ndarray, I: IndexSet, J: IndexSet):
    """Determinant of the submatrix of M with rows I and columns J."""
    if len(I) != len(J):
        raise DomainError(f"|I|={len(I)} and |J|={len(J)} differ")
    M = np.asarray(M)
    rows = [i - 1 for i in I]
    cols = [j - 1 for j in J]
    return _det(M[np.ix_(rows, cols)])


def _minor(M: np.ndarray, rows: tuple[int, ...], cols: tuple[int, ...]):
    return _det(M[np.ix_([r - 1 for r in rows], [c - 1 for c in cols])])


def compound(M: np.ndarray, p: int) -> CompoundMatrix:
    """The level-p compound of M: all p-by-p minors in canonical order."""
    M = np.asarray(M)
    g = M.shape[0]
    if not 1 <= p <= g:
        raise DomainError(f"compound level p={p} outside 1..{g}")
    subs = subset_tuples(g, p)
    out = _empty(len(subs), _is_exact(M))
    for a, I in enumerate(subs):
        for b, J in enumerate(subs):
            out[a, b] = _minor(M, I, J)
    return CompoundMatrix(g, p, out)


def cofactor_tensor(M: np.ndarray, k: int) -> CompoundMatrix:
    """Signed complementary minors of order g-k, indexed at level k.

    Level 0 holds det(M); the transpose of the level-1 tensor is the
    classical adjugate, so ``M @ cofactor_tensor(M, 1).entries.T`` equals
    det(M) times the identity.
    """
    M = np.asarray(M)
    g = M.shape[0]
    if not 0 <= k < g:
        raise DomainError(f"cofactor level k={k} outside 0..{g - 1}")
    if k == 0:
        return scalar_compound(g, _det(M))
    subs = subset_tuples(g, k)
    full = tuple(range(1, g + 1))
    comps = {I: tuple(i for i in full if i not in set(I)) for I in subs}
    out = _empty(len(subs), _is_exact(M))
    for a, I in enumerate(subs):
        for b, J in enumerate(subs):
            sgn = -1 if (sum(I) + sum(J)) % 2 else 1
            out[a, b] = sgn * _minor(M, comps[I], comps[J])
    return CompoundMatrix(g, k, out)


def box_product(A: CompoundMatrix, B: CompoundMatrix) -> CompoundMatrix:
    """The symmetrized minor-mixing product taking levels (p, q) to p + q.

    Includes the 1 / C(p+q, p) normalization, so the repeated box power of a
    level-1 matrix reproduces its compound of the same order exactly.
    """
    if A.ambient != B.ambient:
        raise DomainError("ambient sizes differ")
    g = A.ambient
    p, q = A.level, B.level
    if p + q > g:
        raise DomainError(f"levels {p}+{q} exceed ambient {g}")
    if p == 0:
        return B.scale(A.scalar())
    if q == 0:
        return A.scale(B.scalar())
    exact = _is_exact(A.entries) and _is_exact(B.entries)
    table = box_table(g, p, q)
    side = binomial(g, p + q)
    out = _empty(side, exact)
    Ae, Be = A.entries, B.entries
    norm = Fraction(1, binomial(p + q, p)) if exact else 1.0 / binomial(p + q, p)
    for h in range(side):
        row = table[h]
        for kk in range(side):
            acc = 0
            for ia, ja, ib, jb, sgn in row[kk]:
                term = Ae[ia, ja] * Be[ib, jb]
                acc = acc + (term if sgn > 0 else -term)
            out[h, kk] = acc * norm
    return CompoundMatrix(g, p + q, out)


def box_many(factors) -> CompoundMatrix:
    """Left fold of the box product over a nonempty list of factors."""
    factors = list(factors)
    if not factors:
        raise DomainError("box_many needs at least one factor")
    acc = factors[0]
    for f in factors[1:]:
        acc = box_product(acc, f)
    return acc


def box_power(A: CompoundMatrix, k: int) -> CompoundMatrix:
    """k-fold box product of A with itself; k = 0 gives the scalar 1."""
    if k == 0:
        one = Fraction(1) if _is_exact(A.entries) else 1.0
        return scalar_compound(A.ambient, one)
    return box_many([A] * k)


def hodge_dual(X: CompoundMatrix) -> CompoundMatrix:
    """Complementary-index twist: entry (I, J) becomes (-1)^{I+J} X[I^c, J^c]."""
    g, k = X.ambient, X.level
    dual_level = g - k
    subs = subset_tuples(g, dual_level)
    rank_src = subset_rank(g, k)
    full = tuple(range(1, g + 1))
    out = _empty(len(subs), _is_exact(X.entries))
    comp = {I: rank_src[tuple(i for i in full if i not in set(I))] for I in subs}
    for a, I in enumerate(subs):
        for b, J in enumerate(subs):
            sgn = -1 if (sum(I) + sum(J)) % 2 else 1
            out[a, b] = sgn * X.entries[comp[I], comp[J]]
    return CompoundMatrix(g, dual_level, out)


def star_product(*factors: CompoundMatrix) -> CompoundMatrix:
    """Complementary-index companion of the box product.

    The box product of all factors (total level k) is formed first, then
    re-indexed by complements with the (-1)^{I+J} twist, landing at level
    g - k.  The star of g - k copies of a level-1 matrix equals its
    cofactor tensor of the complementary order.
    """
    if not factors:
        raise DomainError("star_product needs at least one factor")
    g = factors[0].ambient
    total = sum(f.level for f in factors)
    if total > g:
        raise DomainError(f"total level {total} exceeds ambient {g}")
    return hodge_dual(box_many(factors))


def wedge_coordinates(vectors) -> np.ndarray:
    """Coordinates of the wedge of k vectors in the complementary-index basis.

    Coordinate J (a (g-k)-subset) is the sign of the permutation (J, J^c)
    times the maximal minor of the row stack drawn from columns J^c.
    """
    A = np.asarray(vectors)
    if A.ndim != 2:
        raise DomainError("expected a stack of row vectors")
    k, g = A.shape
    if k > g:
        raise DomainError(f"cannot wedge {k} vectors in dimension {g}")
    exact = _is_exact(A)
    subs = subset_tuples(g, g - k)
    full = tuple(range(1, g + 1))
    coords = np.empty(len(subs), dtype=object if exact else complex)
    for idx, J in enumerate(subs):
        Jc = tuple(i for i in full if i not in set(J))
        sgn = perm_sign(J + Jc)
        minor = _det(A[:, [c - 1 for c in Jc]]) if k else (Fraction(1) if exact else 1.0)
        coords[idx] = sgn * minor
    return coords


def wedge_outer(vectors) -> CompoundMatrix:
    """Outer product (no conjugation) of the wedge of k vectors with itself.

    Equals k! times the star product of the rank-one matrices v_i v_i^T.
    Linearly dependent vectors give the zero matrix.
    """
    A = np.asarray(vectors)
    if A.ndim != 2:
        raise DomainError("expected a 2-d stack of row vectors")
    k, g = A.shape
    if k > g:
        raise DomainError(f"cannot wedge {k} vectors in dimension {g}")
    w = wedge_coordinates(A)
    out = np.outer(w, w)
    # mirror the upper triangle so the result is symmetric bit-for-bit
    out = np.triu(out) + np.triu(out, 1).T
    return CompoundMatrix(g, g - k, out)
