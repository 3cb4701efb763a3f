"""Ordered index subsets of {1..g} and the permutation signs attached to them.

Everything downstream (compound matrices, the box and star products, the
wedge coordinates) is indexed by increasingly ordered subsets of a fixed
ambient set {1, ..., g}.  The canonical ordering of all subsets of a given
cardinality is lexicographic; compound-matrix rows and columns always use
that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .errors import DomainError


@dataclass(frozen=True, order=True)
class IndexSet:
    """A strictly increasing tuple of indices drawn from {1, ..., ambient}."""

    elements: tuple[int, ...]
    ambient: int

    def __post_init__(self):
        elems = tuple(int(e) for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if any(e < 1 or e > self.ambient for e in elems):
            raise DomainError(f"indices {elems} out of range 1..{self.ambient}")
        if any(a >= b for a, b in zip(elems, elems[1:])):
            raise DomainError(f"indices {elems} not strictly increasing")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, i):
        return i in self.elements

    def complement(self) -> "IndexSet":
        """The remaining indices of the ambient set, in increasing order."""
        inside = set(self.elements)
        rest = tuple(i for i in range(1, self.ambient + 1) if i not in inside)
        return IndexSet(rest, self.ambient)

    def index_sum(self) -> int:
        return sum(self.elements)


def enumerate_subsets(g: int, k: int) -> list[IndexSet]:
    """All C(g, k) increasingly ordered k-subsets of {1..g}, lexicographic."""
    if k < 0 or k > g:
        raise DomainError(f"cardinality k={k} outside 0..{g}")
    return [IndexSet(c, g) for c in itertools.combinations(range(1, g + 1), k)]


@lru_cache(maxsize=None)
def subset_tuples(g: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Lexicographic k-subsets of {1..g} as raw tuples (cached)."""
    if k < 0 or k > g:
        raise DomainError(f"cardinality k={k} outside 0..{g}")
    return tuple(itertools.combinations(range(1, g + 1), k))


@lru_cache(maxsize=None)
def subset_rank(g: int, k: int) -> dict[tuple[int, ...], int]:
    """Map from a k-subset tuple to its row position in the canonical order."""
    return {s: i for i, s in enumerate(subset_tuples(g, k))}


def sign_sum(I: IndexSet, J: IndexSet) -> int:
    """(-1) raised to the sum of all indices appearing in I and J."""
    return -1 if (I.index_sum() + J.index_sum()) % 2 else 1


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (entries must be distinct)."""
    seq = tuple(seq)
    inversions = sum(
        1
        for a in range(len(seq))
        for b in range(a + 1, len(seq))
        if seq[a] > seq[b]
    )
    return -1 if inversions % 2 else 1


def hodge_sign(I: IndexSet) -> int:
    """Sign of the permutation sending the concatenation (I, I^c) to (1..g).

    For equal cardinalities this satisfies
    ``hodge_sign(I) * hodge_sign(J) == sign_sum(I, J)``.
    """
    return perm_sign(I.elements + I.complement().elements)


def tuple_complement(sub: tuple[int, ...], within: tuple[int, ...]) -> tuple[int, ...]:
    """Elements of ``within`` not in ``sub``, preserving order."""
    inside = set(sub)
    return tuple(i for i in within if i not in inside)


def position_sign(sub: tuple[int, ...], within: tuple[int, ...]) -> int:
    """(-1) raised to the sum of the 1-based positions of ``sub`` inside ``within``.

    This is the sign that appears when a Laplace-style expansion is applied
    to a submatrix: indices are relabeled by their position in the ambient
    subset, not by their ambient value.
    """
    pos = {v: i + 1 for i, v in enumerate(within)}
    total = sum(pos[v] for v in sub)
    return -1 if total % 2 else 1


@lru_cache(maxsize=None)
def box_table(g: int, p: int, q: int):
    """Precomputed index plumbing for the box product at levels (p, q).

    For every output entry (H, K) at level p+q, lists tuples
    (row_a, col_a, row_b, col_b, sign) addressing the level-p factor by
    (row_a, col_a), the level-q factor by (row_b, col_b), with the
    positional sign of the sub-split.  The leading normalization
    1 / C(p+q, p) is not included.
    """
    k = p + q
    rank_p = subset_rank(g, p)
    rank_q = subset_rank(g, q)
    table = []
    for H in subset_tuples(g, k):
        row = []
        for K in subset_tuples(g, k):
            terms = []
            for I in itertools.combinations(H, p):
                sI = position_sign(I, H)
                Ic = tuple_complement(I, H)
                for J in itertools.combinations(K, p):
                    sign = sI * position_sign(J, K)
                    Jc = tuple_complement(J, K)
                    terms.append((rank_p[I], rank_p[J], rank_q[Ic], rank_q[Jc], sign))
            row.append(tuple(terms))
        table.append(tuple(row))
    return tuple(table)


def binomial(n: int, k: int) -> int:
    return comb(n, k)
