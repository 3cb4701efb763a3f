"""Independent reference implementations used only by the test suite.

These deliberately avoid the production code paths: determinants by
first-row cofactor recursion, signs by explicit inversion counting, set
predicates by brute-force enumeration.
"""

import itertools
from fractions import Fraction


def laplace_det(rows):
    """Determinant by recursive first-row cofactor expansion."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for col in range(n):
        minor = [r[:col] + r[col + 1 :] for r in rows[1:]]
        term = rows[0][col] * laplace_det(minor)
        total = total + (term if col % 2 == 0 else -term)
    return total


def det_of_array(arr):
    return laplace_det([list(row) for row in arr])


def inversion_sign(seq):
    seq = list(seq)
    inv = 0
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                inv += 1
    return -1 if inv % 2 else 1


def classify_triples(chars):
    """Brute-force azygetic / syzygetic classification of a set."""
    parities = set()
    for trip in itertools.combinations(chars, 3):
        mp = [sum(t.m_prime[i] for t in trip) % 2 for i in range(trip[0].g)]
        mpp = [sum(t.m_double_prime[i] for t in trip) % 2 for i in range(trip[0].g)]
        parities.add(sum(a * b for a, b in zip(mp, mpp)) % 2)
    return parities


def brute_essentially_independent(chars):
    chars = list(chars)
    for size in range(2, len(chars) + 1, 2):
        for combo in itertools.combinations(chars, size):
            mp = [sum(t.m_prime[i] for t in combo) % 2 for i in range(combo[0].g)]
            mpp = [
                sum(t.m_double_prime[i] for t in combo) % 2 for i in range(combo[0].g)
            ]
            if not any(mp) and not any(mpp):
                return False
    return True


def frac_matrix_from_ints(ints):
    import numpy as np

    g = len(ints)
    M = np.empty((g, g), dtype=object)
    for i in range(g):
        for j in range(g):
            M[i, j] = Fraction(int(ints[i][j]))
    return M
