"""Slow, obviously-correct reference implementations used only as test oracles.

Nothing here imports the search code it checks.
"""

import itertools
import math
from functools import lru_cache

import numpy as np
import sympy


def rank_q(rows):
    if not rows or not rows[0]:
        return 0
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) if hasattr(x, "denominator") else x for x in r]
                         for r in rows]).rank()


def rank_gf2(rows):
    a = [[int(x) % 2 for x in r] for r in rows]
    rank, ncols = 0, len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for i in range(len(a)):
            if i != rank and a[i][c]:
                a[i] = [(x + y) % 2 for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def flatten_by_loops(arr, left, right):
    """Flattening built from the index formula, one entry at a time."""
    shape = arr.shape
    rows = math.prod(shape[a] for a in left)
    cols = math.prod(shape[a] for a in right)
    out = [[None] * cols for _ in range(rows)]
    for idx in itertools.product(*[range(m) for m in shape]):
        r = 0
        for a in left:
            r = r * shape[a] + idx[a]
        c = 0
        for a in right:
            c = c * shape[a] + idx[a]
        out[r][c] = arr[idx]
    return out


def all_boxes(shape):
    """Every nonempty box as a tuple of per-axis tuples."""
    per_axis = []
    for m in shape:
        per_axis.append([tuple(v for v in range(m) if s >> v & 1) for s in range(1, 1 << m)])
    return list(itertools.product(*per_axis))


def box_cells(box):
    return set(itertools.product(*box))


def brute_cover_number(table, b):
    """Smallest number of b-monochromatic boxes covering every b-cell, by size-increasing search."""
    table = np.asarray(table)
    targets = {c for c in itertools.product(*[range(m) for m in table.shape]) if table[c] == b}
    if not targets:
        return 0
    mono = [box_cells(bx) for bx in all_boxes(table.shape) if all(table[c] == b for c in itertools.product(*bx))]
    for size in range(1, len(targets) + 1):
        for combo in itertools.combinations(mono, size):
            if set().union(*combo) >= targets:
                return size
    raise AssertionError("unreachable")


def mix(x, z, a):
    return tuple(x[i] if i in a else z[i] for i in range(len(x)))


def fools(table, x, z, b):
    k = len(x)
    for r in range(1, k):
        for a in itertools.combinations(range(k), r):
            if table[mix(x, z, set(a))] != b:
                return True
    return False


def brute_max_fooling(table, b):
    """Largest fooling set by trying every subset of the b-inputs, largest first."""
    table = np.asarray(table)
    pts = [c for c in itertools.product(*[range(m) for m in table.shape]) if table[c] == b]
    for size in range(len(pts), 0, -1):
        for combo in itertools.combinations(pts, size):
            if all(fools(table, x, z, b) for x, z in itertools.combinations(combo, 2)):
                return size
    return 0


def two_party_fooling(matrix, pairs, b):
    """The classical two-argument definition on (row, column) pairs."""
    if any(matrix[x][y] != b for x, y in pairs):
        return False
    for (xi, yi), (xj, yj) in itertools.combinations(pairs, 2):
        if matrix[xi][yj] != 1 - b and matrix[xj][yi] != 1 - b:
            return False
    return True


def naive_n(parts, bounds, k):
    """The subset recursion written directly, without memoisation or tie-breaks."""

    def n(h):
        if len(h) == 1:
            return 1
        best = None
        for p in parts:
            a, c = h & p[0], h & p[1]
            if not a or not c:
                continue
            d = bounds[p]
            vals = [d * d * n(a) * n(c)]
            if len(a) == 1 or len(c) == 1:
                vals.append(d * n(a) * n(c))
            v = min(vals)
            best = v if best is None else min(best, v)
        return best

    return n(frozenset(range(k)))


def latin_count_by_permutations(m):
    """Count Latin squares by choosing each row among all permutations."""
    perms = list(itertools.permutations(range(m)))

    @lru_cache(maxsize=None)
    def count(used_cols, rows_left):
        if rows_left == 0:
            return 1
        total = 0
        for p in perms:
            if all(not (used_cols[c] >> p[c] & 1) for c in range(m)):
                total += count(tuple(u | (1 << p[c]) for c, u in enumerate(used_cols)), rows_left - 1)
        return total

    return count(tuple([0] * m), m)


def ip(x, y):
    return bin(x & y).count("1") % 2


def relation_clauses(f1, f2, f3, n, x, y, z, i, b):
    """Membership of (x, y, z, (i, b)) straight from the three clauses, on bit strings."""
    x1, x2 = x >> n, x & ((1 << n) - 1)
    y1, y2 = y >> n, y & ((1 << n) - 1)
    z1, z2 = z >> n, z & ((1 << n) - 1)
    if i == 1:
        return f1(x1, y1) == b
    if i == 2:
        return f2(x2, z1) == b
    return f3(y2, z2) == b


def naive_det(table):
    """Broadcast complexity by recursing over every box and every split of one player's set."""
    table = np.asarray(table)
    k = table.ndim

    @lru_cache(maxsize=None)
    def d(sets):
        vals = {int(table[c]) for c in itertools.product(*sets)}
        if len(vals) == 1:
            return 0
        best = math.inf
        for i, s in enumerate(sets):
            for r in range(1, len(s)):
                for part in itertools.combinations(s, r):
                    rest = tuple(v for v in s if v not in part)
                    a = sets[:i] + (part,) + sets[i + 1:]
                    b = sets[:i] + (rest,) + sets[i + 1:]
                    best = min(best, 1 + max(d(a), d(b)))
        return best

    return d(tuple(tuple(range(m)) for m in table.shape[:k]))


def sum_of_outers(terms, shape, gf2=False):
    """Evaluate a list of rank-one terms entry by entry."""
    out = {}
    for idx in itertools.product(*[range(m) for m in shape]):
        total = 0
        for term in terms:
            p = 1
            for vec, i in zip(term, idx):
                p *= vec[i]
            total += p
        out[idx] = total % 2 if gf2 else total
    return out
