"""Exact linear algebra over GF(2) and the rationals.

Matrices are plain lists of rows. Rational entries are ``Fraction``; GF(2)
entries are the ints 0 and 1. Nothing here touches floating point.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import List, Sequence

from .errors import FieldError, InvariantViolation, ShapeError

Matrix = List[list]


class Field(str, Enum):
    GF2 = "gf2"
    Q = "q"

    def coerce(self, value):
        """Convert an int, Fraction or string like ``"3/4"`` into this field."""
        if isinstance(value, str):
            value = Fraction(value.strip())
        if self is Field.Q:
            if isinstance(value, (bool, int, Fraction)) or hasattr(value, "__index__"):
                return Fraction(int(value)) if not isinstance(value, Fraction) else value
            raise FieldError(f"not an exact rational: {value!r}")
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise FieldError(f"{value} is not an element of GF(2)")
            value = value.numerator
        try:
            return int(value) % 2
        except (TypeError, ValueError):
            raise FieldError(f"not an element of GF(2): {value!r}") from None

    @property
    def zero(self):
        return Fraction(0) if self is Field.Q else 0

    @property
    def one(self):
        return Fraction(1) if self is Field.Q else 1

    def fmt(self, value) -> str:
        return str(value)


def _ncols(rows: Sequence[Sequence]) -> int:
    return len(rows[0]) if rows else 0


def rank_gf2(rows: Sequence[int]) -> int:
    """Rank of a GF(2) matrix whose rows are packed into Python ints."""
    basis: List[int] = []  # kept sorted by decreasing leading bit
    for v in rows:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def pack_gf2(rows: Sequence[Sequence[int]]) -> List[int]:
    out = []
    for row in rows:
        word = 0
        for j, bit in enumerate(row):
            if bit & 1:
                word |= 1 << j
        out.append(word)
    return out


def integerize_rows(rows: Sequence[Sequence[Fraction]]) -> List[List[int]]:
    """Scale each row by the lcm of its denominators. Row scaling keeps the rank."""
    out = []
    for row in rows:
        den = 1
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
        out.append([int(x * den) for x in row])
    return out


def rank_bareiss(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination.

    Every intermediate entry is a minor of the input, so the division by the
    previous pivot is exact.
    """
    a = [list(r) for r in rows]
    nrows, ncols = len(a), _ncols(a)
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        for i in range(r + 1, nrows):
            aic = a[i][c]
            row_i, row_r = a[i], a[r]
            for j in range(c + 1, ncols):
                num = p * row_i[j] - aic * row_r[j]
                q, rem = divmod(num, prev)
                if rem:
                    raise InvariantViolation("Bareiss division was not exact")
                row_i[j] = q
            row_i[c] = 0
        prev = p
        r += 1
    return r


def rank(rows: Sequence[Sequence], field: Field) -> int:
    if not rows or _ncols(rows) == 0:
        return 0
    if field is Field.GF2:
        return rank_gf2(pack_gf2(rows))
    return rank_bareiss(integerize_rows(rows))


def rref(rows: Sequence[Sequence], field: Field):
    """Reduced row echelon form. Returns ``(R, pivot_columns)``."""
    a = [[field.coerce(x) for x in r] for r in rows]
    nrows, ncols = len(a), _ncols(a)
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        if field is Field.Q:
            inv = 1 / a[r][c]
            a[r] = [x * inv for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                if field is Field.GF2:
                    a[i] = [x ^ y for x, y in zip(a[i], a[r])]
                else:
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def transpose(rows: Sequence[Sequence]) -> Matrix:
    return [list(col) for col in zip(*rows)]


def independent_columns(rows: Sequence[Sequence], field: Field) -> List[int]:
    """Indices of the lexicographically first maximal set of independent columns."""
    if not rows:
        return []
    return rref(rows, field)[1]


def independent_rows(rows: Sequence[Sequence], field: Field) -> List[int]:
    if not rows:
        return []
    return independent_columns(transpose(rows), field)


def matmul(a: Sequence[Sequence], b: Sequence[Sequence], field: Field) -> Matrix:
    if _ncols(a) != len(b):
        raise ShapeError("matmul: inner dimensions differ")
    bt = transpose(b) if b else []
    out = []
    for row in a:
        out_row = []
        for col in bt:
            s = sum((x * y for x, y in zip(row, col)), field.zero)
            out_row.append(s % 2 if field is Field.GF2 else s)
        out.append(out_row)
    return out


def inverse(square: Sequence[Sequence], field: Field) -> Matrix:
    n = len(square)
    if any(len(r) != n for r in square):
        raise ShapeError("inverse of a non-square matrix")
    aug = [list(r) + [field.one if i == j else field.zero for j in range(n)] for i, r in enumerate(square)]
    red, piv = rref(aug, field)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise InvariantViolation("matrix is singular")
    return [row[n:] for row in red]


def solve(a: Sequence[Sequence], b: Sequence[Sequence], field: Field) -> Matrix:
    """A particular solution X of ``A X = B`` (free variables set to zero)."""
    if len(a) != len(b):
        raise ShapeError("solve: row counts differ")
    n = _ncols(a)
    aug = [list(ra) + list(rb) for ra, rb in zip(a, b)]
    red, piv = rref(aug, field)
    if any(p >= n for p in piv):
        raise InvariantViolation("inconsistent linear system")
    nb = _ncols(b)
    x = [[field.zero] * nb for _ in range(n)]
    for row, p in zip(red, piv):
        x[p] = row[n:]
    return x
