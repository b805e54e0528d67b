"""Exact desk-scale communication complexity in the Number-in-Hand model.

Players broadcast one bit at a time; the bit sent by player ``i`` depends on
``x_i`` and the transcript so far. Inputs on axis ``i`` are ``0..m_i-1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from .errors import CapExceeded, InvariantViolation, PreconditionError, ShapeError
from .linalg import Field
from .tensor import Bipartition, KTensor, all_bipartitions

DET_CAP_BITS = 24
COVER_CELL_CAP = 1 << 16
BOX_ENUM_CAP = 1 << 22
LP_SCALE = 1 << 20


class BoolFunction:
    """A Boolean function on ``[m_1] x ... x [m_k]`` stored as a 0/1 table."""

    __slots__ = ("table",)

    def __init__(self, table):
        if isinstance(table, KTensor):
            if not table.is_boolean():
                raise PreconditionError("tensor entries must be 0 or 1")
            table = np.array([int(v) for v in table.values()], dtype=np.uint8).reshape(table.shape)
        arr = np.array(table, dtype=np.int64)
        if arr.ndim < 1 or arr.size == 0:
            raise ShapeError("a Boolean function needs at least one axis and one input")
        if not np.isin(arr, (0, 1)).all():
            raise PreconditionError("function values must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        self.table = arr

    @classmethod
    def from_callable(cls, shape: Sequence[int], fn: Callable[..., int]) -> "BoolFunction":
        arr = np.zeros(tuple(shape), dtype=np.uint8)
        for idx in itertools.product(*[range(m) for m in shape]):
            arr[idx] = 1 if fn(*idx) else 0
        return cls(arr)

    @classmethod
    def from_index(cls, shape: Sequence[int], code: int) -> "BoolFunction":
        """Function whose row-major truth table is the binary expansion of ``code`` (bit 0 first)."""
        n = math.prod(shape)
        return cls(np.array([(code >> i) & 1 for i in range(n)], dtype=np.uint8).reshape(tuple(shape)))

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.table.shape)

    @property
    def k(self) -> int:
        return self.table.ndim

    def __call__(self, *x) -> int:
        if len(x) == 1 and isinstance(x[0], tuple):
            x = x[0]
        return int(self.table[tuple(x)])

    def tensor(self, field: Field | str = Field.Q) -> KTensor:
        return KTensor(self.table.tolist(), field=field)

    def complement(self) -> "BoolFunction":
        return BoolFunction(1 - self.table)

    def inputs(self, b: Optional[int] = None) -> List[Tuple[int, ...]]:
        """All inputs in row-major order, optionally only those with value ``b``."""
        cells = itertools.product(*[range(m) for m in self.shape])
        if b is None:
            return list(cells)
        return [c for c in cells if self.table[c] == b]

    def __eq__(self, other):
        return isinstance(other, BoolFunction) and self.shape == other.shape and bool((self.table == other.table).all())

    def __hash__(self):
        return hash((self.shape, self.table.tobytes()))

    def __repr__(self):
        return f"BoolFunction(shape={self.shape})"


def induced_function(f: BoolFunction, p: Bipartition) -> BoolFunction:
    """Two-party function ``f^{A,B}``: rows indexed by side A, columns by side B."""
    if p.k != f.k:
        raise PreconditionError(f"bipartition of {p.k} axes for an arity-{f.k} function")
    left, right = sorted(p.left), sorted(p.right)
    rows = math.prod(f.shape[a] for a in left)
    return BoolFunction(f.table.transpose(left + right).reshape(rows, -1))


# -- boxes, covers and protocol trees ----------------------------------------------

@dataclass(frozen=True)
class Box:
    """Combinatorial box ``S_1 x ... x S_k``; each ``S_i`` a sorted tuple."""

    sets: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(tuple(sorted(set(s))) for s in self.sets))

    @classmethod
    def from_masks(cls, masks: Sequence[int]) -> "Box":
        return cls(tuple(tuple(j for j in range(m.bit_length()) if m >> j & 1) for m in masks))

    def masks(self) -> Tuple[int, ...]:
        return tuple(sum(1 << j for j in s) for s in self.sets)

    def cells(self):
        return itertools.product(*self.sets)

    def __contains__(self, x) -> bool:
        return all(xi in s for xi, s in zip(x, self.sets))

    def is_empty(self) -> bool:
        return any(len(s) == 0 for s in self.sets)

    def size(self) -> int:
        return math.prod(len(s) for s in self.sets)


def is_monochromatic(f: BoolFunction, box: Box, b: Optional[int] = None) -> bool:
    if box.is_empty():
        return True
    sub = f.table[np.ix_(*[list(s) for s in box.sets])]
    lo, hi = int(sub.min()), int(sub.max())
    return lo == hi and (b is None or lo == b)


@dataclass(frozen=True)
class BoxCover:
    value: int
    boxes: Tuple[Box, ...]

    def __len__(self):
        return len(self.boxes)


def verify_cover(f: BoolFunction, cover: BoxCover) -> bool:
    """Every box is ``value``-monochromatic and every ``value``-input lies in some box."""
    b = cover.value
    if not all(len(box.sets) == f.k and is_monochromatic(f, box, b) for box in cover.boxes):
        return False
    covered = np.zeros(f.shape, dtype=bool)
    for box in cover.boxes:
        if not box.is_empty():
            covered[np.ix_(*[list(s) for s in box.sets])] = True
    return bool((covered | (f.table != b)).all())


@dataclass(frozen=True)
class Leaf:
    output: int


@dataclass(frozen=True)
class Node:
    """Player ``player`` broadcasts 1 iff its input is in ``ones``."""

    player: int
    ones: frozenset
    zero: "ProtocolTree"
    one: "ProtocolTree"


ProtocolTree = Union[Leaf, Node]


def tree_depth(tree: ProtocolTree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(tree.zero), tree_depth(tree.one))


def tree_eval(tree: ProtocolTree, x: Sequence[int]) -> int:
    while isinstance(tree, Node):
        tree = tree.one if x[tree.player] in tree.ones else tree.zero
    return tree.output


def tree_leaf_boxes(tree: ProtocolTree, shape: Sequence[int]) -> List[Tuple[Box, int]]:
    """Boxes of inputs reaching each leaf, in left-to-right order."""
    out = []

    def walk(t, sets):
        if isinstance(t, Leaf):
            out.append((Box(tuple(tuple(s) for s in sets)), t.output))
            return
        i = t.player
        zero = [v for v in sets[i] if v not in t.ones]
        one = [v for v in sets[i] if v in t.ones]
        walk(t.zero, sets[:i] + [zero] + sets[i + 1:])
        walk(t.one, sets[:i] + [one] + sets[i + 1:])

    walk(tree, [list(range(m)) for m in shape])
    return out


def verify_tree(tree: ProtocolTree, f: BoolFunction) -> bool:
    return all(tree_eval(tree, x) == f(x) for x in f.inputs())


# -- the exhaustive protocol search -----------------------------------------------

def _bits(mask: int) -> List[int]:
    return [j for j in range(mask.bit_length()) if mask >> j & 1]


def min_protocol_depth(shape: Sequence[int], leaf_label: Callable[[Tuple[int, ...]], Optional[int]],
                       cap_bits: int = DET_CAP_BITS) -> Tuple[int, ProtocolTree]:
    """Exact minimum worst-case broadcast cost over all protocol trees.

    ``leaf_label(box_masks)`` returns the output a leaf may announce on the
    box, or None if the box still needs communication. Memoised on boxes as
    per-axis bitmasks; splits keep the lowest element of the split set on the
    0-side, so each unordered split is tried once.
    """
    total_bits = sum(shape)
    if total_bits > cap_bits:
        raise CapExceeded("protocol search memo keys", 1 << total_bits, 1 << cap_bits)
    memo: Dict[Tuple[int, ...], Tuple[int, object]] = {}

    def cost(box: Tuple[int, ...]) -> int:
        hit = memo.get(box)
        if hit is not None:
            return hit[0]
        label = leaf_label(box)
        if label is not None:
            memo[box] = (0, label)
            return 0
        best, choice = math.inf, None
        for i, mask in enumerate(box):
            if best == 1:
                break
            if mask & (mask - 1) == 0:
                continue
            low = mask & -mask
            rest = mask ^ low
            sub = 0
            while True:
                # enumerate submasks of rest in increasing order
                sub = (sub - rest) & rest
                part1 = rest ^ sub
                part0 = low | sub
                if part1:
                    b0 = box[:i] + (part0,) + box[i + 1:]
                    b1 = box[:i] + (part1,) + box[i + 1:]
                    c0 = cost(b0)
                    if 1 + c0 < best:
                        c = 1 + max(c0, cost(b1))
                        if c < best:
                            best, choice = c, (i, part1)
                            if best == 1:
                                break
                if sub == 0:
                    break
        if choice is None:
            raise InvariantViolation("a non-leaf box admits no split")
        memo[box] = (best, choice)
        return best

    def build(box) -> ProtocolTree:
        c, choice = memo[box]
        if c == 0:
            return Leaf(choice)
        i, part1 = choice
        part0 = box[i] ^ part1
        return Node(i, frozenset(_bits(part1)),
                    build(box[:i] + (part0,) + box[i + 1:]),
                    build(box[:i] + (part1,) + box[i + 1:]))

    root = tuple((1 << m) - 1 for m in shape)
    value = cost(root)
    return value, build(root)


def _function_leaf(f: BoolFunction):
    table = f.table

    def leaf(box):
        sub = table[np.ix_(*[_bits(m) for m in box])]
        lo = sub.min()
        return int(lo) if lo == sub.max() else None

    return leaf


def det_cc_exact(f: BoolFunction, cap_bits: int = DET_CAP_BITS) -> Tuple[int, ProtocolTree]:
    """``D(f)`` and one optimal protocol tree."""
    value, tree = min_protocol_depth(f.shape, _function_leaf(f), cap_bits)
    if tree_depth(tree) != value or not verify_tree(tree, f):
        raise InvariantViolation("protocol tree does not compute f at the claimed cost")
    return value, tree


def det_cc_two_party(g: BoolFunction, cap_bits: int = DET_CAP_BITS) -> int:
    if g.k != 2:
        raise ShapeError(f"two-party complexity needs arity 2, got {g.k}")
    return det_cc_exact(g, cap_bits)[0]


def partition_argument_bound(f: BoolFunction, cap_bits: int = DET_CAP_BITS) -> Tuple[int, Optional[Bipartition]]:
    """Max over bipartitions of the exact two-party complexity of ``f^{A,B}``."""
    best, witness = -1, None
    for p in all_bipartitions(f.k):
        d = det_cc_two_party(induced_function(f, p), cap_bits)
        if d > best:
            best, witness = d, p
    return max(best, 0), witness


# -- covers ----------------------------------------------------------------------

def maximal_boxes(f: BoolFunction, b: int, cap: int = BOX_ENUM_CAP) -> List[Box]:
    """All inclusion-maximal ``b``-monochromatic boxes, in canonical order."""
    k = f.k
    # enumerate subsets on every axis but the largest; that axis is closed off
    order = sorted(range(k), key=lambda a: (f.shape[a], a))
    estimate = math.prod(1 << f.shape[a] for a in order[:-1])
    if estimate > cap:
        raise CapExceeded("maximal box enumeration", estimate, cap)
    good = np.transpose(f.table == b, order)
    found = set()

    def descend(level: int, allowed: np.ndarray, chosen: list):
        if level == k - 1:
            last = tuple(int(j) for j in np.flatnonzero(allowed))
            if last:
                found.add(tuple(chosen) + (last,))
            return
        m = allowed.shape[0]

        def grow(start: int, idx: list, acc: np.ndarray):
            for v in range(start, m):
                nxt = allowed[v] if acc is None else acc & allowed[v]
                if nxt.any():
                    descend(level + 1, nxt, chosen + [tuple(idx + [v])])
                    grow(v + 1, idx + [v], nxt)

        grow(0, [], None)

    descend(0, good, [])
    boxes = []
    for sets in found:
        box = [None] * k
        for pos, a in enumerate(order):
            box[a] = sets[pos]
        boxes.append(Box(tuple(box)))
    maximal = [bx for bx in boxes if _is_maximal(f, bx, b)]
    return sorted(maximal, key=lambda bx: bx.sets)


def _is_maximal(f: BoolFunction, box: Box, b: int) -> bool:
    for i, s in enumerate(box.sets):
        for v in range(f.shape[i]):
            if v in s:
                continue
            grown = Box(box.sets[:i] + (s + (v,),) + box.sets[i + 1:])
            if is_monochromatic(f, grown, b):
                return False
    return True


def exact_set_cover(universe: int, sets: Sequence[int]) -> List[int]:
    """Indices of a minimum subfamily of ``sets`` (bitmasks) whose union is ``universe``.

    Branch and bound: greedy incumbent, branching on the uncovered element
    with fewest covering sets, pruned by a packing lower bound (elements no
    two of which share a set), by the linear-programming relaxation (a dual
    solution verified in exact arithmetic) and by a memo of already
    expanded residues.
    """
    if universe == 0:
        return []
    covering: Dict[int, List[int]] = {e: [] for e in _bits(universe)}
    for idx, s in enumerate(sets):
        for e in _bits(s & universe):
            covering[e].append(idx)
    if any(not v for v in covering.values()):
        raise PreconditionError("the sets do not cover the universe")
    reach = {e: 0 for e in covering}
    for e, idxs in covering.items():
        for idx in idxs:
            reach[e] |= sets[idx]

    # greedy incumbent
    greedy, left = [], universe
    while left:
        idx = max(range(len(sets)), key=lambda j: (bin(sets[j] & left).count("1"), -j))
        greedy.append(idx)
        left &= ~sets[idx]
    best = [sorted(greedy)]

    by_reach = sorted(covering, key=lambda e: (bin(reach[e]).count("1"), e))

    def lower_bound(uncovered: int) -> int:
        # disjoint-reach packing, and the ratio to the largest remaining set
        blocked, packing = 0, 0
        for e in by_reach:
            if uncovered >> e & 1 and not blocked >> e & 1:
                packing += 1
                blocked |= reach[e]
        widest = max(bin(s & uncovered).count("1") for s in sets)
        return max(packing, -(-bin(uncovered).count("1") // widest))

    def lp_bound(uncovered: int) -> int:
        # feasible point of the fractional packing dual, rounded down to
        # multiples of 2^-20 and checked in integers, so the bound is exact
        elems = _bits(uncovered)
        live = sorted({j for e in elems for j in covering[e]})
        a = np.array([[sets[j] >> e & 1 for e in elems] for j in live], dtype=np.int64)
        res = linprog(-np.ones(len(elems)), A_ub=a, b_ub=np.ones(len(live)), bounds=(0, None), method="highs")
        if res.status != 0:
            return 0
        y = np.floor(np.clip(res.x, 0.0, None) * LP_SCALE).astype(np.int64)
        load = max(int((a @ y).max()), LP_SCALE)
        return -(-int(y.sum()) // load)

    seen: Dict[int, int] = {}

    def rec(uncovered: int, chosen: List[int]):
        if uncovered == 0:
            if len(chosen) < len(best[0]):
                best[0] = sorted(chosen)
            return
        prev = seen.get(uncovered)
        if prev is not None and prev <= len(chosen):
            return
        seen[uncovered] = len(chosen)
        if len(chosen) + lower_bound(uncovered) >= len(best[0]):
            return
        if len(chosen) + lp_bound(uncovered) >= len(best[0]):
            return
        e = min(_bits(uncovered), key=lambda el: (len(covering[el]), el))
        options = sorted(covering[e], key=lambda j: (-bin(sets[j] & uncovered).count("1"), j))
        for j in options:
            chosen.append(j)
            rec(uncovered & ~sets[j], chosen)
            chosen.pop()

    rec(universe, [])
    return best[0]


def cover_number(f: BoolFunction, b: int, cell_cap: int = COVER_CELL_CAP,
                 box_cap: int = BOX_ENUM_CAP) -> Tuple[int, BoxCover]:
    """``C^b(f)`` and a minimum ``b``-cover by maximal monochromatic boxes."""
    if b not in (0, 1):
        raise PreconditionError("b must be 0 or 1")
    n = math.prod(f.shape)
    if n > cell_cap:
        raise CapExceeded("cover cells", n, cell_cap)
    flat = f.table.reshape(-1)
    universe = sum(1 << i for i in range(n) if flat[i] == b)
    if universe == 0:
        return 0, BoxCover(b, ())
    boxes = maximal_boxes(f, b, box_cap)
    strides = [math.prod(f.shape[i + 1:]) for i in range(f.k)]
    masks = []
    for box in boxes:
        mask = 0
        for cell in box.cells():
            mask |= 1 << sum(c * s for c, s in zip(cell, strides))
        masks.append(mask)
    chosen = exact_set_cover(universe, masks)
    cover = BoxCover(b, tuple(boxes[j] for j in chosen))
    if not verify_cover(f, cover):
        raise InvariantViolation("cover search returned an invalid cover")
    return len(cover), cover


def ceil_log2(n: int) -> int:
    """``ceil(log2 n)`` for n >= 1; 0 for n = 0 (the vacuous case)."""
    return 0 if n <= 1 else (n - 1).bit_length()


@dataclass(frozen=True)
class NondetReport:
    b: int
    cover_size: int
    bits: int
    vacuous: bool
    cover: BoxCover


def nondet_cc(f: BoolFunction, b: int, **caps) -> NondetReport:
    """``N^b(f) = ceil(log2 C^b(f))``, with the cover size reported alongside."""
    c, cover = cover_number(f, b, **caps)
    return NondetReport(b, c, ceil_log2(c), c == 0, cover)


def nondet_total(f: BoolFunction, **caps) -> Tuple[int, int, int]:
    """``(C(f), N(f), max(N^0, N^1) + 1)`` with ``C = C^0 + C^1``."""
    r0, r1 = nondet_cc(f, 0, **caps), nondet_cc(f, 1, **caps)
    c = r0.cover_size + r1.cover_size
    return c, ceil_log2(c), max(r0.bits, r1.bits) + 1


# -- closed-form bounds -----------------------------------------------------------

def superfactorial(m: int) -> int:
    """``prod_{j=0}^{m} j!``"""
    out = 1
    for j in range(m + 1):
        out *= math.factorial(j)
    return out


@dataclass(frozen=True)
class BoundFormulas:
    m: int
    t: int
    r: int
    cover_exponent: int               # 3mt: log2 of the number of size-t covers
    latin_lower: int                  # prod_{j<=m} j!
    quarter_square: int               # ceil(m^2 / 4)
    latin_exceeds_quarter_power: bool  # prod j! > 2^(m^2/4), decided exactly
    random_exponent: int              # m * 2^(c_r r) * ceil(log2 m)^c_poly
    gap_threshold: int                # ceil(m / 12)


def bound_formulas(m: int, t: int = 0, r: int = 0, c_r: int = 1, c_poly: int = 1) -> BoundFormulas:
    """Exact integer forms of the counting bounds used for Latin-square functions.

    ``c_r`` and ``c_poly`` stand in for the unspecified constants hidden in
    ``2^{O(r)}`` and ``poly(log m)``.
    """
    if min(m, t, r, c_r, c_poly) < 0:
        raise PreconditionError("bound_formulas takes nonnegative integers")
    sf = superfactorial(m)
    return BoundFormulas(
        m=m,
        t=t,
        r=r,
        cover_exponent=3 * m * t,
        latin_lower=sf,
        quarter_square=-(-m * m // 4),
        latin_exceeds_quarter_power=sf ** 4 > 2 ** (m * m),
        random_exponent=m * 2 ** (c_r * r) * ceil_log2(max(m, 1)) ** c_poly,
        gap_threshold=-(-m // 12),
    )
