"""Latin squares and their functions f_L, and the three-player relation built from two-party functions."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .cc_oracles import (
    DET_CAP_BITS,
    BoolFunction,
    Box,
    ProtocolTree,
    cover_number,
    min_protocol_depth,
    superfactorial,
    tree_eval,
    verify_cover,
)
from .errors import CapExceeded, PreconditionError, ShapeError
from .tensor import Bipartition

LATIN_ENUM_MAX_M = 5
LATIN_SAMPLE_MAX_M = 64
FL_ENUM_MAX_M = 5
FL_SAMPLE_MAX_M = 6
COVER_COUNT_CAP = 1 << 22

# regression constants from the enumeration oracle
LATIN_COUNTS = {1: 1, 2: 2, 3: 12, 4: 576, 5: 161280}


@dataclass(frozen=True)
class LatinSquare:
    """An m x m grid over {0..m-1} with every row and column a permutation."""

    m: int
    grid: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(int(v) for v in row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        m = self.m
        if m < 1 or len(grid) != m or any(len(r) != m for r in grid):
            raise ShapeError(f"Latin square must be {m}x{m}")
        full = set(range(m))
        for r in grid:
            if set(r) != full:
                raise PreconditionError(f"row {r} is not a permutation of 0..{m - 1}")
        for c in zip(*grid):
            if set(c) != full:
                raise PreconditionError(f"column {c} is not a permutation of 0..{m - 1}")

    def __getitem__(self, xy) -> int:
        x, y = xy
        return self.grid[x][y]

    def reduced(self) -> "LatinSquare":
        """Isotopic square with first row and first column 0..m-1.

        Relabel symbols so the first row reads 0..m-1, then sort the rows by
        their first entry.
        """
        relabel = {v: j for j, v in enumerate(self.grid[0])}
        rows = sorted(tuple(relabel[v] for v in r) for r in self.grid)
        return LatinSquare(self.m, tuple(rows))

    def triples(self) -> List[Tuple[int, int, int]]:
        return [(x, y, v) for x, row in enumerate(self.grid) for y, v in enumerate(row)]

    def conjugates(self) -> List["LatinSquare"]:
        """The six squares obtained by permuting the roles of row, column and symbol."""
        out = []
        for perm in itertools.permutations(range(3)):
            grid = [[0] * self.m for _ in range(self.m)]
            for t in self.triples():
                a, b, c = (t[i] for i in perm)
                grid[a][b] = c
            out.append(LatinSquare(self.m, tuple(tuple(r) for r in grid)))
        return out

    def isotopy_canonical(self) -> "LatinSquare":
        """Least reduced form over all row and column orders.

        After reduction only the choice of first row and the column order
        matter, so ``m * m!`` candidates suffice.
        """
        m = self.m
        best = None
        for first in range(m):
            rows = [self.grid[first]] + [r for i, r in enumerate(self.grid) if i != first]
            for cols in itertools.permutations(range(m)):
                cand = LatinSquare(m, tuple(tuple(r[c] for c in cols) for r in rows)).reduced().grid
                if best is None or cand < best:
                    best = cand
        return LatinSquare(m, best)

    def main_class(self) -> "LatinSquare":
        """Canonical representative up to isotopy and conjugacy."""
        return min((c.isotopy_canonical() for c in self.conjugates()), key=lambda s: s.grid)


def format_latin(sq: LatinSquare) -> str:
    lines = [f"latin m={sq.m}"]
    lines += [" ".join(str(v + 1) for v in row) for row in sq.grid]
    return "\n".join(lines) + "\n"


def parse_latin(text: str) -> LatinSquare:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("latin"):
        raise PreconditionError("missing 'latin m=<m>' header")
    try:
        m = int(lines[0].split("m=", 1)[1].split()[0])
    except (IndexError, ValueError):
        raise PreconditionError(f"bad header: {lines[0]!r}") from None
    rows = [[int(tok) - 1 for tok in ln.split()] for ln in lines[1:]]
    return LatinSquare(m, tuple(tuple(r) for r in rows))


def latin_enumerate(m: int) -> List[LatinSquare]:
    """Every Latin square of order m, in lexicographic order of the row-major grid."""
    if m > LATIN_ENUM_MAX_M:
        raise CapExceeded("Latin squares", LATIN_COUNTS.get(m, math.factorial(m) ** m), LATIN_COUNTS[LATIN_ENUM_MAX_M])
    if m < 1:
        raise PreconditionError("m must be positive")
    out: List[LatinSquare] = []
    grid = [[-1] * m for _ in range(m)]
    col_used = [0] * m
    row_used = [0] * m

    def fill(cell: int):
        if cell == m * m:
            out.append(LatinSquare(m, tuple(tuple(r) for r in grid)))
            return
        x, y = divmod(cell, m)
        for v in range(m):
            bit = 1 << v
            if row_used[x] & bit or col_used[y] & bit:
                continue
            grid[x][y] = v
            row_used[x] |= bit
            col_used[y] |= bit
            fill(cell + 1)
            row_used[x] &= ~bit
            col_used[y] &= ~bit
        grid[x][y] = -1

    fill(0)
    return out


def latin_sample(m: int, seed: int) -> LatinSquare:
    """Random Latin square, row by row.

    Each new row is a perfect matching between columns and the symbols
    still unused in that column, found by augmenting paths in a random
    order. A partial Latin rectangle always extends (Hall), so this never
    backtracks. Not uniform over Latin squares.
    """
    if not (1 <= m <= LATIN_SAMPLE_MAX_M):
        raise PreconditionError(f"latin_sample supports 1 <= m <= {LATIN_SAMPLE_MAX_M}")
    rng = np.random.default_rng(seed)
    allowed = [set(range(m)) for _ in range(m)]
    rows = []
    for _ in range(m):
        cols = [int(c) for c in rng.permutation(m)]
        prefs = {c: [int(v) for v in rng.permutation(m) if int(v) in allowed[c]] for c in cols}
        owner: Dict[int, int] = {}  # symbol -> column

        def augment(c: int, seen: set) -> bool:
            for v in prefs[c]:
                if v in seen:
                    continue
                seen.add(v)
                if v not in owner or augment(owner[v], seen):
                    owner[v] = c
                    return True
            return False

        for c in cols:
            if not augment(c, set()):
                raise AssertionError("Latin rectangle failed to extend")
        row = [0] * m
        for v, c in owner.items():
            row[c] = v
            allowed[c].discard(v)
        rows.append(tuple(row))
    return LatinSquare(m, tuple(rows))


def build_fL(sq: LatinSquare) -> BoolFunction:
    """f_L(x, y, z) = 1 iff L[x, y] != z."""
    m = sq.m
    table = np.ones((m, m, m), dtype=np.uint8)
    for x in range(m):
        for y in range(m):
            table[x, y, sq.grid[x][y]] = 0
    return BoolFunction(table)


def check_ne_reduction(f: BoolFunction) -> Tuple[bool, ...]:
    """Per axis i: does every line along axis i hold exactly one 0?

    That is the structure making the {i}-vs-rest induced function a
    relabelled non-equality: the rest side knows the unique value of x_i
    giving 0.
    """
    zeros = f.table == 0
    return tuple(bool(np.all(zeros.sum(axis=i) == 1)) for i in range(f.k))


@dataclass(frozen=True)
class HardnessReport:
    m: int
    mode: str
    squares: int
    main_classes: int
    min_cover: int
    max_cover: int
    histogram: Dict[int, int]
    threshold: int          # ceil(m / 12)
    max_meets_threshold: Optional[bool]  # only decided when all squares were enumerated

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "mode": self.mode,
            "squares": self.squares,
            "main_classes": self.main_classes,
            "min_cover": self.min_cover,
            "max_cover": self.max_cover,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "threshold": self.threshold,
            "max_meets_threshold": self.max_meets_threshold,
        }


def fL_cover_number(sq: LatinSquare) -> Tuple[int, object]:
    return cover_number(build_fL(sq), 1)


def fL_hardness_experiment(m: int, mode: str = "enumerate", count: int = 0, seed: Optional[int] = None,
                           mapper=map) -> HardnessReport:
    """Exact C^1(f_L) over every (or a sample of) Latin square(s) of order m.

    Covers are computed once per main class. ``mapper`` must preserve order.
    """
    if mode == "enumerate":
        if m > FL_ENUM_MAX_M:
            raise CapExceeded("f_L enumeration order", m, FL_ENUM_MAX_M)
        squares = latin_enumerate(m)
    elif mode == "sample":
        if m > FL_SAMPLE_MAX_M:
            raise CapExceeded("f_L sample order", m, FL_SAMPLE_MAX_M)
        if seed is None:
            raise PreconditionError("sampling needs an explicit seed")
        rng = np.random.default_rng(seed)
        seeds = [int(s) for s in rng.integers(0, 2 ** 63, size=count)]
        squares = [latin_sample(m, s) for s in seeds]
    else:
        raise PreconditionError(f"unknown mode {mode!r}")
    # C^1(f_L) only depends on the main class: relabelling an axis or
    # permuting the three coordinates maps boxes to boxes
    reduced = [sq.reduced() for sq in squares]
    classes = {r: r.main_class() for r in sorted(set(reduced), key=lambda s: s.grid)}
    distinct = sorted(set(classes.values()), key=lambda s: s.grid)
    covers = dict(zip(distinct, mapper(lambda s: fL_cover_number(s)[0], distinct)))
    values = [covers[classes[r]] for r in reduced]
    hist = Counter(values)
    threshold = -(-m // 12)
    top = max(values) if values else 0
    return HardnessReport(
        m=m,
        mode=mode,
        squares=len(squares),
        main_classes=len(distinct),
        min_cover=min(values) if values else 0,
        max_cover=top,
        histogram=dict(hist),
        threshold=threshold,
        max_meets_threshold=(top >= threshold) if mode == "enumerate" else None,
    )


def fL_injectivity_check(m: int) -> dict:
    """Distinct squares give distinct f_L, and a minimum 1-cover of one is never a 1-cover of another."""
    squares = latin_enumerate(m)
    funcs = [build_fL(sq) for sq in squares]
    distinct_functions = len(set(funcs)) == len(funcs)
    covers = [cover_number(f, 1)[1] for f in funcs]
    shared = [(i, j) for i, j in itertools.permutations(range(len(funcs)), 2) if verify_cover(funcs[j], covers[i])]
    return {"squares": len(squares), "distinct_functions": distinct_functions, "shared_covers": len(shared)}


def count_covers(m: int, t: int) -> dict:
    """Count t-sets of nonempty boxes in the m^3 cube, and those whose union is the whole cube.

    Compared against the bound 2^{3mt} on the number of t-box collections.
    """
    boxes = []
    per_axis = range(1, 1 << m)
    for masks in itertools.product(per_axis, repeat=3):
        boxes.append(Box.from_masks(masks))
    n_boxes = len(boxes)
    total = math.comb(n_boxes, t)
    if total > COVER_COUNT_CAP:
        raise CapExceeded("box collections", total, COVER_COUNT_CAP)
    cell_bit = {c: 1 << i for i, c in enumerate(itertools.product(range(m), repeat=3))}
    box_bits = [sum(cell_bit[c] for c in b.cells()) for b in boxes]
    full = (1 << m ** 3) - 1
    collections = covering = 0
    for combo in itertools.combinations(box_bits, t):
        collections += 1
        u = 0
        for bits in combo:
            u |= bits
        if u == full:
            covering += 1
    bound = 2 ** (3 * m * t)
    return {"m": m, "t": t, "boxes": n_boxes, "collections": collections, "covering": covering,
            "bound": bound, "holds": collections <= bound}


def latin_count_report(m: int) -> dict:
    count = len(latin_enumerate(m))
    lower = superfactorial(m)
    return {"m": m, "count": count, "lower": lower, "holds": count >= lower}


# -- relations -----------------------------------------------------------------------

@dataclass(frozen=True)
class KRelation:
    """Dense relation: ``valid[x..., o]`` says output ``outputs[o]`` is acceptable on input x."""

    shape: Tuple[int, ...]
    outputs: Tuple[Hashable, ...]
    valid: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.valid, dtype=bool)
        shape = tuple(int(s) for s in self.shape)
        if v.shape != shape + (len(self.outputs),):
            raise ShapeError(f"valid table has shape {v.shape}, expected {shape + (len(self.outputs),)}")
        if not v.any(axis=-1).all():
            raise PreconditionError("relation is not total: some input has no valid output")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "valid", v)

    @property
    def k(self) -> int:
        return len(self.shape)

    def valid_outputs(self, x: Sequence[int]) -> List[Hashable]:
        row = self.valid[tuple(x)]
        return [o for o, ok in zip(self.outputs, row) if ok]

    def restrict(self, keep: np.ndarray) -> "KRelation":
        return KRelation(self.shape, self.outputs, self.valid & keep)


def ip_function(n: int) -> BoolFunction:
    """Inner product mod 2 of two n-bit strings."""
    m = 1 << n
    return BoolFunction.from_callable((m, m), lambda x, y: bin(x & y).count("1") & 1)


RELATION_OUTPUTS = tuple((i, b) for i in (1, 2, 3) for b in (0, 1))


def build_relation_R(f1: BoolFunction, f2: BoolFunction, f3: BoolFunction) -> KRelation:
    """Three players hold x = x1 x2, y = y1 y2, z = z1 z2 (high half first).

    Output (i, b) is valid when b = f1(x1, y1) for i = 1, b = f2(x2, z1) for
    i = 2, or b = f3(y2, z2) for i = 3. Output (i, b) has index 2(i-1) + b.
    """
    shapes = {f.shape for f in (f1, f2, f3)}
    if len(shapes) != 1:
        raise ShapeError(f"component functions disagree on shape: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ShapeError("component functions must be two-party with equal input ranges")
    h = shape[0]
    m = h * h
    idx = np.arange(m)
    hi, lo = idx // h, idx % h
    x1, x2 = hi[:, None, None], lo[:, None, None]
    y1, y2 = hi[None, :, None], lo[None, :, None]
    z1, z2 = hi[None, None, :], lo[None, None, :]
    vals = [f1.table[x1, y1], f2.table[x2, z1], f3.table[y2, z2]]
    valid = np.zeros((m, m, m, 6), dtype=bool)
    for i, v in enumerate(vals):
        v = np.broadcast_to(v, (m, m, m))
        valid[..., 2 * i] = v == 0
        valid[..., 2 * i + 1] = v == 1
    return KRelation((m, m, m), RELATION_OUTPUTS, valid)


@dataclass(frozen=True)
class ZeroCommResult:
    solvable: bool
    side: Optional[Tuple[int, ...]] = None
    output_map: Optional[Dict[Tuple[int, ...], Hashable]] = None

    def as_dict(self) -> dict:
        out = {"solvable": self.solvable}
        if self.solvable:
            out["side"] = [i + 1 for i in self.side]
            out["map"] = {",".join(map(str, key)): list(v) if isinstance(v, tuple) else v
                          for key, v in sorted(self.output_map.items())}
        return out


def zero_comm_check(rel: KRelation, p: Bipartition) -> ZeroCommResult:
    """Can one side of ``p`` announce a valid output without hearing anything?

    Tries the side holding axis 0 first, then the other. The map sends each
    joint input of the announcing side to the first output valid against
    every input of the other side.
    """
    if p.k != rel.k:
        raise PreconditionError("bipartition arity does not match the relation")
    for side, other in ((p.left, p.right), (p.right, p.left)):
        good = rel.valid.all(axis=tuple(other))  # axes of `side` then outputs
        if not good.any(axis=-1).all():
            continue
        sizes = [rel.shape[i] for i in side]
        mapping = {}
        for key in itertools.product(*(range(s) for s in sizes)):
            o = int(np.argmax(good[key]))
            mapping[key] = rel.outputs[o]
        return ZeroCommResult(True, tuple(side), mapping)
    return ZeroCommResult(False)


def constant_output(rel: KRelation) -> Optional[Hashable]:
    """First output valid on every input, if any."""
    every = rel.valid.reshape(-1, len(rel.outputs)).all(axis=0)
    return rel.outputs[int(np.argmax(every))] if every.any() else None


def rel_det_cc_exact(rel: KRelation, cap_bits: int = DET_CAP_BITS) -> Tuple[int, ProtocolTree]:
    """Exact broadcast complexity; a leaf may stop once one output is valid on its whole box."""
    valid = rel.valid
    axes = [np.arange(s) for s in rel.shape]

    def leaf(box):
        idx = [ax[[(mask >> j) & 1 == 1 for j in range(len(ax))]] for ax, mask in zip(axes, box)]
        sub = valid[np.ix_(*idx)] if idx else valid
        ok = sub.reshape(-1, valid.shape[-1]).all(axis=0)
        return int(np.argmax(ok)) if ok.any() else None

    return min_protocol_depth(rel.shape, leaf, cap_bits)


def relation_tree_valid(rel: KRelation, tree: ProtocolTree) -> bool:
    """Every input reaches a leaf whose output index is valid there."""
    return all(rel.valid[x + (tree_eval(tree, x),)] for x in itertools.product(*(range(s) for s in rel.shape)))
