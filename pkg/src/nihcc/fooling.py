"""k-party fooling sets: mixtures, verification, maximum search and rank comparison."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cc_oracles import BoolFunction, ceil_log2, det_cc_exact, induced_function
from .errors import CapExceeded, InvariantViolation, PartitionError, PreconditionError
from .linalg import Field
from .tensor import Bipartition, KTensor, flattening_rank, hadamard, matrix_rank

FOOLING_VERTEX_CAP = 4096

Input = Tuple[int, ...]


def sigma_mix(x: Sequence[int], z: Sequence[int], a: Iterable[int], b: Iterable[int]) -> Input:
    """Take coordinates in ``a`` from ``x`` and those in ``b`` from ``z``."""
    a, b = frozenset(a), frozenset(b)
    k = len(x)
    if len(z) != k:
        raise PartitionError("mixing inputs of different arity")
    if a & b or (a | b) != frozenset(range(k)):
        raise PartitionError(f"({sorted(a)}, {sorted(b)}) is not an ordered partition of {k} coordinates")
    return tuple(x[i] if i in a else z[i] for i in range(k))


def proper_ordered_pairs(k: int) -> List[Tuple[FrozenSet[int], FrozenSet[int]]]:
    """All 2^k - 2 ordered ``(A, B)`` with both parts nonempty, A in increasing bitmask order."""
    full = frozenset(range(k))
    out = []
    for mask in range(1, (1 << k) - 1):
        a = frozenset(i for i in range(k) if mask >> i & 1)
        out.append((a, full - a))
    return out


@dataclass(frozen=True)
class FoolingCheck:
    ok: bool
    reason: str = ""
    pair: Optional[Tuple[Input, Input]] = None

    def __bool__(self):
        return self.ok


def _fools(f: BoolFunction, x: Input, z: Input, b: int, pairs) -> bool:
    target = 1 - b
    table = f.table
    return any(table[sigma_mix(x, z, a, bb)] == target for a, bb in pairs)


def is_fooling_set(f: BoolFunction, members: Iterable[Sequence[int]], b: int) -> FoolingCheck:
    members = [tuple(int(v) for v in x) for x in members]
    if len(set(members)) != len(members):
        return FoolingCheck(False, "duplicate members")
    for x in members:
        if len(x) != f.k or any(not (0 <= v < m) for v, m in zip(x, f.shape)):
            return FoolingCheck(False, f"{x} is outside the domain", (x, x))
        if f(x) != b:
            return FoolingCheck(False, f"f{x} != {b}", (x, x))
    pairs = proper_ordered_pairs(f.k)
    for x, z in itertools.combinations(members, 2):
        if not _fools(f, x, z, b, pairs):
            return FoolingCheck(False, "no mixture takes the opposite value", (x, z))
    return FoolingCheck(True)


@dataclass(frozen=True)
class FoolingSet:
    value: int
    members: Tuple[Input, ...]

    def __len__(self):
        return len(self.members)


def fooling_graph(f: BoolFunction, b: int, cap: int = FOOLING_VERTEX_CAP) -> Tuple[List[Input], List[int]]:
    """Vertices (the ``b``-inputs, row-major) and adjacency bitmasks."""
    verts = f.inputs(b)
    if len(verts) > cap:
        raise CapExceeded("fooling graph vertices", len(verts), cap)
    pairs = proper_ordered_pairs(f.k)
    adj = [0] * len(verts)
    for i, j in itertools.combinations(range(len(verts)), 2):
        if _fools(f, verts[i], verts[j], b, pairs):
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return verts, adj


def _color_bound(cands: int, adj: List[int]) -> int:
    """Number of colours a greedy sequential colouring uses on ``cands``."""
    colors = 0
    left = cands
    while left:
        colors += 1
        avail = left
        while avail:
            v = (avail & -avail).bit_length() - 1
            left &= ~(1 << v)
            avail &= ~(1 << v) & ~adj[v]
    return colors


def max_clique(adj: List[int]) -> List[int]:
    """Lexicographically least maximum clique.

    Depth-first in increasing vertex order visits cliques (as sorted tuples)
    in lexicographic order; only strict improvements are kept and pruning
    never discards a branch that could beat the incumbent, so the first
    clique of maximum size is the lexicographically least one.
    """
    n = len(adj)
    best: List[List[int]] = [[]]

    def expand(r: List[int], cands: int):
        if len(r) > len(best[0]):
            best[0] = list(r)
        if not cands or len(r) + _color_bound(cands, adj) <= len(best[0]):
            return
        while cands:
            if len(r) + bin(cands).count("1") <= len(best[0]):
                return
            v = (cands & -cands).bit_length() - 1
            cands &= ~(1 << v)
            r.append(v)
            expand(r, cands & adj[v])
            r.pop()

    expand([], (1 << n) - 1)
    return best[0]


def max_fooling_set(f: BoolFunction, b: int, cap: int = FOOLING_VERTEX_CAP) -> Tuple[int, FoolingSet]:
    verts, adj = fooling_graph(f, b, cap)
    clique = max_clique(adj)
    fs = FoolingSet(b, tuple(verts[i] for i in clique))
    if not is_fooling_set(f, fs.members, b):
        raise InvariantViolation("clique search returned a set that is not fooling")
    return len(fs), fs


@dataclass(frozen=True)
class FoolingBoundCheck:
    b: int
    t: int
    log_t: int
    det_cc: int

    @property
    def holds(self) -> bool:
        return self.log_t <= self.det_cc


def fooling_lower_bound_check(f: BoolFunction, b: int, det: Optional[int] = None) -> FoolingBoundCheck:
    """Compare ``ceil(log2 t)`` for a maximum ``b``-fooling set with ``D(f)``."""
    t, _ = max_fooling_set(f, b)
    d = det_cc_exact(f)[0] if det is None else det
    return FoolingBoundCheck(b, t, ceil_log2(t), d)


@dataclass(frozen=True)
class RankFoolingReport:
    t: int
    b: int
    exponent: int                          # 2^k - 2
    u_ranks: Dict[str, int]                # rank of each U^{A,B}, keyed "A|B"
    flattening_ranks: Dict[str, int]       # rank of the matching flattening
    hadamard_is_identity: bool
    hadamard_rank_bound_holds: bool        # t <= prod rank U^{A,B}
    rank_lower: int                        # max flattening rank of M (tensor rank >= this)
    inequality_holds: bool                 # rank_lower ** exponent >= t

    @property
    def all_hold(self) -> bool:
        submatrix_ok = all(self.u_ranks[key] <= self.flattening_ranks[key] for key in self.u_ranks)
        return self.hadamard_is_identity and self.hadamard_rank_bound_holds and self.inequality_holds and submatrix_ok


def _pair_key(a, b) -> str:
    fmt = lambda s: "{" + ",".join(str(i + 1) for i in sorted(s)) + "}"
    return f"{fmt(a)}|{fmt(b)}"


def rank_vs_fooling_check(f: BoolFunction, fs: FoolingSet) -> RankFoolingReport:
    """Build every ``U^{A,B}[x,z] = f(sigma^{A,B}(x,z))`` and check the rank chain.

    For a 0-fooling set the argument is run on the complement ``1 - f``, for
    which the set is a 1-fooling set; all ranks then refer to that function.
    Ranks are over the rationals. The tensor rank of M itself is bracketed
    from below by its largest flattening rank, which makes the checked
    inequality at least as strong as the stated one.
    """
    check = is_fooling_set(f, fs.members, fs.value)
    if not check:
        raise PreconditionError(f"not a {fs.value}-fooling set: {check.reason} at {check.pair}")
    g = f if fs.value == 1 else f.complement()
    k, t = g.k, len(fs)
    pairs = proper_ordered_pairs(k)
    tensor = g.tensor(Field.Q)
    u_ranks, flat_ranks = {}, {}
    prod = None
    for a, b in pairs:
        u = KTensor([[g(sigma_mix(x, z, a, b)) for z in fs.members] for x in fs.members]) if t else None
        key = _pair_key(a, b)
        u_ranks[key] = matrix_rank(u) if t else 0
        flat_ranks[key] = flattening_rank(tensor, a)
        if t:
            prod = u if prod is None else hadamard(prod, u)
    if t:
        identity = KTensor([[1 if i == j else 0 for j in range(t)] for i in range(t)])
        is_id = prod == identity
    else:
        is_id = True
    rank_prod = 1
    for r in u_ranks.values():
        rank_prod *= r
    exponent = 2 ** k - 2
    rank_lower = max(flat_ranks.values(), default=0)
    return RankFoolingReport(
        t=t,
        b=fs.value,
        exponent=exponent,
        u_ranks=u_ranks,
        flattening_ranks=flat_ranks,
        hadamard_is_identity=is_id,
        hadamard_rank_bound_holds=t <= rank_prod,
        rank_lower=rank_lower,
        inequality_holds=rank_lower ** exponent >= t,
    )


# -- the random three-party construction ---------------------------------------------

def two_identical_inputs(v1: int, v2: int) -> Tuple[Input, ...]:
    """The six inputs with exactly two coordinates equal to ``v1`` or to ``v2``."""
    return ((v1, v1, v2), (v1, v2, v1), (v2, v1, v1), (v1, v2, v2), (v2, v1, v2), (v2, v2, v1))


def sample_tfooling_function(n: int, seed: int) -> BoolFunction:
    """Draw a three-argument function on ``2^n`` values per player.

    Diagonal inputs get 1; for each pair ``v1 < v2`` exactly one of the six
    two-identical inputs (chosen uniformly) gets 0 and the other five get 1;
    inputs with three distinct values get independent fair bits.
    """
    if not (0 <= n <= 3):
        raise PreconditionError("sample_tfooling_function supports n <= 3")
    m = 1 << n
    rng = np.random.default_rng(seed)
    table = np.zeros((m, m, m), dtype=np.uint8)
    for v in range(m):
        table[v, v, v] = 1
    for v1 in range(m):
        for v2 in range(v1 + 1, m):
            six = two_identical_inputs(v1, v2)
            zero = int(rng.integers(6))
            for idx, x in enumerate(six):
                table[x] = 0 if idx == zero else 1
    for x in range(m):
        for y in range(m):
            for z in range(m):
                if x != y and y != z and x != z:
                    table[x, y, z] = int(rng.integers(2))
    return BoolFunction(table)


def union_bound_holds(n: int, t: int) -> bool:
    """Test ``2^{3nt} (35/36)^{(t^2-2t)/12} < 1/6``.

    Raised to the 12th power this is ``2^{36nt} 35^e 6^12 < 36^e`` with
    ``e = t^2 - 2t``. The log-domain margin decides unless it is tiny, in
    which case the integers are compared exactly.
    """
    if t < 2:
        return False
    e = t * t - 2 * t
    margin = 36 * n * t * math.log(2) + e * math.log(35 / 36) + 12 * math.log(6)
    if abs(margin) > 1e-6 * (1 + e):
        return margin < 0
    return 2 ** (36 * n * t) * 35 ** e * 6 ** 12 < 36 ** e


def induced_fooling_profile(f: BoolFunction) -> Dict[str, Dict[int, int]]:
    """Maximum 0- and 1-fooling set sizes of each singleton-vs-rest induced function."""
    out = {}
    for i in range(f.k):
        g = induced_function(f, Bipartition.of(f.k, {i}))
        out[f"f{i + 1}"] = {b: max_fooling_set(g, b)[0] for b in (0, 1)}
    return out
