"""Tensor rank upper bounds with explicit decomposition certificates.

Each ``decompose_*`` routine returns a :class:`BoundCertificate` whose
decomposition has been re-evaluated and compared with the input before it is
handed back. Lower bounds come from 2-flattening ranks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import CapExceeded, InvariantViolation, PreconditionError, ShapeError
from .linalg import Field
from .tensor import (
    Bipartition,
    Decomposition,
    KTensor,
    SeparatingCollection,
    all_bipartitions,
    eval_decomposition,
    flatten,
    flattening_rank,
    is_separating,
)

CUBE3 = "cube3"
SIMPLE = "simple"
SEPARATING = "separating"


@dataclass(frozen=True)
class FlatteningRankProfile:
    collection: SeparatingCollection
    bounds: Mapping[Bipartition, int]

    def __post_init__(self):
        bounds = dict(self.bounds)
        for p, d in bounds.items():
            if p not in self.collection.parts:
                raise PreconditionError(f"bound given for {p}, which is not in the collection")
            if int(d) < 1:
                raise PreconditionError(f"bound for {p} must be >= 1, got {d}")
        missing = [str(p) for p in self.collection.parts if p not in bounds]
        if missing:
            raise PreconditionError(f"no bound for {missing}")
        object.__setattr__(self, "bounds", {p: int(d) for p, d in bounds.items()})

    @property
    def d_max(self) -> int:
        return max(self.bounds.values(), default=1)


@dataclass(frozen=True)
class BoundCertificate:
    method: str
    bound: int
    decomposition: Decomposition
    details: dict = dc_field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.decomposition)


def _certify(t: KTensor, terms: List[Tuple], bound: int, method: str, details: dict) -> BoundCertificate:
    dec = Decomposition(t.shape, t.field, tuple(terms))
    if len(dec) > bound:
        raise InvariantViolation(f"{method}: {len(dec)} terms exceed the bound {bound}")
    if eval_decomposition(dec) != t:
        raise InvariantViolation(f"{method}: decomposition does not reproduce the input")
    return BoundCertificate(method, bound, dec, details)


def _is_zero_vec(v) -> bool:
    return all(x == 0 for x in v)


def _norm(arr: np.ndarray, f: Field) -> np.ndarray:
    if f is Field.GF2:
        return np.asarray(np.frompyfunc(f.coerce, 1, 1)(arr), dtype=object)
    return arr


def _scale(v: Sequence, c, f: Field) -> Tuple:
    return tuple(f.coerce(c * x) for x in v)


def _columns(rows: List[list], cols: Sequence[int]) -> List[Tuple]:
    return [tuple(r[c] for r in rows) for c in cols]


def _require_arity(t: KTensor, k: int, op: str):
    if t.k != k:
        raise ShapeError(f"{op} needs arity {k}, got {t.k}")


def flattening_rank_profile(t: KTensor, collection: SeparatingCollection) -> FlatteningRankProfile:
    """Exact flattening ranks over ``collection``; zero ranks are lifted to 1."""
    bounds = {p: max(1, flattening_rank(t, p.left)) for p in collection.parts}
    return FlatteningRankProfile(collection, bounds)


# -- three-way tensors -------------------------------------------------------

def induced_matrices_3(m: KTensor) -> Tuple[KTensor, KTensor, KTensor]:
    """``M1[x,(y,z)]``, ``M2[y,(x,z)]`` and ``M3[z,(x,y)]``."""
    _require_arity(m, 3, "induced_matrices_3")
    return (
        flatten(m, [[0], [1, 2]]),
        flatten(m, [[1], [0, 2]]),
        flatten(m, [[2], [0, 1]]),
    )


def cube_decompose_3(m: KTensor) -> BoundCertificate:
    """At most ``rank(M1) * rank(M2)`` terms ``v_i (x) u_j (x) w_ij``.

    ``v`` spans the columns of M1, ``u`` the columns of M2, and each slice
    ``A_z = V Q_z U`` is solved exactly; ``w_ij[z] = Q_z[i, j]``.
    """
    _require_arity(m, 3, "cube_decompose_3")
    f = m.field
    m1, m2, _ = induced_matrices_3(m)
    rows1, rows2 = m1.rows(), m2.rows()
    v = _columns(rows1, linalg.independent_columns(rows1, f))
    u = _columns(rows2, linalg.independent_columns(rows2, f))
    r1, r2 = len(v), len(u)
    details = {"r1": r1, "r2": r2}
    if r1 == 0:
        return _certify(m, [], 0, CUBE3, details)
    vmat = [list(col) for col in zip(*v)]          # m0 x r1, columns v_i
    umat = [list(row) for row in u]                # r2 x m1, rows u_j
    vrows = linalg.independent_rows(vmat, f)
    ucols = linalg.independent_columns(umat, f)
    vinv = linalg.inverse([vmat[r] for r in vrows], f)
    uinv = linalg.inverse([[row[c] for c in ucols] for row in umat], f)
    arr = m.array()
    nz = m.shape[2]
    w = [[[f.zero] * nz for _ in range(r2)] for _ in range(r1)]
    for z in range(nz):
        minor = [[arr[x, y, z] for y in ucols] for x in vrows]
        q = linalg.matmul(linalg.matmul(vinv, minor, f), uinv, f)
        for i in range(r1):
            for j in range(r2):
                w[i][j][z] = q[i][j]
    terms = [(v[i], u[j], tuple(w[i][j])) for i in range(r1) for j in range(r2) if not _is_zero_vec(w[i][j])]
    return _certify(m, terms, r1 * r2, CUBE3, details)


# -- all-but-one axis bound ----------------------------------------------------

def decompose_simple(t: KTensor) -> BoundCertificate:
    """At most ``d_1 ... d_{k-1}`` terms, ``d_i`` the rank of the {i}-vs-rest flattening."""
    if t.k < 2:
        raise ShapeError(f"decompose_simple needs arity >= 2, got {t.k}")
    f, k = t.field, t.k
    bases = []
    for i in range(k - 1):
        rows = flatten(t, [[i], [a for a in range(k) if a != i]]).rows()
        bases.append(_columns(rows, linalg.independent_columns(rows, f)))
    dims = [len(b) for b in bases]
    details = {"d": dims}
    bound = math.prod(dims)
    if bound == 0:
        return _certify(t, [], 0, SIMPLE, details)
    head_shape = t.shape[:-1]
    labels = list(itertools.product(*[range(d) for d in dims]))
    kmat = []
    for j in itertools.product(*[range(mi) for mi in head_shape]):
        kmat.append([f.coerce(math.prod(bases[i][l[i]][j[i]] for i in range(k - 1))) for l in labels])
    rhs = flatten(t, [list(range(k - 1)), [k - 1]]).rows()
    coeff = linalg.solve(kmat, rhs, f)
    terms = []
    for l, ul in zip(labels, coeff):
        if not _is_zero_vec(ul):
            terms.append(tuple(bases[i][l[i]] for i in range(k - 1)) + (tuple(ul),))
    return _certify(t, terms, bound, SIMPLE, details)


# -- separating collections ------------------------------------------------------

@dataclass(frozen=True)
class NNode:
    """One evaluated subset in the bound recursion."""

    subset: Tuple[int, ...]
    value: int
    partition: Optional[Bipartition]
    branch: Optional[str]
    children: Tuple["NNode", ...] = ()


@dataclass(frozen=True)
class NResult:
    value: int
    tree: NNode
    choices: Mapping[FrozenSet[int], Tuple[Bipartition, str]]


SQUARE = "square"
SINGLETON = "singleton"


def _applicable(parts: Iterable[Bipartition], h: FrozenSet[int]):
    for p in parts:
        a, b = h & p.left, h & p.right
        if a and b:
            yield p, a, b


def n_recursion(collection: SeparatingCollection, bounds: Mapping[Bipartition, int] | FlatteningRankProfile) -> NResult:
    """Evaluate the subset recursion N over all nonempty subsets reachable from [k].

    N(H) = 1 for |H| = 1, else the minimum of ``d^2 N(H&I) N(H&J)`` over the
    members splitting H, together with ``d N(H&I) N(H&J)`` for members that
    cut a single element off H (either side). Ties go to the smallest
    partition in canonical order, then to the singleton branch.
    """
    if isinstance(bounds, FlatteningRankProfile):
        bounds = bounds.bounds
    else:
        bounds = FlatteningRankProfile(collection, bounds).bounds
    parts = list(collection.parts)
    memo: Dict[FrozenSet[int], NNode] = {}

    def rec(h: FrozenSet[int]) -> NNode:
        if h in memo:
            return memo[h]
        if len(h) == 1:
            node = NNode(tuple(sorted(h)), 1, None, None)
            memo[h] = node
            return node
        best = None
        for p, a, b in _applicable(parts, h):
            na, nb = rec(a), rec(b)
            d = bounds[p]
            cands = []
            if len(a) == 1 or len(b) == 1:
                cands.append((d * na.value * nb.value, SINGLETON))
            cands.append((d * d * na.value * nb.value, SQUARE))
            for val, branch in cands:
                if best is None or val < best[0]:
                    best = (val, p, branch, (na, nb))
        if best is None:
            raise InvariantViolation(f"no member of the collection splits {sorted(h)}")
        node = NNode(tuple(sorted(h)), best[0], best[1], best[2], best[3])
        memo[h] = node
        return node

    root = rec(frozenset(range(collection.k)))
    choices = {frozenset(n.subset): (n.partition, n.branch) for n in memo.values() if n.partition is not None}
    return NResult(root.value, root, choices)


class _SepContext:
    def __init__(self, field: Field, plan: Callable[[FrozenSet[int]], Tuple[FrozenSet[int], FrozenSet[int], bool]]):
        self.field = field
        self.plan = plan


def first_member_plan(parts: Sequence[Bipartition]):
    """Pick the first member (canonical order) that splits the current axis set."""
    def plan(h):
        for _, a, b in _applicable(parts, h):
            return a, b, False
        raise InvariantViolation(f"no member of the collection splits {sorted(h)}")
    return plan


def argmin_plan(result: NResult):
    """Follow the argmin tree of :func:`n_recursion`, using the singleton branch where chosen."""
    def plan(h):
        p, branch = result.choices[h]
        return h & p.left, h & p.right, branch == SINGLETON
    return plan


def _split(arr: np.ndarray, axes: Tuple[int, ...], left: FrozenSet[int]):
    li = [p for p, a in enumerate(axes) if a in left]
    ri = [p for p, a in enumerate(axes) if a not in left]
    lshape = tuple(arr.shape[p] for p in li)
    rshape = tuple(arr.shape[p] for p in ri)
    mat = arr.transpose(li + ri).reshape(math.prod(lshape), math.prod(rshape))
    return mat, tuple(axes[p] for p in li), lshape, tuple(axes[p] for p in ri), rshape


def _combine(coeffs, rows, f: Field) -> np.ndarray:
    acc = None
    for c, row in zip(coeffs, rows):
        if c == 0:
            continue
        acc = row * c if acc is None else acc + row * c
    if acc is None:
        acc = np.empty(rows[0].shape, dtype=object)
        acc.fill(f.zero)
    return _norm(acc, f)


def _sep(arr: np.ndarray, axes: Tuple[int, ...], ctx: _SepContext) -> List[Dict[int, Tuple]]:
    f = ctx.field
    if len(axes) == 1:
        vec = tuple(arr.reshape(-1))
        return [] if _is_zero_vec(vec) else [{axes[0]: vec}]
    left, right, singleton = ctx.plan(frozenset(axes))
    if singleton and len(left) != 1:
        left, right = right, left
    mat, iax, ishape, jax, jshape = _split(arr, axes, left)
    rows = [list(r) for r in mat]
    cols = linalg.independent_columns(rows, f)
    d = len(cols)
    if d == 0:
        return []
    # zeta_q = e_{cols[q]}^*, xi_r = e_{rsel[r]}^*: an invertible d x d minor
    rsel = linalg.independent_rows([[r[c] for c in cols] for r in rows], f)
    ainv = linalg.inverse([[rows[r][c] for c in cols] for r in rsel], f)
    t_q = [np.array([r[c] for r in rows], dtype=object).reshape(ishape) for c in cols]
    t_prime = [mat[r].reshape(jshape) for r in rsel]

    out: List[Dict[int, Tuple]] = []
    if singleton:
        # <T_p, xi_r> = delta_{p,r}, so S'_q = <T, xi_q> is itself a pure pairing
        for q in range(d):
            s_q = _combine(ainv[q], t_prime, f)
            vec = tuple(t_q[q].reshape(-1))
            for term in _sep(s_q, jax, ctx):
                out.append({iax[0]: vec, **term})
        return out

    t_terms = [_sep(tq, iax, ctx) for tq in t_q]
    tp_terms = [_sep(tp, jax, ctx) for tp in t_prime]
    lead = jax[0]
    for q in range(d):
        s_terms = []
        for r in range(d):
            c = ainv[q][r]
            if c == 0:
                continue
            for term in tp_terms[r]:
                scaled = dict(term)
                scaled[lead] = _scale(term[lead], c, f)
                s_terms.append(scaled)
        for ta in t_terms[q]:
            for tb in s_terms:
                out.append({**ta, **tb})
    return out


def _as_collection(c, k: int) -> SeparatingCollection:
    if isinstance(c, SeparatingCollection):
        if c.k != k:
            raise PreconditionError(f"collection for {c.k} axes applied to an arity-{k} tensor")
        return c
    parts = tuple(c)
    if not is_separating(parts, k):
        raise PreconditionError("collection is not separating")
    return SeparatingCollection(k, parts)


def decompose_separating(t: KTensor, collection, strategy: str = "first") -> BoundCertificate:
    """Recursive certificate through a separating collection of bipartitions.

    With ``strategy="first"`` the size is at most ``d_max ** (2(k-1))``. With
    ``strategy="argmin"`` the split at each level follows the argmin tree of
    :func:`n_recursion` on the exact flattening ranks, and the size is at
    most the resulting N([k]).
    """
    k = t.k
    if k < 1:
        raise ShapeError("decompose_separating needs arity >= 1")
    coll = _as_collection(collection, k)
    ranks = {p: flattening_rank(t, p.left) for p in coll.parts}
    d_max = max(ranks.values(), default=1 if not t.is_zero() else 0)
    details = {"d_max": d_max, "strategy": strategy, "ranks": {str(p): r for p, r in ranks.items()}}
    if strategy == "first":
        plan = first_member_plan(coll.parts)
        bound = d_max ** (2 * (k - 1))
    elif strategy == "argmin":
        if k == 1:
            plan, bound = first_member_plan(coll.parts), 1
        else:
            res = n_recursion(coll, {p: max(1, r) for p, r in ranks.items()})
            plan, bound = argmin_plan(res), res.value
            details["n_value"] = res.value
    else:
        raise PreconditionError(f"unknown strategy {strategy!r}")
    if k == 1:
        bound = 0 if t.is_zero() else 1
    axes = tuple(range(k))
    terms = _sep(t.array(), axes, _SepContext(t.field, plan))
    ordered = [tuple(term[a] for a in axes) for term in terms]
    return _certify(t, ordered, bound, SEPARATING, details)


# -- lower bounds and the GF(2) oracle -------------------------------------------

def rank_lower_bound_flattenings(t: KTensor, collection: Optional[Iterable[Bipartition]] = None) -> int:
    """Largest 2-flattening rank; a lower bound on tensor rank."""
    if t.k < 2:
        return 0 if t.is_zero() else 1
    parts = all_bipartitions(t.k) if collection is None else list(collection)
    return max((flattening_rank(t, p.left) for p in parts), default=0)


def rank_bracket(t: KTensor) -> Tuple[int, int, BoundCertificate]:
    """``(lower, upper, certificate)`` bracketing the tensor rank over ``t.field``."""
    lo = rank_lower_bound_flattenings(t)
    certs = []
    if t.k == 3:
        certs.append(cube_decompose_3(t))
    if t.k >= 2:
        certs.append(decompose_simple(t))
        certs.append(decompose_separating(t, all_bipartitions(t.k)))
    else:
        certs.append(decompose_separating(t, []))
    best = min(certs, key=lambda c: c.size)
    if lo > best.size:
        raise InvariantViolation("flattening rank exceeds a certificate size")
    return lo, best.size, best


TINY_CELL_CAP = 512
TINY_SEARCH_CAP = 1 << 22


def _pure_masks(shape: Sequence[int]) -> List[int]:
    strides = [math.prod(shape[i + 1:]) for i in range(len(shape))]
    per_axis = []
    for m, s in zip(shape, strides):
        per_axis.append([[j * s for j in range(m) if v >> j & 1] for v in range(1, 1 << m)])
    masks = set()
    for combo in itertools.product(*per_axis):
        mask = 0
        for offs in itertools.product(*combo):
            mask |= 1 << sum(offs)
        masks.add(mask)
    return sorted(masks)


def tiny_tensor_rank_exact(t: KTensor, limit: int = 4) -> Optional[int]:
    """Exact GF(2) tensor rank by meet-in-the-middle search; None if above ``limit``.

    Test oracle only: refuses tensors with more than 512 cells.
    """
    if t.field is not Field.GF2:
        raise PreconditionError("tiny_tensor_rank_exact works over GF(2) only")
    if t.size > TINY_CELL_CAP:
        raise CapExceeded("tiny_tensor_rank_exact cells", t.size, TINY_CELL_CAP)
    n_pure = math.prod((1 << m) - 1 for m in t.shape)
    if n_pure > TINY_SEARCH_CAP:
        raise CapExceeded("tiny_tensor_rank_exact pure tensors", n_pure, TINY_SEARCH_CAP)
    target = 0
    for i, v in enumerate(t.values()):
        if v:
            target |= 1 << i
    if target == 0:
        return 0
    pures = _pure_masks(t.shape)
    levels = [{0}]
    for r in range(1, limit + 1):
        a = (r + 1) // 2
        while len(levels) <= a:
            prev = levels[-1]
            if len(prev) * len(pures) > TINY_SEARCH_CAP * 4:
                raise CapExceeded("tiny_tensor_rank_exact level size", len(prev) * len(pures), TINY_SEARCH_CAP * 4)
            levels.append(prev | {x ^ p for x in prev for p in pures})
        la, lb = levels[a], levels[r - a]
        small, big = (la, lb) if len(la) <= len(lb) else (lb, la)
        if any((target ^ x) in big for x in small):
            return r
    return None
