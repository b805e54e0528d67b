"""Named invariant suites. Each returns a plain, deterministic results dict."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from .cc_oracles import (
    BoolFunction,
    bound_formulas,
    ceil_log2,
    cover_number,
    det_cc_exact,
    induced_function,
    nondet_cc,
    nondet_total,
    partition_argument_bound,
    tree_leaf_boxes,
)
from .errors import CapExceeded
from .fooling import is_fooling_set, max_fooling_set, rank_vs_fooling_check, sample_tfooling_function, two_identical_inputs
from .linalg import Field
from .rank_bounds import (
    cube_decompose_3,
    decompose_separating,
    decompose_simple,
    flattening_rank_profile,
    induced_matrices_3,
    n_recursion,
    rank_lower_bound_flattenings,
)
from .separations import (
    LATIN_COUNTS,
    build_fL,
    build_relation_R,
    check_ne_reduction,
    constant_output,
    count_covers,
    ip_function,
    latin_enumerate,
    rel_det_cc_exact,
    relation_tree_valid,
    zero_comm_check,
)
from .tensor import (
    Bipartition,
    Decomposition,
    KTensor,
    SeparatingCollection,
    all_bipartitions,
    eval_decomposition,
    flatten,
    matrix_rank,
    singleton_bipartitions,
)

MAX_VIOLATIONS = 5


@contextmanager
def order_preserving_mapper(threads: int):
    """``map``-like callable; results come back in input order for any thread count."""
    if threads <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool.map


def _summary(name: str, rows: List[dict], extra: dict | None = None) -> dict:
    bad = [r for r in rows if not r["ok"]]
    out = {"suite": name, "passed": not bad, "checked": len(rows), "violations": len(bad),
           "examples": bad[:MAX_VIOLATIONS]}
    if extra:
        out.update(extra)
    return out


def all_functions(m: int = 2, k: int = 3) -> List[BoolFunction]:
    """Every function on the cube [m]^k, only while there are at most 2^8 of them."""
    cells = m ** k
    if cells > 8:
        raise CapExceeded("exhaustive function count", 2 ** cells, 2 ** 8)
    shape = (m,) * k
    return [BoolFunction.from_index(shape, code) for code in range(2 ** cells)]


# -- tensors -------------------------------------------------------------------------

def example_2x3x5() -> KTensor:
    return KTensor(list(range(30)), (2, 3, 5))


def suite_flattening(**_) -> dict:
    t = example_2x3x5()
    flat = flatten(t, [[0, 1], [2]])
    same = sorted(flat.values()) == sorted(t.values())
    rows = [{"ok": flat.shape == (6, 5) and same, "shape": list(flat.shape), "rank": matrix_rank(flat)}]
    return _summary("flattening", rows, {"shape": list(flat.shape), "rank": rows[0]["rank"]})


def random_tensor(rng: np.random.Generator, shape, field: Field) -> KTensor:
    n = int(np.prod(shape))
    if field is Field.GF2:
        return KTensor([int(v) for v in rng.integers(0, 2, n)], shape, Field.GF2)
    num = rng.integers(-3, 4, n)
    den = rng.integers(1, 4, n)
    return KTensor([Fraction(int(a), int(b)) for a, b in zip(num, den)], shape, Field.Q)


def yz_equality_tensor(m: int) -> KTensor:
    """1 iff y = z, independent of x."""
    return KTensor([[[1 if y == z else 0 for z in range(m)] for y in range(m)] for _ in range(m)])


def suite_cube(seed: int = 0, count: int = 100, mapper=map, **_) -> dict:
    rng = np.random.default_rng(seed)
    jobs = [random_tensor(rng, (3, 3, 3), field) for field in (Field.GF2, Field.Q) for _ in range(count)]

    def run(t):
        m1, m2, _m3 = induced_matrices_3(t)
        r1, r2 = matrix_rank(m1), matrix_rank(m2)
        cert = cube_decompose_3(t)
        ok = cert.size <= r1 * r2 and eval_decomposition(cert.decomposition) == t
        return {"ok": ok, "field": t.field.value, "size": cert.size, "r1r2": r1 * r2}

    rows = list(mapper(run, jobs))
    yz = yz_equality_tensor(4)
    m1 = induced_matrices_3(yz)[0]
    fc = cube_decompose_3(yz)
    yz_row = {"ok": fc.size <= 4 and matrix_rank(m1) == 1 and eval_decomposition(fc.decomposition) == yz,
                "case": "yz-equality m=4", "size": fc.size, "rank_m1": matrix_rank(m1)}
    rows.append(yz_row)
    return _summary("cube", rows, {"yz_equality": {k: v for k, v in yz_row.items() if k != "ok"}})


TWO_CUT_COLLECTION = (((0, 1),), ((0, 2),))  # {1,2}|{3,4} and {1,3}|{2,4}


def two_cut_collection() -> SeparatingCollection:
    return SeparatingCollection(4, tuple(Bipartition.of(4, side) for (side,) in TWO_CUT_COLLECTION))


def suite_certificates(seed: int = 0, count: int = 50, mapper=map, **_) -> dict:
    rng = np.random.default_rng(seed)
    jobs = []
    for shape in ((2, 2, 2), (2, 2, 2, 2)):
        k = len(shape)
        collections = [all_bipartitions(k), singleton_bipartitions(k)]
        if k == 4:
            collections.append(list(two_cut_collection().parts))
        for i in range(count):
            field = (Field.GF2, Field.Q)[i % 2]
            jobs.append((random_tensor(rng, shape, field), collections[i % len(collections)]))

    def run(job):
        t, coll = job
        k = t.k
        lo = rank_lower_bound_flattenings(t)
        sep = decompose_separating(t, coll)
        simple = decompose_simple(t)
        d_max = flattening_rank_profile(t, SeparatingCollection(k, tuple(coll))).d_max
        d_i = [max(1, matrix_rank(flatten(t, [[i], [a for a in range(k) if a != i]]))) for i in range(k - 1)]
        simple_bound = int(np.prod(d_i))
        ok = (
            sep.size <= d_max ** (2 * (k - 1))
            and simple.size <= simple_bound
            and eval_decomposition(sep.decomposition) == t
            and eval_decomposition(simple.decomposition) == t
            and (t.is_zero() or min(sep.size, simple.size) >= lo)
        )
        return {"ok": ok, "k": k, "field": t.field.value, "separating": sep.size, "simple": simple.size, "lower": lo}

    rows = list(mapper(run, jobs))
    return _summary("certificates", rows)


def suite_n_recursion(**_) -> dict:
    coll = two_cut_collection()
    rows = []
    for d1, d2 in ((2, 3), (3, 2)):
        res = n_recursion(coll, {coll.parts[0]: d1, coll.parts[1]: d2})
        rows.append({"ok": res.value == d1 * d1 * d2 * d2, "d1": d1, "d2": d2, "value": res.value})
    # the refined recursion never exceeds the uniform d_max bound
    for k in (3, 4):
        singles = SeparatingCollection(k, tuple(singleton_bipartitions(k)))
        for prof in itertools.product((1, 2, 3), repeat=len(singles)):
            res = n_recursion(singles, dict(zip(singles.parts, prof)))
            bound = max(prof) ** (2 * (k - 1))
            rows.append({"ok": res.value <= bound, "k": k, "profile": list(prof), "value": res.value})
    return _summary("n-recursion", rows, {"two_cut": rows[:2]})


# -- communication complexity -----------------------------------------------------

def leaf_rank_certificate(f: BoolFunction, tree) -> Decomposition:
    """Sum of the indicator outer products of the 1-leaves; equals the 0/1 tensor of f."""
    terms = []
    for box, out in tree_leaf_boxes(tree, f.shape):
        if out == 1 and not box.is_empty():
            terms.append(tuple(tuple(1 if v in s else 0 for v in range(m)) for s, m in zip(box.sets, f.shape)))
    return Decomposition(f.shape, Field.Q, tuple(terms))


def sandwich_row(f: BoolFunction) -> dict:
    d, tree = det_cc_exact(f)
    t = f.tensor(Field.Q)
    lo = rank_lower_bound_flattenings(t)
    cert = leaf_rank_certificate(f, tree)
    cert_ok = eval_decomposition(cert) == t
    hi = len(cert)
    lpar, _ = partition_argument_bound(f)
    c, n_all, n_cap = nondet_total(f)
    fool = [max_fooling_set(f, b)[0] for b in (0, 1)]
    checks = {
        "log_rank": cert_ok and lo <= hi and ceil_log2(hi) <= d,
        "lpar": lpar <= d,
        "nondet": n_all <= n_cap,
        "fooling": all(ceil_log2(tb) <= d for tb in fool),
    }
    return {"ok": all(checks.values()), "code": _code(f), "D": d, "rank": [lo, hi], "lpar": lpar,
            "N": n_all, "N_cap": n_cap, "fooling": fool, "checks": checks}


def _code(f: BoolFunction) -> int:
    return int(sum(int(v) << i for i, v in enumerate(f.table.reshape(-1))))


def suite_sandwich(m: int = 2, mapper=map, **_) -> dict:
    rows = list(mapper(sandwich_row, all_functions(m)))
    slim = [{k: v for k, v in r.items() if k in ("ok", "code", "D", "rank", "lpar", "N", "N_cap", "fooling", "checks")}
            for r in rows]
    hist = {}
    for r in rows:
        hist[str(r["D"])] = hist.get(str(r["D"]), 0) + 1
    exact = sum(1 for r in rows if r["rank"][0] == r["rank"][1])
    return _summary("sandwich", slim, {"d_histogram": dict(sorted(hist.items())), "rank_exact": exact})


def rank_fooling_row(f: BoolFunction) -> dict:
    out = {"ok": True, "code": _code(f)}
    for b in (0, 1):
        t, fs = max_fooling_set(f, b)
        if t == 0:
            out[f"b{b}"] = {"t": 0}
            continue
        rep = rank_vs_fooling_check(f, fs)
        out[f"b{b}"] = {"t": t, "rank_lower": rep.rank_lower, "identity": rep.hadamard_is_identity}
        out["ok"] = out["ok"] and rep.all_hold
    return out


def suite_rank_vs_fooling(m: int = 2, mapper=map, **_) -> dict:
    rows = list(mapper(rank_fooling_row, all_functions(m)))
    return _summary("rank-vs-fooling", rows)


def covers_row(f: BoolFunction) -> dict:
    d, tree = det_cc_exact(f)
    leaves = tree_leaf_boxes(tree, f.shape)
    ok_partition = len(leaves) <= 2 ** d and sum(b.size() for b, _ in leaves) == int(np.prod(f.shape))
    ok = ok_partition
    for b in (0, 1):
        c, cover = cover_number(f, b)
        ok = ok and c <= sum(1 for _, out in leaves if out == b)
        nb = nondet_cc(f, b).bits
        for p in all_bipartitions(f.k):
            ok = ok and nondet_cc(induced_function(f, p), b).bits <= nb
        _, fs = max_fooling_set(f, b)
        for x, z in itertools.combinations(fs.members, 2):
            ok = ok and not any(x in box and z in box for box in cover.boxes)
    return {"ok": bool(ok), "code": _code(f)}


def suite_covers(m: int = 2, mapper=map, **_) -> dict:
    rows = list(mapper(covers_row, all_functions(m)))
    ne = BoolFunction.from_callable((2, 2), lambda a, b: int(a != b))
    rep = nondet_cc(ne, 1)
    ne_row = {"ok": rep.cover_size == 2 and rep.bits == 1, "case": "NE 1-bit", "C1": rep.cover_size, "N1": rep.bits}
    rows.append(ne_row)
    counts = [count_covers(2, t) for t in (1, 2)]
    for c in counts:
        rows.append({"ok": c["holds"], "case": f"cover count m=2 t={c['t']}", **{k: c[k] for k in ("collections", "bound")}})
    return _summary("covers", rows, {"ne": {k: v for k, v in ne_row.items() if k != "ok"}})


# -- separations ----------------------------------------------------------------------

def suite_latin_counts(max_m: int = 4, **_) -> dict:
    rows = []
    for m in range(1, max_m + 1):
        n = len(latin_enumerate(m))
        lower = bound_formulas(m).latin_lower
        rows.append({"ok": n == LATIN_COUNTS[m] and n >= lower, "m": m, "count": n, "lower": lower})
    return _summary("latin-counts", rows, {"counts": [r["count"] for r in rows]})


def suite_ne_structure(m: int = 4, mapper=map, **_) -> dict:
    squares = latin_enumerate(m)
    res = list(mapper(lambda sq: check_ne_reduction(build_fL(sq)), squares))
    rows = [{"ok": r == (True, True, True), "index": i} for i, r in enumerate(res)]
    return _summary("ne-structure", rows, {"m": m, "squares": len(squares)})


def suite_relation(n: int = 1, **_) -> dict:
    ip = ip_function(n)
    rel = build_relation_R(ip, ip, ip)
    rows = []
    for p in all_bipartitions(3):
        z = zero_comm_check(rel, p)
        rows.append({"ok": z.solvable, "partition": str(p), "side": [i + 1 for i in z.side] if z.solvable else None})
    const = constant_output(rel)
    d, tree = rel_det_cc_exact(rel)
    rows.append({"ok": const is None and d > 0 and relation_tree_valid(rel, tree), "case": "det", "value": d,
                 "constant_output": const})
    return _summary("relation", rows, {"det_cc": d})


def suite_tfooling(seed: int = 0, count: int = 100, n: int = 2, mapper=map, **_) -> dict:
    rng = np.random.default_rng(seed)
    seeds = [int(s) for s in rng.integers(0, 2 ** 63, size=count)]
    m = 1 << n

    def run(s):
        f = sample_tfooling_function(n, s)
        diag = [(v, v, v) for v in range(m)]
        ok = bool(is_fooling_set(f, diag, 1))
        for v1, v2 in itertools.combinations(range(m), 2):
            ok = ok and sum(1 for x in two_identical_inputs(v1, v2) if f(x) == 0) == 1
        return {"ok": ok, "seed": s}

    rows = list(mapper(run, seeds))
    return _summary("tfooling", rows)


SUITES: Dict[str, Callable[..., dict]] = {
    "flattening": suite_flattening,
    "cube": suite_cube,
    "certificates": suite_certificates,
    "n-recursion": suite_n_recursion,
    "sandwich": suite_sandwich,
    "rank-vs-fooling": suite_rank_vs_fooling,
    "covers": suite_covers,
    "latin-counts": suite_latin_counts,
    "ne-structure": suite_ne_structure,
    "relation": suite_relation,
    "tfooling": suite_tfooling,
}


def run_suites(names, threads: int = 1, seed: int = 0, m: int = 2) -> Dict[str, dict]:
    out = {}
    with order_preserving_mapper(threads) as mapper:
        for name in names:
            fn = SUITES[name]
            kwargs = {"seed": seed, "mapper": mapper}
            if name in ("sandwich", "rank-vs-fooling", "covers"):
                kwargs["m"] = m
            out[name] = fn(**kwargs)
    return out
