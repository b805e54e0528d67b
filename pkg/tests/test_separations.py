import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naive import box_cells, brute_cover_number, fools, ip, latin_count_by_permutations, relation_clauses
from nihcc.cc_oracles import BoolFunction, bound_formulas, superfactorial, verify_cover
from nihcc.errors import CapExceeded, PreconditionError, ShapeError
from nihcc.separations import (
    LATIN_COUNTS,
    KRelation,
    LatinSquare,
    build_fL,
    build_relation_R,
    check_ne_reduction,
    constant_output,
    count_covers,
    fL_cover_number,
    fL_hardness_experiment,
    fL_injectivity_check,
    format_latin,
    ip_function,
    latin_count_report,
    latin_enumerate,
    latin_sample,
    parse_latin,
    rel_det_cc_exact,
    relation_tree_valid,
    zero_comm_check,
)
from nihcc.suites import yz_equality_tensor
from nihcc.tensor import Bipartition, all_bipartitions


def cyclic(m):
    return LatinSquare(m, tuple(tuple((x + y) % m for y in range(m)) for x in range(m)))


def test_latin_validation():
    with pytest.raises(PreconditionError):
        LatinSquare(2, ((0, 1), (0, 1)))
    with pytest.raises(ShapeError):
        LatinSquare(2, ((0, 1),))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_latin_counts_match_permutation_oracle(m):
    squares = latin_enumerate(m)
    assert len(squares) == latin_count_by_permutations(m) == LATIN_COUNTS[m]
    assert len(set(squares)) == len(squares)
    assert len(squares) >= superfactorial(m)


def test_latin_count_constants():
    assert [LATIN_COUNTS[m] for m in range(1, 6)] == [1, 2, 12, 576, 161280]
    assert [superfactorial(m) for m in range(1, 6)] == [1, 2, 12, 288, 34560]
    rep = latin_count_report(4)
    assert rep == {"m": 4, "count": 576, "lower": 288, "holds": True}


@pytest.mark.slow
def test_latin_count_five():
    assert latin_count_by_permutations(5) == 161280
    assert len(latin_enumerate(5)) == 161280


def test_enumeration_is_lexicographic():
    grids = [sq.grid for sq in latin_enumerate(3)]
    assert grids == sorted(grids)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32))
def test_sampler_gives_latin_squares(m, seed):
    sq = latin_sample(m, seed)
    assert sq.m == m
    assert latin_sample(m, seed) == sq


def test_sampler_caps():
    with pytest.raises(PreconditionError):
        latin_sample(65, 0)


def test_text_roundtrip():
    sq = latin_sample(5, 3)
    assert parse_latin(format_latin(sq)) == sq
    assert format_latin(cyclic(2)) == "latin m=2\n1 2\n2 1\n"
    with pytest.raises(PreconditionError):
        parse_latin("1 2\n2 1")


def test_reduced_and_canonical_forms():
    sq = latin_sample(4, 11)
    r = sq.reduced()
    assert r.grid[0] == tuple(range(4))
    assert [row[0] for row in r.grid] == list(range(4))
    assert r.isotopy_canonical() == sq.isotopy_canonical()
    assert all(c.main_class() == sq.main_class() for c in sq.conjugates())


def test_main_classes_counts():
    assert len({sq.main_class() for sq in latin_enumerate(4)}) == 2


def test_fL_has_one_zero_per_line():
    for sq in latin_enumerate(3):
        f = build_fL(sq)
        assert int((f.table == 0).sum()) == 9
        assert check_ne_reduction(f) == (True, True, True)
        for x, y in itertools.product(range(3), repeat=2):
            assert f((x, y, sq[x, y])) == 0


def test_ne_structure_fails_elsewhere():
    assert check_ne_reduction(BoolFunction(np.ones((3, 3, 3)))) == (False, False, False)
    yz = BoolFunction(yz_equality_tensor(3))
    assert not all(check_ne_reduction(yz))


def test_ne_structure_at_four():
    assert all(check_ne_reduction(build_fL(sq)) == (True, True, True) for sq in latin_enumerate(4))


def test_fL_covers_small_orders():
    for m, expected in ((2, 4), (3, 9)):
        for sq in latin_enumerate(m):
            c, cover = fL_cover_number(sq)
            assert c == expected
    assert fL_cover_number(cyclic(2))[0] == brute_cover_number(build_fL(cyclic(2)).table, 1)


def test_fL_cover_at_three_is_tight():
    # nine one-inputs that pairwise fool force at least nine boxes
    sq = cyclic(3)
    f = build_fL(sq)
    members = [(x, y, (x + y + 1) % 3) for x in range(3) for y in range(3)]
    assert all(f.table[c] == 1 for c in members)
    assert all(fools(f.table, a, b, 1) for a, b in itertools.combinations(members, 2))
    c, cover = fL_cover_number(sq)
    assert c == 9 and verify_cover(f, cover)


def test_experiment_regression_values():
    assert fL_hardness_experiment(2).histogram == {4: 2}
    assert fL_hardness_experiment(3).histogram == {9: 12}
    rep = fL_hardness_experiment(4)
    assert rep.histogram == {8: 144, 12: 432}
    assert (rep.squares, rep.main_classes, rep.min_cover, rep.max_cover) == (576, 2, 8, 12)
    assert rep.max_meets_threshold is True


def test_cover_number_is_a_main_class_invariant():
    base = latin_sample(4, 2)
    c = fL_cover_number(base)[0]
    perm = (2, 0, 3, 1)
    relabelled = LatinSquare(4, tuple(tuple(perm[v] for v in row) for row in base.grid[::-1]))
    assert fL_cover_number(relabelled)[0] == c
    for conj in base.conjugates():
        assert fL_cover_number(conj)[0] == c


@pytest.mark.slow
def test_experiment_regression_five():
    rep = fL_hardness_experiment(5)
    assert rep.histogram == {15: 17280, 16: 144000}
    assert rep.main_classes == 2


def test_experiment_sampling():
    rep = fL_hardness_experiment(4, mode="sample", count=6, seed=1)
    assert rep.squares == 6 and set(rep.histogram) <= {8, 12}
    assert rep.max_meets_threshold is None
    assert rep.as_dict() == fL_hardness_experiment(4, mode="sample", count=6, seed=1).as_dict()
    with pytest.raises(PreconditionError):
        fL_hardness_experiment(4, mode="sample", count=2)
    with pytest.raises(CapExceeded):
        fL_hardness_experiment(6)


@pytest.mark.parametrize("m", [2, 3])
def test_injectivity(m):
    rep = fL_injectivity_check(m)
    assert rep["distinct_functions"] and rep["shared_covers"] == 0


@pytest.mark.parametrize("t", [1, 2])
def test_count_covers_against_formula(t):
    rep = count_covers(2, t)
    assert rep["boxes"] == 27
    assert rep["collections"] == [27, 351][t - 1]
    assert rep["bound"] == 2 ** (3 * 2 * t) == 2 ** bound_formulas(2, t).cover_exponent
    assert rep["holds"]
    # an independent count of covering t-sets
    boxes = [box_cells(b) for b in itertools.product(*[[(0,), (1,), (0, 1)]] * 3)]
    full = set(itertools.product(range(2), repeat=3))
    assert rep["covering"] == sum(set().union(*c) == full for c in itertools.combinations(boxes, t))


def test_count_covers_cap():
    with pytest.raises(CapExceeded):
        count_covers(3, 4)


def test_ip_function():
    f = ip_function(2)
    for x, y in itertools.product(range(4), repeat=2):
        assert f((x, y)) == ip(x, y)


@pytest.mark.parametrize("n", [1])
def test_relation_matches_clauses(n):
    f = ip_function(n)
    rel = build_relation_R(f, f, f)
    m = 1 << (2 * n)
    assert rel.shape == (m, m, m)
    for x, y, z in itertools.product(range(m), repeat=3):
        got = set(rel.valid_outputs((x, y, z)))
        want = {(i, b) for i in (1, 2, 3) for b in (0, 1) if relation_clauses(ip, ip, ip, n, x, y, z, i, b)}
        assert got == want and len(got) == 3


def test_relation_with_mixed_components():
    f1 = ip_function(1)
    f2 = BoolFunction([[0, 0], [0, 0]])
    f3 = BoolFunction([[1, 0], [0, 1]])
    rel = build_relation_R(f1, f2, f3)
    for x, y, z in itertools.product(range(4), repeat=3):
        want = {(i, b) for i in (1, 2, 3) for b in (0, 1)
                if relation_clauses(lambda a, c: ip(a, c), lambda a, c: 0, lambda a, c: int(a == c),
                                    1, x, y, z, i, b)}
        assert set(rel.valid_outputs((x, y, z))) == want
    assert constant_output(rel) == (2, 0)


def test_relation_shape_checks():
    with pytest.raises(ShapeError):
        build_relation_R(ip_function(1), ip_function(2), ip_function(1))
    with pytest.raises(PreconditionError):
        KRelation((2,), ("a",), np.array([[True], [False]]))


def test_zero_communication_for_every_bipartition():
    f = ip_function(1)
    rel = build_relation_R(f, f, f)
    for p in all_bipartitions(3):
        res = zero_comm_check(rel, p)
        assert res.solvable
        other = sorted(set(range(3)) - set(res.side))
        for x in itertools.product(range(4), repeat=3):
            key = tuple(x[i] for i in res.side)
            assert res.output_map[key] in rel.valid_outputs(x)
        assert res.as_dict()["side"] == [i + 1 for i in res.side]
        assert other


def test_zero_communication_fails_for_xor():
    xor = BoolFunction.from_callable((2, 2), lambda a, b: a ^ b)
    rel = KRelation((2, 2), (0, 1), np.stack([xor.table == 0, xor.table == 1], axis=-1))
    assert not zero_comm_check(rel, Bipartition.of(2, {0})).solvable


def test_relation_needs_communication_overall():
    f = ip_function(1)
    rel = build_relation_R(f, f, f)
    assert constant_output(rel) is None
    # independent scan: no output is valid on all 64 inputs
    for i, b in itertools.product((1, 2, 3), (0, 1)):
        assert not all(relation_clauses(ip, ip, ip, 1, x, y, z, i, b) for x, y, z in itertools.product(range(4), repeat=3))
    d, tree = rel_det_cc_exact(rel)
    assert d > 0 and relation_tree_valid(rel, tree)
    assert d == 2


def test_relation_protocol_edge_cases():
    v = np.zeros((2, 2, 2), dtype=bool)
    v[..., 1] = True
    rel = KRelation((2, 2), ("no", "yes"), v)
    assert rel_det_cc_exact(rel)[0] == 0
    xor = np.stack([np.array([[1, 0], [0, 1]]), np.array([[0, 1], [1, 0]])], axis=-1).astype(bool)
    assert rel_det_cc_exact(KRelation((2, 2), (0, 1), xor))[0] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 16 - 1))
def test_restriction_never_lowers_cost(seed):
    f = ip_function(1)
    rel = build_relation_R(f, f, f)
    rng = np.random.default_rng(seed)
    keep = rng.random(rel.valid.shape) < 0.7
    keep |= rel.valid & (np.cumsum(rel.valid, axis=-1) == 1)  # keep one valid output per input
    sub = rel.restrict(keep)
    assert rel_det_cc_exact(sub)[0] >= rel_det_cc_exact(rel)[0]
