import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naive import naive_n
from nihcc.errors import CapExceeded, PreconditionError, ShapeError
from nihcc.linalg import Field
from nihcc.rank_bounds import (
    SINGLETON,
    FlatteningRankProfile,
    cube_decompose_3,
    decompose_separating,
    decompose_simple,
    flattening_rank_profile,
    induced_matrices_3,
    n_recursion,
    rank_bracket,
    rank_lower_bound_flattenings,
    tiny_tensor_rank_exact,
)
from nihcc.suites import yz_equality_tensor, random_tensor, two_cut_collection
from nihcc.tensor import (
    Bipartition,
    KTensor,
    SeparatingCollection,
    all_bipartitions,
    eval_decomposition,
    flatten,
    matrix_rank,
    singleton_bipartitions,
)

fields = st.sampled_from([Field.GF2, Field.Q])


def _rand(seed, shape, field):
    return random_tensor(np.random.default_rng(seed), shape, field)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), fields, st.lists(st.integers(1, 3), min_size=3, max_size=3))
def test_cube_certificate(seed, field, shape):
    t = _rand(seed, tuple(shape), field)
    m1, m2, _ = induced_matrices_3(t)
    cert = cube_decompose_3(t)
    assert cert.size <= matrix_rank(m1) * matrix_rank(m2)
    assert eval_decomposition(cert.decomposition) == t


def test_cube_yz_equality_tensor():
    t = yz_equality_tensor(4)
    m1 = induced_matrices_3(t)[0]
    assert matrix_rank(m1) == 1
    cert = cube_decompose_3(t)
    assert cert.size <= 4
    assert cert.details == {"r1": 1, "r2": 4}


def test_cube_rank_one():
    t = KTensor([[[1, 2], [2, 4]], [[3, 6], [6, 12]]])
    assert cube_decompose_3(t).size == 1


def test_cube_needs_arity_three():
    with pytest.raises(ShapeError):
        cube_decompose_3(KTensor([[1, 0], [0, 1]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), fields, st.lists(st.integers(1, 3), min_size=2, max_size=4))
def test_simple_certificate(seed, field, shape):
    t = _rand(seed, tuple(shape), field)
    k = t.k
    d = [matrix_rank(flatten(t, [[i], [a for a in range(k) if a != i]])) for i in range(k - 1)]
    cert = decompose_simple(t)
    assert cert.size <= math.prod(d)
    assert eval_decomposition(cert.decomposition) == t


def test_simple_on_matrix_gives_rank():
    t = KTensor([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    assert decompose_simple(t).size == matrix_rank(t) == 2


def test_diagonal_certificates_agree_with_exact_gf2_rank():
    t = KTensor([[[1, 0], [0, 0]], [[0, 0], [0, 1]]], field=Field.GF2)
    exact = tiny_tensor_rank_exact(t)
    assert exact == 2
    assert decompose_simple(t).size <= 4
    assert decompose_simple(t).size >= exact
    assert decompose_separating(t, all_bipartitions(3)).size >= exact


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), fields, st.sampled_from(["first", "argmin"]), st.sampled_from([3, 4]))
def test_separating_certificate(seed, field, strategy, k):
    t = _rand(seed, (2,) * k, field)
    for coll in (all_bipartitions(k), singleton_bipartitions(k)) + ((two_cut_collection().parts,) if k == 4 else ()):
        cert = decompose_separating(t, coll, strategy=strategy)
        prof = flattening_rank_profile(t, SeparatingCollection(k, tuple(coll)))
        assert eval_decomposition(cert.decomposition) == t
        assert cert.size <= prof.d_max ** (2 * (k - 1))
        if strategy == "argmin":
            assert cert.size <= n_recursion(prof.collection, prof).value
        if not t.is_zero():
            assert cert.size >= rank_lower_bound_flattenings(t)


def test_separating_rejects_non_separating():
    t = KTensor.zeros((2, 2, 2, 2))
    with pytest.raises(PreconditionError):
        decompose_separating(t, [Bipartition.of(4, {0, 1})])


def test_zero_tensor_certificates_are_empty():
    t = KTensor.zeros((2, 2, 2))
    assert cube_decompose_3(t).size == 0
    assert decompose_simple(t).size == 0
    assert decompose_separating(t, all_bipartitions(3)).size == 0


def test_two_cut_recursion_value():
    coll = two_cut_collection()
    for d1, d2 in ((2, 3), (3, 2), (1, 5)):
        res = n_recursion(coll, {coll.parts[0]: d1, coll.parts[1]: d2})
        assert res.value == d1 ** 2 * d2 ** 2


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 5), st.data())
def test_recursion_matches_unmemoised_version(k, data):
    everything = all_bipartitions(k)
    chosen = data.draw(st.lists(st.sampled_from(everything), min_size=1, max_size=len(everything), unique=True))
    if not _separating(chosen, k):
        chosen = everything
    coll = SeparatingCollection(k, tuple(chosen))
    bounds = {p: data.draw(st.integers(1, 4)) for p in coll.parts}
    res = n_recursion(coll, bounds)
    raw = {(p.left, p.right): d for p, d in bounds.items()}
    assert res.value == naive_n(list(raw), raw, k)


def _separating(parts, k):
    return all(any(p.splits(i, j) for p in parts) for i in range(k) for j in range(i + 1, k))


def test_recursion_singleton_branch_on_three_axes():
    coll = SeparatingCollection(3, tuple(singleton_bipartitions(3)))
    res = n_recursion(coll, {p: 2 for p in coll.parts})
    # {i}|rest cuts one element off; then the pair is split by another singleton member
    assert res.value == 4
    assert res.tree.branch == SINGLETON


def test_recursion_never_exceeds_uniform_bound():
    for k in (3, 4):
        coll = SeparatingCollection(k, tuple(singleton_bipartitions(k)))
        for prof in itertools.product((1, 2, 3), repeat=len(coll)):
            assert n_recursion(coll, dict(zip(coll.parts, prof))).value <= max(prof) ** (2 * (k - 1))


def test_profile_validation():
    coll = two_cut_collection()
    with pytest.raises(PreconditionError):
        FlatteningRankProfile(coll, {coll.parts[0]: 2})
    with pytest.raises(PreconditionError):
        FlatteningRankProfile(coll, {coll.parts[0]: 0, coll.parts[1]: 1})


def test_rank_bracket_orders_bounds():
    t = _rand(7, (2, 2, 2), Field.Q)
    lo, hi, cert = rank_bracket(t)
    assert lo <= hi == cert.size


def test_tiny_rank_oracle():
    e = KTensor([1, 0, 0, 0, 0, 0, 0, 0], (2, 2, 2), Field.GF2)
    assert tiny_tensor_rank_exact(e) == 1
    assert tiny_tensor_rank_exact(KTensor.zeros((2, 2, 2), Field.GF2)) == 0
    with pytest.raises(PreconditionError):
        tiny_tensor_rank_exact(KTensor.zeros((2, 2)))
    with pytest.raises(CapExceeded):
        tiny_tensor_rank_exact(KTensor.zeros((8, 8, 8, 2), Field.GF2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_gf2_certificates_never_beat_exact_rank(seed):
    t = _rand(seed, (2, 2, 2), Field.GF2)
    exact = tiny_tensor_rank_exact(t, limit=4)
    assert exact is not None
    assert rank_lower_bound_flattenings(t) <= exact
    assert exact <= min(cube_decompose_3(t).size, decompose_simple(t).size)
