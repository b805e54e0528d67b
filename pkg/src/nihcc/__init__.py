"""Exact small-scale tools for Number-in-Hand multiparty communication complexity."""

from .cc_oracles import (
    BoolFunction,
    Box,
    BoxCover,
    cover_number,
    det_cc_exact,
    det_cc_two_party,
    induced_function,
    nondet_cc,
    partition_argument_bound,
)
from .errors import CapExceeded, InvariantViolation, NihccError, PreconditionError
from .fooling import is_fooling_set, max_fooling_set, rank_vs_fooling_check, sample_tfooling_function, sigma_mix
from .linalg import Field
from .rank_bounds import cube_decompose_3, decompose_separating, decompose_simple, n_recursion
from .separations import LatinSquare, build_fL, build_relation_R, latin_enumerate, latin_sample, zero_comm_check
from .tensor import Bipartition, KTensor, SeparatingCollection, flatten

__all__ = [
    "Bipartition",
    "BoolFunction",
    "Box",
    "BoxCover",
    "CapExceeded",
    "Field",
    "InvariantViolation",
    "KTensor",
    "LatinSquare",
    "NihccError",
    "PreconditionError",
    "SeparatingCollection",
    "build_fL",
    "build_relation_R",
    "cover_number",
    "cube_decompose_3",
    "decompose_separating",
    "decompose_simple",
    "det_cc_exact",
    "det_cc_two_party",
    "flatten",
    "induced_function",
    "is_fooling_set",
    "latin_enumerate",
    "latin_sample",
    "max_fooling_set",
    "n_recursion",
    "nondet_cc",
    "partition_argument_bound",
    "rank_vs_fooling_check",
    "sample_tfooling_function",
    "sigma_mix",
    "zero_comm_check",
]
