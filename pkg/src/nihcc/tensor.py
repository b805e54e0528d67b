"""Dense exact k-tensors: flattening, pairing, products and rank.

Axes are numbered from 0 in the Python API. Flattening uses one fixed index
bijection everywhere: within a group the original axes are taken in
ascending order and the last axis varies fastest (row-major).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import FieldError, PartitionError, PreconditionError, ShapeError
from .linalg import Field

Shape = Tuple[int, ...]


def _normalizer(field: Field):
    return np.frompyfunc(field.coerce, 1, 1)


def _as_object_array(arr, field: Field) -> np.ndarray:
    arr = np.asarray(arr, dtype=object)
    if arr.ndim == 0:
        out = np.empty((), dtype=object)
        out[()] = field.coerce(arr[()])
        return out
    out = _normalizer(field)(arr)
    return np.asarray(out, dtype=object)


class KTensor:
    """Immutable dense tensor over GF(2) or the rationals.

    ``values`` may be a nested sequence / ndarray, or a flat sequence in
    row-major order together with ``shape``.
    """

    __slots__ = ("_data", "field")

    def __init__(self, values, shape: Sequence[int] | None = None, field: Field | str = Field.Q):
        field = Field(field)
        if shape is not None:
            shape = tuple(int(m) for m in shape)
            if any(m < 1 for m in shape):
                raise ShapeError(f"axis sizes must be >= 1, got {shape}")
            flat = list(np.asarray(values, dtype=object).reshape(-1))
            if len(flat) != math.prod(shape):
                raise ShapeError(f"{len(flat)} values for shape {shape}")
            arr = np.empty(len(flat), dtype=object)
            arr[:] = flat
            arr = arr.reshape(shape)
        else:
            arr = np.asarray(values, dtype=object)
            if any(m < 1 for m in arr.shape):
                raise ShapeError(f"axis sizes must be >= 1, got {arr.shape}")
        data = _as_object_array(arr, field)
        data.flags.writeable = False
        self._data = data
        self.field = field

    @classmethod
    def _wrap(cls, arr: np.ndarray, field: Field) -> "KTensor":
        """Internal constructor: copy and normalise an object array."""
        obj = cls.__new__(cls)
        arr = _as_object_array(np.array(arr, dtype=object, copy=True), field)
        arr.flags.writeable = False
        obj._data = arr
        obj.field = field
        return obj

    @classmethod
    def zeros(cls, shape: Sequence[int], field: Field | str = Field.Q) -> "KTensor":
        return cls([0] * math.prod(shape), shape=shape, field=field)

    @property
    def shape(self) -> Shape:
        return tuple(self._data.shape)

    @property
    def k(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(math.prod(self.shape))

    def array(self) -> np.ndarray:
        """A writable copy as an object ndarray."""
        return np.array(self._data, dtype=object, copy=True)

    def values(self) -> list:
        return list(self._data.reshape(-1))

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) != self.k:
            raise ShapeError(f"index of length {len(idx)} for arity {self.k}")
        for j, m in zip(idx, self.shape):
            if not (0 <= j < m):
                raise IndexError(f"index {idx} out of range for shape {self.shape}")
        return self._data[idx]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self._data.reshape(-1))

    def is_boolean(self) -> bool:
        return all(v in (0, 1) for v in self._data.reshape(-1))

    def to_field(self, field: Field | str) -> "KTensor":
        return KTensor(self._data, field=field)

    def __eq__(self, other):
        if not isinstance(other, KTensor):
            return NotImplemented
        return (
            self.field is other.field
            and self.shape == other.shape
            and all(a == b for a, b in zip(self._data.reshape(-1), other._data.reshape(-1)))
        )

    __hash__ = None

    def __add__(self, other: "KTensor") -> "KTensor":
        _same_field(self, other)
        if self.shape != other.shape:
            raise ShapeError("addition of tensors with different shapes")
        return KTensor._wrap(self._data + other._data, self.field)

    def __repr__(self):
        return f"KTensor(shape={self.shape}, field={self.field.value})"

    def transpose(self) -> "KTensor":
        if self.k != 2:
            raise ShapeError("transpose needs a matrix")
        return KTensor._wrap(self._data.T, self.field)

    def rows(self) -> list:
        if self.k != 2:
            raise ShapeError("rows() needs a matrix")
        return [list(r) for r in self._data]


def _same_field(a: KTensor, b: KTensor):
    if a.field is not b.field:
        raise FieldError(f"field mismatch: {a.field.value} vs {b.field.value}")


def _check_groups(k: int, groups: Sequence[Iterable[int]]) -> List[Tuple[int, ...]]:
    out = [tuple(sorted(set(g))) for g in groups]
    seen: List[int] = [a for g in out for a in g]
    if any(len(g) == 0 for g in out):
        raise PartitionError("empty group in flattening")
    if sorted(seen) != list(range(k)) or len(seen) != len(set(seen)):
        raise PartitionError(f"groups {groups} do not partition the {k} axes")
    return out


def flatten(t: KTensor, groups: Sequence[Iterable[int]]) -> KTensor:
    """View ``t`` as a tensor with one axis per group (an m-flattening)."""
    gs = _check_groups(t.k, groups)
    order = [a for g in gs for a in g]
    new_shape = tuple(math.prod(t.shape[a] for a in g) for g in gs)
    arr = t._data.transpose(order).reshape(new_shape)
    return KTensor._wrap(arr, t.field)


def flat_index(shape: Sequence[int], groups: Sequence[Iterable[int]], idx: Sequence[int]) -> Tuple[int, ...]:
    """Image of an ungrouped index under the flattening bijection."""
    gs = _check_groups(len(shape), groups)
    out = []
    for g in gs:
        j = 0
        for a in g:
            j = j * shape[a] + idx[a]
        out.append(j)
    return tuple(out)


def unflat_index(shape: Sequence[int], groups: Sequence[Iterable[int]], gidx: Sequence[int]) -> Tuple[int, ...]:
    gs = _check_groups(len(shape), groups)
    idx = [0] * len(shape)
    for g, j in zip(gs, gidx):
        for a in reversed(g):
            j, idx[a] = divmod(j, shape[a])
    return tuple(idx)


def matrix_rank(m: KTensor) -> int:
    """Exact rank over the tensor's own field."""
    if m.k != 2:
        raise ShapeError(f"matrix_rank needs arity 2, got {m.k}")
    return linalg.rank(m.rows(), m.field)


def flattening_rank(t: KTensor, left: Iterable[int]) -> int:
    left = sorted(set(left))
    right = [a for a in range(t.k) if a not in left]
    return matrix_rank(flatten(t, [left, right]))


@dataclass(frozen=True)
class PureDualTensor:
    """A pure tensor of dual vectors, one factor per supported axis."""

    factors: Mapping[int, Tuple]

    def __post_init__(self):
        object.__setattr__(self, "factors", {int(a): tuple(v) for a, v in sorted(dict(self.factors).items())})

    @property
    def support(self) -> FrozenSet[int]:
        return frozenset(self.factors)

    @classmethod
    def basis(cls, shape: Sequence[int], selection: Mapping[int, int]) -> "PureDualTensor":
        """Tensor product of standard dual basis vectors e_j^* on the selected axes."""
        return cls({a: tuple(1 if i == j else 0 for i in range(shape[a])) for a, j in selection.items()})


def pair(t: KTensor, xi: PureDualTensor) -> KTensor:
    """Contract ``t`` against ``xi`` on the supported axes."""
    for a, v in xi.factors.items():
        if not (0 <= a < t.k):
            raise ShapeError(f"dual factor on axis {a} of an arity-{t.k} tensor")
        if len(v) != t.shape[a]:
            raise ShapeError(f"dual factor of length {len(v)} on axis {a} of size {t.shape[a]}")
    arr = t._data
    for a in sorted(xi.factors, reverse=True):
        vec = np.array([t.field.coerce(x) for x in xi.factors[a]], dtype=object)
        arr = np.moveaxis(arr, a, -1)
        arr = (arr * vec).sum(axis=-1) if arr.ndim > 1 else np.asarray(sum(arr * vec), dtype=object)
    if not isinstance(arr, np.ndarray):
        arr = np.asarray(arr, dtype=object)
    return KTensor._wrap(arr, t.field)


def outer(vectors: Sequence[Sequence], field: Field) -> np.ndarray:
    arr = np.array([field.one], dtype=object).reshape(())
    for v in vectors:
        arr = np.multiply.outer(arr, np.array([field.coerce(x) for x in v], dtype=object))
    return arr


def kron(u: KTensor, v: KTensor) -> KTensor:
    """Kronecker product; entry ``[x*p+u, y*q+v] = U[x,y] V[u,v]`` for V of shape (p, q)."""
    _same_field(u, v)
    if u.k != 2 or v.k != 2:
        raise ShapeError("kron needs two matrices")
    (a, b), (c, d) = u.shape, v.shape
    arr = np.multiply.outer(u._data, v._data).transpose(0, 2, 1, 3).reshape(a * c, b * d)
    return KTensor._wrap(arr, u.field)


def hadamard(u: KTensor, v: KTensor) -> KTensor:
    _same_field(u, v)
    if u.k != 2 or v.k != 2:
        raise ShapeError("hadamard needs two matrices")
    if u.shape != v.shape:
        raise ShapeError(f"hadamard of shapes {u.shape} and {v.shape}")
    return KTensor._wrap(u._data * v._data, u.field)


@dataclass(frozen=True)
class Decomposition:
    """A list of pure tensors; term ``i`` holds one vector per axis."""

    shape: Shape
    field: Field
    terms: Tuple[Tuple[Tuple, ...], ...]

    def __post_init__(self):
        shape = tuple(self.shape)
        field = Field(self.field)
        terms = tuple(tuple(tuple(field.coerce(x) for x in vec) for vec in term) for term in self.terms)
        for term in terms:
            if len(term) != len(shape):
                raise ShapeError(f"term with {len(term)} vectors for arity {len(shape)}")
            for vec, m in zip(term, shape):
                if len(vec) != m:
                    raise ShapeError(f"term vector of length {len(vec)} on an axis of size {m}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "Decomposition") -> "Decomposition":
        if self.shape != other.shape or self.field is not other.field:
            raise ShapeError("concatenating decompositions of different spaces")
        return Decomposition(self.shape, self.field, self.terms + other.terms)


def eval_decomposition(d: Decomposition) -> KTensor:
    acc = np.empty(d.shape, dtype=object)
    acc.fill(d.field.zero)
    for term in d.terms:
        acc = acc + outer(term, d.field)
    return KTensor._wrap(acc, d.field)


@dataclass(frozen=True)
class Bipartition:
    """Unordered split {left, right} of the axes 0..k-1; ``left`` holds axis 0."""

    k: int
    left: FrozenSet[int]
    right: FrozenSet[int]

    def __post_init__(self):
        left, right = frozenset(self.left), frozenset(self.right)
        if not left or not right:
            raise PartitionError("both sides of a bipartition must be nonempty")
        if left & right or (left | right) != frozenset(range(self.k)):
            raise PartitionError(f"{sorted(left)}|{sorted(right)} is not a bipartition of {self.k} axes")
        if 0 in right:
            left, right = right, left
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def of(cls, k: int, side: Iterable[int]) -> "Bipartition":
        side = frozenset(side)
        return cls(k, side, frozenset(range(k)) - side)

    def key(self) -> Tuple:
        return tuple(sorted(self.left)), tuple(sorted(self.right))

    def __lt__(self, other):
        return self.key() < other.key()

    def splits(self, i: int, j: int) -> bool:
        return (i in self.left and j in self.right) or (i in self.right and j in self.left)

    def __str__(self):
        fmt = lambda s: "{" + ",".join(str(a + 1) for a in sorted(s)) + "}"
        return f"{fmt(self.left)}|{fmt(self.right)}"


def all_bipartitions(k: int) -> List[Bipartition]:
    rest = list(range(1, k))
    out = []
    for r in range(0, k - 1):
        for extra in itertools.combinations(rest, r):
            out.append(Bipartition.of(k, (0,) + extra))
    return sorted(out)


def singleton_bipartitions(k: int) -> List[Bipartition]:
    return sorted({Bipartition.of(k, {i}) for i in range(k)})


def is_separating(parts: Iterable[Bipartition], k: int) -> bool:
    parts = list(parts)
    for p in parts:
        if p.k != k:
            raise PartitionError(f"bipartition of {p.k} axes in a collection for {k}")
    return all(any(p.splits(i, j) for p in parts) for i in range(k) for j in range(i + 1, k))


@dataclass(frozen=True)
class SeparatingCollection:
    k: int
    parts: Tuple[Bipartition, ...]

    def __post_init__(self):
        parts = tuple(sorted(set(self.parts)))
        if not is_separating(parts, self.k):
            raise PreconditionError(f"collection {[str(p) for p in parts]} is not separating")
        object.__setattr__(self, "parts", parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)


# -- text format -----------------------------------------------------------

def format_tensor(t: KTensor) -> str:
    head = f"tensor k={t.k} shape={','.join(map(str, t.shape))} field={t.field.value}"
    return head + "\n" + " ".join(t.field.fmt(v) for v in t.values()) + "\n"


def parse_tensor(text: str) -> KTensor:
    lines = text.strip().split("\n", 1)
    head = lines[0].split()
    if not head or head[0] != "tensor":
        raise ShapeError("tensor text must start with a 'tensor' header")
    meta = dict(tok.split("=", 1) for tok in head[1:])
    try:
        k = int(meta["k"])
        shape = tuple(int(s) for s in meta["shape"].split(","))
        field = Field(meta.get("field", "q"))
    except (KeyError, ValueError) as exc:
        raise ShapeError(f"bad tensor header: {lines[0]!r}") from exc
    if len(shape) != k:
        raise ShapeError(f"header says k={k} but shape has {len(shape)} axes")
    body = lines[1].split() if len(lines) > 1 else []
    return KTensor(body, shape=shape, field=field)
