"""JSON encodings for certificates, plus parsers for the command-line argument syntax.

Axis (player) numbers are 1-based in every text form; input values stay
0-based, as in the tables.
"""

from __future__ import annotations

import hashlib
import json
from typing import List, Sequence

import numpy as np

from .cc_oracles import BoolFunction, Box, BoxCover, Leaf, Node, ProtocolTree, tree_depth, verify_cover, verify_tree
from .errors import PartitionError, PreconditionError
from .fooling import FoolingSet, is_fooling_set
from .linalg import Field
from .rank_bounds import BoundCertificate
from .tensor import Bipartition, Decomposition, KTensor, eval_decomposition, format_tensor, parse_tensor


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


# -- argument syntax ---------------------------------------------------------------

def parse_axis_set(text: str) -> List[int]:
    """``"12"`` or ``"1+2"`` (1-based) to 0-based axes."""
    text = text.strip()
    toks = text.split("+") if "+" in text else list(text)
    try:
        return [int(t) - 1 for t in toks if t]
    except ValueError:
        raise PartitionError(f"bad axis group {text!r}") from None


def parse_groups(text: str) -> List[List[int]]:
    """``"12,3"`` to ``[[0, 1], [2]]``."""
    return [parse_axis_set(g) for g in text.split(",")]


def parse_collection(text: str, k: int) -> List[Bipartition]:
    """``"12|34;13|24"`` to bipartitions; the right side may be omitted."""
    parts = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        left = parse_axis_set(item.split("|", 1)[0])
        parts.append(Bipartition.of(k, left))
    return parts


def format_collection(parts: Sequence[Bipartition]) -> List[str]:
    return [str(p) for p in parts]


def parse_shape(text: str) -> tuple:
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise PreconditionError(f"bad shape {text!r}") from None


def function_from_tensor_text(text: str) -> BoolFunction:
    t = parse_tensor(text)
    if not t.is_boolean():
        raise PreconditionError("function tables must hold only 0 and 1")
    return BoolFunction(t)


def function_to_json(f: BoolFunction) -> dict:
    return {"shape": list(f.shape), "table": [int(v) for v in f.table.reshape(-1)]}


def function_from_json(obj: dict) -> BoolFunction:
    shape = tuple(obj["shape"])
    return BoolFunction(np.asarray(obj["table"], dtype=np.uint8).reshape(shape))


# -- certificates ------------------------------------------------------------------

def decomposition_certificate(t: KTensor, cert: BoundCertificate) -> dict:
    return {
        "kind": "decomposition",
        "method": cert.method,
        "bound": cert.bound,
        "size": cert.size,
        "field": t.field.value,
        "shape": list(t.shape),
        "terms": [[[str(x) for x in vec] for vec in term] for term in cert.decomposition.terms],
        "tensor": format_tensor(t),
    }


def cover_certificate(f: BoolFunction, cover: BoxCover) -> dict:
    return {
        "kind": "cover",
        "b": cover.value,
        "size": len(cover),
        "function": function_to_json(f),
        "boxes": [[list(s) for s in box.sets] for box in cover.boxes],
    }


def fooling_certificate(f: BoolFunction, fs: FoolingSet) -> dict:
    return {
        "kind": "fooling",
        "b": fs.value,
        "size": len(fs),
        "function": function_to_json(f),
        "members": [list(x) for x in fs.members],
    }


def tree_to_json(tree: ProtocolTree):
    if isinstance(tree, Leaf):
        return {"output": tree.output}
    return {"player": tree.player + 1, "ones": sorted(tree.ones),
            "zero": tree_to_json(tree.zero), "one": tree_to_json(tree.one)}


def tree_from_json(obj) -> ProtocolTree:
    if "output" in obj:
        return Leaf(int(obj["output"]))
    return Node(int(obj["player"]) - 1, frozenset(obj["ones"]), tree_from_json(obj["zero"]), tree_from_json(obj["one"]))


def protocol_certificate(f: BoolFunction, cost: int, tree: ProtocolTree) -> dict:
    return {"kind": "protocol", "cost": cost, "function": function_to_json(f), "tree": tree_to_json(tree)}


def verify_certificate(obj: dict) -> dict:
    """Re-check a certificate from scratch. Returns ``{"kind", "valid", "reason"}``."""
    kind = obj.get("kind")
    reason = ""
    if kind == "decomposition":
        t = parse_tensor(obj["tensor"])
        field = Field(obj["field"])
        dec = Decomposition(tuple(obj["shape"]), field, tuple(tuple(tuple(v) for v in term) for term in obj["terms"]))
        valid = eval_decomposition(dec) == t.to_field(field) and len(dec) <= int(obj["bound"])
        if not valid:
            reason = "terms do not sum to the tensor within the bound"
    elif kind == "cover":
        f = function_from_json(obj["function"])
        cover = BoxCover(int(obj["b"]), tuple(Box(tuple(tuple(s) for s in sets)) for sets in obj["boxes"]))
        valid = verify_cover(f, cover) and len(cover) == int(obj.get("size", len(cover)))
        if not valid:
            reason = "boxes are not a monochromatic cover"
    elif kind == "fooling":
        f = function_from_json(obj["function"])
        check = is_fooling_set(f, obj["members"], int(obj["b"]))
        valid = check.ok
        if not valid:
            reason = f"{check.reason} at {check.pair}"
    elif kind == "protocol":
        f = function_from_json(obj["function"])
        tree = tree_from_json(obj["tree"])
        valid = verify_tree(tree, f) and tree_depth(tree) <= int(obj["cost"])
        if not valid:
            reason = "tree disagrees with the function or is too deep"
    else:
        raise PreconditionError(f"unknown certificate kind {kind!r}")
    return {"kind": kind, "valid": bool(valid), "reason": reason}
