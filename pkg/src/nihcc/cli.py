"""Command-line entry point: ``nihcc <command> ...`` writes one JSON report.

Exit codes: 0 success, 1 internal invariant violation (or a failed check),
2 precondition or resource-cap error, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import List, Optional

from . import cc_oracles as cco
from . import fooling as fl
from . import rank_bounds as rb
from . import separations as sep
from . import serialize as ser
from . import suites
from .errors import CapExceeded, InvariantViolation, NihccError
from .linalg import Field
from .tensor import KTensor, SeparatingCollection, all_bipartitions, flatten, format_tensor, matrix_rank, parse_tensor

SCHEMA = 1
EXIT_OK, EXIT_INVARIANT, EXIT_PRECONDITION, EXIT_USAGE = 0, 1, 2, 64

CAP_NAMES = ("det-bits", "cover-cells", "box-enum", "fooling-vertices")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


class Run:
    """Per-invocation state: parsed args, inputs read so far, certificates to emit."""

    def __init__(self, args):
        self.args = args
        self.inputs: List[str] = []
        self.certificates: List[dict] = []
        self.failed = False

    def read(self, path: str) -> str:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        self.inputs.append(text)
        return text

    def cap(self, name: str, default: int) -> int:
        return self.args.caps.get(name, default)

    @property
    def threads(self) -> int:
        return self.args.threads


def _parse_caps(items: Optional[List[str]]) -> dict:
    caps = {}
    for item in items or []:
        name, _, value = item.partition("=")
        if name not in CAP_NAMES or not value:
            raise UsageError(f"--cap expects NAME=VALUE with NAME in {', '.join(CAP_NAMES)}")
        try:
            caps[name] = int(value)
        except ValueError:
            raise UsageError(f"--cap value must be an integer: {item!r}") from None
    return caps


def _default_threads() -> int:
    env = os.environ.get("CCB_THREADS", "").strip()
    return int(env) if env.isdigit() and int(env) > 0 else 1


def _require_seed(run: Run) -> int:
    if run.args.seed is None:
        raise UsageError("this command samples; pass --seed")
    return run.args.seed


# -- loaders -------------------------------------------------------------------------

def _load_tensor(run: Run) -> KTensor:
    t = parse_tensor(run.read(run.args.tensor))
    if getattr(run.args, "field", None):
        t = t.to_field(Field(run.args.field))
    return t


def _load_function(run: Run) -> cco.BoolFunction:
    a = run.args
    if a.function:
        return ser.function_from_tensor_text(run.read(a.function))
    if a.shape and a.code is not None:
        return cco.BoolFunction.from_index(ser.parse_shape(a.shape), a.code)
    raise UsageError("give a function file, or --shape with --code")


def _det_cap(run: Run) -> int:
    return run.cap("det-bits", cco.DET_CAP_BITS)


def _cover_caps(run: Run) -> dict:
    return {"cell_cap": run.cap("cover-cells", cco.COVER_CELL_CAP), "box_cap": run.cap("box-enum", cco.BOX_ENUM_CAP)}


# -- commands ------------------------------------------------------------------------

def cmd_rank(run: Run) -> dict:
    t = _load_tensor(run)
    if run.args.groups:
        groups = ser.parse_groups(run.args.groups)
        flat = flatten(t, groups)
        out = {"groups": [[a + 1 for a in g] for g in groups], "shape": list(flat.shape), "field": t.field.value}
        if len(groups) == 2:
            out["rank"] = matrix_rank(flat)
        else:
            lo, hi, _ = rb.rank_bracket(flat)
            out["rank_bracket"] = [lo, hi]
        return out
    lo, hi, cert = rb.rank_bracket(t)
    run.certificates.append(ser.decomposition_certificate(t, cert))
    return {"shape": list(t.shape), "field": t.field.value, "rank_bracket": [lo, hi], "certificate_method": cert.method}


def cmd_flatten(run: Run) -> dict:
    t = _load_tensor(run)
    groups = ser.parse_groups(run.args.groups)
    flat = flatten(t, groups)
    return {"groups": [[a + 1 for a in g] for g in groups], "shape": list(flat.shape), "tensor": format_tensor(flat)}


def cmd_decompose(run: Run) -> dict:
    t = _load_tensor(run)
    a = run.args
    if a.method == "cube3":
        cert = rb.cube_decompose_3(t)
    elif a.method == "simple":
        cert = rb.decompose_simple(t)
    else:
        parts = ser.parse_collection(a.collection, t.k) if a.collection else all_bipartitions(t.k)
        cert = rb.decompose_separating(t, parts, strategy=a.strategy)
    blob = ser.decomposition_certificate(t, cert)
    run.certificates.append(blob)
    return {"method": cert.method, "bound": cert.bound, "size": cert.size, "field": t.field.value,
            "details": _jsonable(cert.details)}


def cmd_nbound(run: Run) -> dict:
    a = run.args
    if a.tensor:
        t = _load_tensor(run)
        k = t.k
        coll = SeparatingCollection(k, tuple(ser.parse_collection(a.collection, k)))
        bounds = rb.flattening_rank_profile(t, coll).bounds
    else:
        if a.k is None or not a.bounds:
            raise UsageError("nbound needs a tensor file, or --k with --bounds")
        k = a.k
        coll = SeparatingCollection(k, tuple(ser.parse_collection(a.collection, k)))
        given = ser.parse_shape(a.bounds)
        parts = ser.parse_collection(a.collection, k)
        if len(given) != len(parts):
            raise UsageError("--bounds needs one value per collection member, in the order given")
        bounds = dict(zip(parts, given))
    res = rb.n_recursion(coll, bounds)
    return {"k": k, "collection": [str(p) for p in coll.parts], "bounds": {str(p): d for p, d in bounds.items()},
            "value": res.value, "tree": _node_json(res.tree)}


def _node_json(node) -> dict:
    out = {"subset": [i + 1 for i in node.subset], "value": node.value}
    if node.partition is not None:
        out["partition"] = str(node.partition)
        out["branch"] = node.branch
        out["children"] = [_node_json(c) for c in node.children]
    return out


def cmd_dcc(run: Run) -> dict:
    f = _load_function(run)
    cost, tree = cco.det_cc_exact(f, _det_cap(run))
    run.certificates.append(ser.protocol_certificate(f, cost, tree))
    return {"shape": list(f.shape), "value": cost}


def cmd_ndcc(run: Run) -> dict:
    f = _load_function(run)
    out = {"shape": list(f.shape)}
    for b in (0, 1):
        rep = cco.nondet_cc(f, b, **_cover_caps(run))
        out[f"C{b}"] = rep.cover_size
        out[f"N{b}"] = rep.bits
        out[f"vacuous{b}"] = rep.vacuous
        run.certificates.append(ser.cover_certificate(f, rep.cover))
    c = out["C0"] + out["C1"]
    out["C"] = c
    out["N"] = cco.ceil_log2(c)
    out["N_bound"] = max(out["N0"], out["N1"]) + 1
    return out


def cmd_lpar(run: Run) -> dict:
    f = _load_function(run)
    value, witness = cco.partition_argument_bound(f, _det_cap(run))
    per = {str(p): cco.det_cc_two_party(cco.induced_function(f, p), _det_cap(run)) for p in all_bipartitions(f.k)}
    return {"shape": list(f.shape), "value": value, "witness": str(witness) if witness else None, "per_partition": per}


def _parse_members(text: str):
    return [tuple(int(v) for v in item.split(",")) for item in text.split(";") if item.strip()]


def cmd_fooling(run: Run) -> dict:
    a = run.args
    vcap = run.cap("fooling-vertices", fl.FOOLING_VERTEX_CAP)
    if a.action == "sample":
        seed = _require_seed(run)
        f = fl.sample_tfooling_function(a.n, seed)
        m = 1 << a.n
        diag = fl.is_fooling_set(f, [(v, v, v) for v in range(m)], 1)
        out = {"n": a.n, "seed": seed, "function": ser.function_to_json(f), "diagonal_is_fooling": diag.ok}
        if a.profile:
            out["induced_max_fooling"] = {k: {str(b): t for b, t in v.items()} for k, v in fl.induced_fooling_profile(f).items()}
        return out
    f = _load_function(run)
    if a.action == "find":
        t, fs = fl.max_fooling_set(f, a.b, vcap)
        run.certificates.append(ser.fooling_certificate(f, fs))
        return {"b": a.b, "t": t, "members": [list(x) for x in fs.members]}
    if a.action == "check":
        members = _parse_members(a.members or "")
        res = fl.is_fooling_set(f, members, a.b)
        run.failed = not res.ok
        return {"b": a.b, "valid": res.ok, "reason": res.reason,
                "pair": [list(x) for x in res.pair] if res.pair else None}
    # rankcheck
    if a.members:
        fs = fl.FoolingSet(a.b, tuple(_parse_members(a.members)))
    else:
        fs = fl.max_fooling_set(f, a.b, vcap)[1]
    rep = fl.rank_vs_fooling_check(f, fs)
    run.certificates.append(ser.fooling_certificate(f, fs))
    run.failed = not rep.all_hold
    return {"b": a.b, "t": rep.t, "members": [list(x) for x in fs.members], "u_ranks": rep.u_ranks,
            "flattening_ranks": rep.flattening_ranks, "hadamard_is_identity": rep.hadamard_is_identity,
            "exponent": rep.exponent, "rank_lower": rep.rank_lower, "inequality_holds": rep.inequality_holds,
            "all_hold": rep.all_hold}


def cmd_latin(run: Run) -> dict:
    a = run.args
    if a.action == "enumerate":
        squares = sep.latin_enumerate(a.m)
        lower = cco.superfactorial(a.m)
        out = {"m": a.m, "count": len(squares), "lower": lower, "holds": len(squares) >= lower}
        if a.list:
            out["squares"] = [sep.format_latin(s) for s in squares]
        return out
    seed = _require_seed(run)
    sq = sep.latin_sample(a.m, seed)
    return {"m": a.m, "seed": seed, "square": sep.format_latin(sq)}


def _load_square(run: Run) -> sep.LatinSquare:
    a = run.args
    if a.square:
        return sep.parse_latin(run.read(a.square))
    if a.m is None:
        raise UsageError("give a Latin square file, or --m with --seed")
    return sep.latin_sample(a.m, _require_seed(run))


def cmd_fl(run: Run) -> dict:
    a = run.args
    if a.action == "build":
        sq = _load_square(run)
        f = sep.build_fL(sq)
        return {"m": sq.m, "square": sep.format_latin(sq), "tensor": format_tensor(f.tensor(Field.Q)),
                "ne_structure": list(sep.check_ne_reduction(f))}
    with suites.order_preserving_mapper(run.threads) as mapper:
        if a.sample:
            rep = sep.fL_hardness_experiment(a.m, "sample", count=a.sample, seed=_require_seed(run), mapper=mapper)
        else:
            rep = sep.fL_hardness_experiment(a.m, "enumerate", mapper=mapper)
    return rep.as_dict()


def _relation(run: Run) -> sep.KRelation:
    a = run.args
    files = [a.f1, a.f2, a.f3]
    if any(files):
        if not all(files):
            raise UsageError("give all of --f1 --f2 --f3, or none for inner product")
        fs = [ser.function_from_tensor_text(run.read(p)) for p in files]
    else:
        fs = [sep.ip_function(a.n)] * 3
    return sep.build_relation_R(*fs)


def cmd_relation(run: Run) -> dict:
    a = run.args
    rel = _relation(run)
    out = {"shape": list(rel.shape), "outputs": [list(o) for o in rel.outputs]}
    if a.action == "build":
        out["valid_counts"] = sorted({int(c) for c in rel.valid.sum(axis=-1).reshape(-1)})
        out["valid"] = [int(v) for v in rel.valid.reshape(-1)]
    elif a.action == "check":
        checks = {str(p): sep.zero_comm_check(rel, p).as_dict() for p in all_bipartitions(3)}
        out["zero_communication"] = checks
        out["all_solvable"] = all(c["solvable"] for c in checks.values())
    else:
        d, tree = sep.rel_det_cc_exact(rel, _det_cap(run))
        const = sep.constant_output(rel)
        out.update({"value": d, "constant_output": list(const) if const else None,
                    "tree_valid": sep.relation_tree_valid(rel, tree), "tree": ser.tree_to_json(tree)})
    return out


def cmd_verify(run: Run) -> dict:
    a = run.args
    if a.certificate:
        blob = json.loads(run.read(a.certificate))
        certs = blob.get("certificates", [blob]) if "kind" not in blob else [blob]
        checked = [ser.verify_certificate(c) for c in certs]
        run.failed = not all(c["valid"] for c in checked)
        return {"certificates": checked, "all_valid": not run.failed}
    names = list(suites.SUITES) if a.suite == "all" else a.suite.split(",")
    unknown = [n for n in names if n not in suites.SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {', '.join(suites.SUITES)} or all")
    seed = 0 if a.seed is None else a.seed
    res = suites.run_suites(names, threads=run.threads, seed=seed, m=a.m)
    run.failed = not all(r["passed"] for r in res.values())
    return {"suites": res, "all_passed": not run.failed}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return str(obj)


COMMANDS = {
    "rank": cmd_rank,
    "flatten": cmd_flatten,
    "decompose": cmd_decompose,
    "nbound": cmd_nbound,
    "dcc": cmd_dcc,
    "ndcc": cmd_ndcc,
    "lpar": cmd_lpar,
    "fooling": cmd_fooling,
    "latin": cmd_latin,
    "fl": cmd_fl,
    "relation": cmd_relation,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    common.add_argument("--cap", action="append", metavar="NAME=VALUE", help=f"override a cap ({', '.join(CAP_NAMES)})")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default $CCB_THREADS or 1)")
    common.add_argument("--output", "-o", default="-", help="report path (default stdout)")
    common.add_argument("--format", choices=("json", "tsv"), default="json", help="tsv only for fl experiment")

    parser = _Parser(prog="nihcc", description="Exact small-scale multiparty communication complexity tools.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    def add_function(p):
        p.add_argument("function", nargs="?", help="0/1 tensor text file ('-' for stdin)")
        p.add_argument("--shape", help="with --code: axis sizes, e.g. 2,2,2")
        p.add_argument("--code", type=int, help="bit i of the code is the i-th row-major entry")

    p = add("rank", "flattening rank or rank bracket of a tensor")
    p.add_argument("tensor")
    p.add_argument("--groups", help="axis groups, e.g. 12,3")
    p.add_argument("--field", choices=("q", "gf2"))

    p = add("flatten", "flatten a tensor by axis groups")
    p.add_argument("tensor")
    p.add_argument("--groups", required=True)

    p = add("decompose", "rank-bound certificate")
    p.add_argument("tensor")
    p.add_argument("--method", choices=("cube3", "simple", "separating"), required=True)
    p.add_argument("--collection", help="separating collection, e.g. '12|34;13|24' (default: all bipartitions)")
    p.add_argument("--strategy", choices=("first", "argmin"), default="first")
    p.add_argument("--field", choices=("q", "gf2"))

    p = add("nbound", "subset recursion bound for a separating collection")
    p.add_argument("tensor", nargs="?")
    p.add_argument("--collection", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--bounds", help="one rank bound per collection member, e.g. 2,3")
    p.add_argument("--field", choices=("q", "gf2"))

    for name, text in (("dcc", "exact deterministic complexity"), ("ndcc", "exact cover numbers"),
                       ("lpar", "partition-argument bound")):
        add_function(add(name, text))

    p = add("fooling", "fooling sets")
    p.add_argument("action", choices=("find", "check", "rankcheck", "sample"))
    add_function(p)
    p.add_argument("--b", type=int, choices=(0, 1), default=1)
    p.add_argument("--members", help="semicolon-separated inputs, e.g. '0,0,0;1,1,1'")
    p.add_argument("--n", type=int, default=2, help="bit width for sample")
    p.add_argument("--profile", action="store_true", help="sample: also report induced maximum fooling sets")

    p = add("latin", "Latin squares")
    p.add_argument("action", choices=("enumerate", "sample"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--list", action="store_true", help="enumerate: include every square")

    p = add("fl", "the functions f_L")
    p.add_argument("action", choices=("build", "experiment"))
    p.add_argument("square", nargs="?", help="Latin square text file")
    p.add_argument("--m", type=int)
    p.add_argument("--sample", type=int, default=0, help="experiment: number of sampled squares instead of all")

    p = add("relation", "the three-player relation built from two-party functions")
    p.add_argument("action", choices=("build", "check", "dcc"))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--f1")
    p.add_argument("--f2")
    p.add_argument("--f3")

    p = add("verify", "invariant suites or certificate re-validation")
    p.add_argument("--suite", default="all")
    p.add_argument("--m", type=int, default=2, help="axis size for the exhaustive function suites")
    p.add_argument("--certificate", help="report or certificate JSON to re-check")
    return parser


def _tsv(results: dict) -> str:
    lines = ["cover\tsquares"]
    lines += [f"{k}\t{v}" for k, v in results["histogram"].items()]
    return "\n".join(lines) + "\n"


def _digest_options(args) -> dict:
    """Options that can change results; threads, output and format cannot."""
    skip = {"threads", "output", "format", "cap"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_help())
        args.caps = _parse_caps(args.cap)
        if args.threads is None:
            args.threads = _default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if args.format == "tsv" and not (args.command == "fl" and args.action == "experiment"):
            raise UsageError("--format tsv is only available for 'fl experiment'")
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE

    run = Run(args)
    config = {"command": args.command, "argv": argv, "seed": args.seed, "caps": args.caps}
    start = time.perf_counter()
    try:
        results = COMMANDS[args.command](run)
        code = EXIT_INVARIANT if run.failed else EXIT_OK
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    except InvariantViolation as exc:
        results, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, EXIT_INVARIANT
    except (NihccError, CapExceeded, OSError, ValueError) as exc:
        results, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, EXIT_PRECONDITION
    wall = time.perf_counter() - start

    if args.format == "tsv" and code == EXIT_OK:
        _emit(_tsv(results), args.output)
        return code
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "digest": ser.digest(args.command, ser.canonical_json(_digest_options(args)), *run.inputs),
        "config": {k: v for k, v in config.items() if k != "argv"} | {"threads": args.threads},
        "results": results,
        "certificates": run.certificates,
        "wall_time": round(wall, 6),
    }
    if "error" in results:
        sys.stderr.write(f"{results['error']['type']}: {results['error']['message']}\n")
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
