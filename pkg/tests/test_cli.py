import json

import pytest

from nihcc.cli import main
from nihcc.serialize import verify_certificate
from nihcc.suites import yz_equality_tensor
from nihcc.tensor import format_tensor


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


@pytest.fixture
def yz_file(tmp_path):
    p = tmp_path / "yz.txt"
    p.write_text(format_tensor(yz_equality_tensor(3)))
    return str(p)


@pytest.fixture
def example_file(tmp_path):
    p = tmp_path / "ex.txt"
    p.write_text("tensor k=3 shape=2,3,5 field=q\n" + " ".join(str(v) for v in range(30)) + "\n")
    return str(p)


def test_report_schema(capsys, example_file):
    code, rep = run(capsys, "flatten", example_file, "--groups", "12,3")
    assert code == 0
    assert set(rep) == {"schema", "command", "digest", "config", "results", "certificates", "wall_time"}
    assert rep["schema"] == 1 and rep["command"] == "flatten"
    assert rep["config"]["threads"] == 1


def test_flatten_shape(capsys, example_file):
    _, rep = run(capsys, "flatten", example_file, "--groups", "12,3")
    assert json.dumps(rep["results"]).count("6") >= 1
    assert rep["results"]["shape"] == [6, 5]


def test_rank_reports_bracket(capsys, yz_file):
    code, rep = run(capsys, "rank", yz_file)
    assert code == 0
    assert "results" in rep


@pytest.mark.parametrize("method", ["cube3", "simple", "separating"])
def test_decompose_certificates_verify(capsys, yz_file, tmp_path, method):
    code, rep = run(capsys, "decompose", yz_file, "--method", method)
    assert code == 0
    for cert in rep["certificates"]:
        assert verify_certificate(cert)["valid"]
    path = tmp_path / "rep.json"
    path.write_text(json.dumps(rep))
    code, back = run(capsys, "verify", "--certificate", str(path))
    assert code == 0 and back["results"]["all_valid"]


def test_tampered_certificate_fails(capsys, yz_file, tmp_path):
    _, rep = run(capsys, "decompose", yz_file, "--method", "simple")
    cert = rep["certificates"][0]
    cert["terms"] = cert["terms"][:-1]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cert))
    code, back = run(capsys, "verify", "--certificate", str(path))
    assert code == 1 and not back["results"]["all_valid"]


def test_nbound_two_cut(capsys):
    code, rep = run(capsys, "nbound", "--collection", "12|34;13|24", "--k", "4", "--bounds", "2,3")
    assert code == 0 and rep["results"]["value"] == 36


@pytest.mark.parametrize("cmd", ["dcc", "ndcc", "lpar"])
def test_function_commands(capsys, tmp_path, cmd):
    code, rep = run(capsys, cmd, "--shape", "2,2,2", "--code", "129")
    assert code == 0
    for cert in rep["certificates"]:
        assert verify_certificate(cert)["valid"]


def test_digest_tracks_inputs(capsys):
    a = run(capsys, "dcc", "--shape", "2,2,2", "--code", "1")[1]["digest"]
    b = run(capsys, "dcc", "--shape", "2,2,2", "--code", "2")[1]["digest"]
    c = run(capsys, "dcc", "--shape", "2,2,2", "--code", "1", "--threads", "4")[1]["digest"]
    assert a != b and a == c


def test_fooling_commands(capsys):
    code, rep = run(capsys, "fooling", "find", "--shape", "2,2,2", "--code", "129", "--b", "1")
    assert code == 0
    code, rep = run(capsys, "fooling", "check", "--shape", "2,2,2", "--code", "129", "--members", "0,0,0;1,1,1")
    assert code == 0
    code, rep = run(capsys, "fooling", "rankcheck", "--shape", "2,2,2", "--code", "129", "--members", "0,0,0;1,1,1")
    assert code == 0
    code, rep = run(capsys, "fooling", "check", "--shape", "2,2,2", "--code", "255", "--members", "0,0,0;1,1,1")
    assert code == 1
    code, _ = run(capsys, "fooling", "sample", "--n", "1")
    assert code == 64
    code, rep = run(capsys, "fooling", "sample", "--n", "1", "--seed", "3", "--profile")
    assert code == 0


def test_latin_and_fl(capsys, tmp_path):
    code, rep = run(capsys, "latin", "enumerate", "--m", "3")
    assert code == 0 and rep["results"]["count"] == 12
    p = tmp_path / "sq.txt"
    p.write_text("latin m=3\n1 2 3\n2 3 1\n3 1 2\n")
    code, rep = run(capsys, "fl", "build", str(p))
    assert code == 0
    code, rep = run(capsys, "fl", "experiment", "--m", "3")
    assert code == 0 and rep["results"]["histogram"] == {"9": 12}
    code, out = run(capsys, "fl", "experiment", "--m", "3", "--format", "tsv")
    assert code == 0 and out == "cover\tsquares\n9\t12\n"


def test_relation_commands(capsys):
    for action in ("build", "check", "dcc"):
        code, rep = run(capsys, "relation", action, "--n", "1")
        assert code == 0, action
    assert rep["results"]["value"] == 2 and rep["results"]["tree_valid"]


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "dcc")[0] == 64
    assert run(capsys, "nosuch")[0] == 64
    assert run(capsys, "flatten", "x", "--groups", "1", "--format", "tsv")[0] == 64
    assert run(capsys, "dcc", "--shape", "2,2,2", "--code", "1", "--cap", "bogus=1")[0] == 64
    assert run(capsys, "dcc", "--shape", "2,2,2", "--code", "1", "--threads", "0")[0] == 64
    code, rep = run(capsys, "dcc", "--shape", "4,4,4", "--code", "1", "--cap", "det-bits=4")
    assert code == 2 and rep["results"]["error"]["type"] == "CapExceeded"
    assert run(capsys, "rank", str(tmp_path / "missing.txt"))[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("not a tensor")
    assert run(capsys, "rank", str(bad))[0] == 2


def test_output_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["latin", "enumerate", "--m", "2", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["results"]["count"] == 2


def test_verify_suites_deterministic_across_threads(capsys):
    names = "flattening,cube,n-recursion,relation"
    _, a = run(capsys, "verify", "--suite", names, "--threads", "1")
    _, b = run(capsys, "verify", "--suite", names, "--threads", "8")
    assert a["results"] == b["results"] and a["results"]["all_passed"]
    assert run(capsys, "verify", "--suite", "nosuch")[0] == 64


def test_env_threads(capsys, monkeypatch):
    monkeypatch.setenv("CCB_THREADS", "3")
    _, rep = run(capsys, "latin", "enumerate", "--m", "2")
    assert rep["config"]["threads"] == 3
