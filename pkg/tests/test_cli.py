import json
import subprocess
import sys

import pytest

from kgnotable.cli import EXIT_INPUT, EXIT_UNRESOLVED, main
from kgnotable.synth import SyntheticSpec

from .conftest import LEADERS

BASE = ["--graph", str(LEADERS), "--type-predicate", "type",
        "--query", "Angela Merkel", "--query", "Barack Obama", "--k", "3", "--walks", "20000"]


def test_findnc_json(tmp_path):
    out = tmp_path / "report.json"
    assert main(["findnc", *BASE, "--out", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert {c["node"] for c in report["context"]} == {"Vladimir Putin", "Matteo Renzi", "François Hollande"}
    child = next(c for c in report["characteristics"] if c["label"] == "child")
    assert child["kind"] == "cardinality" and child["delta"] > 0.95


def test_findnc_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["findnc", *BASE, "--seed", "5", "--out", str(a)])
    main(["findnc", *BASE, "--seed", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_findnc_tsv_and_metapath_reuse(tmp_path):
    mp = tmp_path / "paths.json"
    first, second = tmp_path / "one.tsv", tmp_path / "two.tsv"
    assert main(["findnc", *BASE, "--format", "tsv", "--save-metapaths", str(mp), "--out", str(first)]) == 0
    saved = json.loads(mp.read_text(encoding="utf-8"))
    assert saved and all("labels" in m and "count" in m for m in saved)
    assert main(["findnc", *BASE, "--format", "tsv", "--load-metapaths", str(mp), "--out", str(second)]) == 0
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")
    assert first.read_text(encoding="utf-8").startswith("label\tdirection\tdelta")


def test_context_command(tmp_path):
    out = tmp_path / "ctx.json"
    assert main(["context", *BASE, "--algo", "randomwalk", "--out", str(out)]) == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["query"] == ["Angela Merkel", "Barack Obama"]
    assert len(data["context"]) == 3 and "metapaths" not in data


def test_unresolved_query_exit_code(tmp_path, capsys):
    args = ["findnc", "--graph", str(LEADERS), "--query", "Angela Merkle", "--out", str(tmp_path / "x")]
    assert main(args) == EXIT_UNRESOLVED
    assert "Angela Merkel" in capsys.readouterr().err


def test_input_errors_exit_code(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n", encoding="utf-8")
    assert main(["findnc", "--graph", str(bad), "--query", "a"]) == EXIT_INPUT
    assert main(["findnc", "--graph", str(tmp_path / "missing.tsv"), "--query", "a"]) == EXIT_INPUT
    assert main(["findnc", *BASE, "--alpha", "2"]) == EXIT_INPUT
    with pytest.raises(SystemExit) as err:
        main(["findnc", "--graph", str(LEADERS)])
    assert err.value.code == 2


def test_generate_and_eval(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(SyntheticSpec(seed=1).to_json(), encoding="utf-8")
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"q_sizes": [3], "c_sizes": [10, 47], "walks": 20000}), encoding="utf-8")
    out = tmp_path / "results.csv"
    assert main(["eval", "--spec", str(spec), "--grid", str(grid), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "algo,q_size,c_size,num_metapaths,max_len,f1,wall_ms"
    assert len(lines) == 1 + 4
    assert all(line.endswith(",") for line in lines[1:])

    tsv, truth = tmp_path / "g.tsv", tmp_path / "truth.txt"
    assert main(["generate", "--spec", str(spec), "--out", str(tsv), "--truth-out", str(truth)]) == 0
    query = [line.split("\t")[1] for line in truth.read_text(encoding="utf-8").splitlines()
             if line.startswith("# query")]
    real = tmp_path / "real.csv"
    args = ["eval", "--grid", str(grid), "--graph", str(tsv), "--type-predicate", "type",
            "--truth", str(truth), "--out", str(real)]
    for name in query:
        args += ["--query", name]
    assert main(args) == 0
    # same graph and truth, so the same rows
    assert real.read_text(encoding="utf-8") == out.read_text(encoding="utf-8")


def test_eval_needs_a_source(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text("{}", encoding="utf-8")
    assert main(["eval", "--grid", str(grid)]) == EXIT_INPUT


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kgnotable.cli", "--help"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "findnc" in proc.stdout
