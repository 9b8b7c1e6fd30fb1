import json
import subprocess
import sys

from noplan.cli import main

from .conftest import INSTANCES

MINIROVER = INSTANCES / "minirover"


def run_cli(*args, capsys=None):
    code = main([str(a) for a in args])
    return code


def test_explain_json_exit_zero(capsys):
    code = main([
        "explain",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "lattice.json"),
        "--format", "json",
    ])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "explained"
    assert data["explanatory"]["groups"] == ["rocks"]
    assert data["explanatory"]["cost"] == 3
    assert data["failed"]["formula"] == [["at_l2"]]
    assert data["advice_applied"] is False
    assert set(data) >= {"status", "explanatory", "failed", "exemplar", "advice_applied"}


def test_explain_human_output(capsys):
    code = main([
        "explain",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "lattice.json"),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "clear_l2" in out and "at_l2" in out


def test_explain_solvable_exit_one(tmp_path, capsys):
    # drop the rubble requirement: the problem becomes solvable
    domain = (MINIROVER / "domain.pddl").read_text().replace("(clear ?y)", "(conn ?x ?y)")
    d = tmp_path / "d.pddl"
    d.write_text(domain)
    code = main([
        "explain",
        "--domain", str(d),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "lattice.json"),
    ])
    assert code == 1
    assert "solvable" in capsys.readouterr().out


def test_explain_input_error_exit_two(capsys):
    code = main([
        "explain",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "missing.json"),
    ])
    assert code == 2
    assert "input error" in capsys.readouterr().err


def test_explain_budget_exit_three(capsys):
    code = main([
        "explain",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "lattice.json"),
        "--node-budget", "0",
    ])
    assert code == 3
    assert "gave up" in capsys.readouterr().err


def test_check_unsolvable(capsys):
    code = main([
        "check",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
    ])
    assert code == 0
    assert "unsolvable" in capsys.readouterr().out


def test_check_with_advice_strips_meta(tmp_path, capsys):
    domain = (MINIROVER / "domain.pddl").read_text().replace("(clear ?y)", "(conn ?x ?y)")
    d = tmp_path / "d.pddl"
    d.write_text(domain)
    code = main([
        "check",
        "--domain", str(d),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--advice", str(MINIROVER / "advice-block-first-move.json"),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "unsolvable" in out


def test_landmarks_on_unsolvable_exits_one(capsys):
    code = main([
        "landmarks",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
    ])
    assert code == 1


def test_landmarks_dump(tmp_path, capsys):
    domain = (MINIROVER / "domain.pddl").read_text().replace("(clear ?y)", "(conn ?x ?y)")
    d = tmp_path / "d.pddl"
    d.write_text(domain)
    code = main([
        "landmarks",
        "--domain", str(d),
        "--problem", str(MINIROVER / "problem.pddl"),
    ])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert {lm["id"] for lm in data["landmarks"]}
    assert all(o["kind"] in ("nat", "nec", "gnec") for o in data["orderings"])


def test_lattice_table(capsys):
    code = main([
        "lattice",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--lattice", str(MINIROVER / "lattice.json"),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "unsolvable" in out and "solvable" in out
    assert out.count("\n") == 5  # header + 4 nodes


def test_compile_advice_roundtrip(tmp_path, capsys):
    out_file = tmp_path / "sigma.pddl"
    code = main([
        "compile-advice",
        "--domain", str(MINIROVER / "domain.pddl"),
        "--problem", str(MINIROVER / "problem.pddl"),
        "--advice", str(MINIROVER / "advice-block-first-move.json"),
        "--out", str(out_file),
    ])
    assert code == 0
    text = out_file.read_text()
    from noplan.pddl import ground, parse_model
    from noplan.search import decide_solvable

    m = ground(parse_model(text, text))
    assert not decide_solvable(m).solvable
    names = {m.table.canonical(f) for f in m.fluents}
    assert any(n.startswith("in-state-") for n in names)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "noplan", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "noplan" in proc.stdout
