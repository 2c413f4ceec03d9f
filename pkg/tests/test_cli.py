import os
import subprocess
import sys

import pytest

from graphmerge import data_path
from graphmerge.cli import main

DOCKERS = data_path("dockers.map")
NO_AG3 = data_path("dockers-no-ag3.map")


def test_plan_prints_makespan_three(capsys):
    assert main(["plan", DOCKERS]) == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l.strip()]
    assert len(lines) == 3 and lines[0].startswith("0:")
    assert "ag3.move(t1,l1,l2)" in lines[1]


def test_plan_failure_exit_code(capsys):
    assert main(["plan", NO_AG3]) == 2
    assert "unreachable-at-fixpoint" in capsys.readouterr().err


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.map"
    bad.write_text("(problem x (goal")
    assert main(["plan", str(bad)]) == 1
    assert main(["plan", str(tmp_path / "missing.map")]) == 1
    assert main(["plan", DOCKERS, "--mode", "fast"]) == 1
    assert main(["plan", DOCKERS, "--max-levels", "-3"]) == 1
    assert main([]) == 1
    assert main(["dot", DOCKERS, "--levels", "3..1"]) == 1
    assert "error" in capsys.readouterr().err


def test_validate_round_trip(tmp_path, capsys):
    assert main(["plan", DOCKERS]) == 0
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text(capsys.readouterr().out)
    assert main(["validate", DOCKERS, str(plan_file)]) == 0
    assert "makespan 3" in capsys.readouterr().out
    lines = plan_file.read_text().splitlines()
    (tmp_path / "short.txt").write_text("\n".join(lines[:2]) + "\n")
    assert main(["validate", DOCKERS, str(tmp_path / "short.txt")]) == 2
    (tmp_path / "junk.txt").write_text("0: nobody.fly()\n")
    assert main(["validate", DOCKERS, str(tmp_path / "junk.txt")]) == 1


def test_dot_writes_files(tmp_path, capsys):
    assert main(["dot", DOCKERS, "--out", str(tmp_path), "--levels", "0..1"]) == 0
    names = sorted(os.listdir(tmp_path))
    assert "ag3-01.dot" in names and "ag1-01.dot" in names
    assert all(n.endswith(".dot") for n in names)
    assert (tmp_path / "ag3-01.dot").read_text().startswith("digraph")


def test_dot_exits_zero_on_failure(tmp_path):
    assert main(["dot", NO_AG3, "--out", str(tmp_path)]) == 0
    assert os.listdir(tmp_path)


@pytest.mark.parametrize("mode", ["det", "conc"])
def test_byte_identical_runs(tmp_path, mode):
    outs = []
    for k in range(2):
        d = tmp_path / f"{mode}{k}"
        proc = subprocess.run(
            [sys.executable, "-m", "graphmerge", "plan", DOCKERS, "--mode", mode, "--seed", "3",
             "--trace", str(d), "--csp-trace"],
            capture_output=True, check=True)
        files = {n: (d / n).read_bytes() for n in sorted(os.listdir(d))}
        outs.append((proc.stdout, files))
    assert outs[0] == outs[1]
