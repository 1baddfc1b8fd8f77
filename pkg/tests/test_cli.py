import json
import subprocess
import sys

import pytest

from flatmc.cli import main
from flatmc.oracle import oracle_sat
from flatmc.checker import parse_dimacs


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_flat(capsys, examples_dir):
    code, out, _ = run(capsys, "check-flat", str(examples_dir / "fig1.sys"))
    assert (code, out.strip()) == (0, "FLAT")


def test_mc_unsat(capsys, examples_dir):
    code, out, _ = run(
        capsys, "mc", str(examples_dir / "fig1.sys"), "--init", "q1 1 0", "--spec", f"ba:{examples_dir / 'fig1.ba'}"
    )
    assert (code, out.strip()) == (1, "UNSAT")


def test_mc_sat_json_witness(capsys, examples_dir):
    code, out, _ = run(
        capsys, "mc", str(examples_dir / "fig1.sys"), "--init", "q1 3 0", "--spec",
        f"ba:{examples_dir / 'fig1.ba'}", "--witness", "--json",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["answer"] == "SAT"
    assert doc["witness"]["schema"] == "d1 (d2)+ d3 (d4 d5)^w"
    assert doc["witness"]["counts"] == [1]


def test_solve_stdin(monkeypatch, capsys):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("(false)\n"))
    code, out, _ = run(capsys, "solve", "-")
    assert (code, out.strip()) == (1, "UNSAT")


def test_solve_sat(tmp_path, capsys):
    f = tmp_path / "f.pres"
    f.write_text("(exists (y) (eq x1 (* 3 y)))\n")
    code, out, _ = run(capsys, "solve", str(f))
    assert code == 0 and out.startswith("SAT")


def test_usage_error(capsys):
    code, _, err = run(capsys, "mc", "--bogus")
    assert code == 64 and "required" in err
    assert run(capsys, "frobnicate")[0] == 64


def test_parse_error_has_location(tmp_path, capsys):
    bad = tmp_path / "bad.sys"
    bad.write_text("system 1\nstate q\ntrans q -> q guard x1 >= update (0)\n")
    code, _, err = run(capsys, "check-flat", str(bad))
    assert code == 65
    assert "bad.sys, line 3, col 25" in err


def test_missing_file(capsys):
    code, _, _ = run(capsys, "check-flat", "/nonexistent/x.sys")
    assert code == 66


def test_gen_sat_writes_instance(tmp_path, capsys, examples_dir):
    code, _, _ = run(capsys, "gen-sat", str(examples_dir / "sat" / "three.cnf"), "--out-dir", str(tmp_path))
    assert code == 0
    for ext in ("sys", "ba", "init"):
        assert (tmp_path / f"three.{ext}").read_text() == (examples_dir / "sat" / f"three.{ext}").read_text()


@pytest.mark.parametrize("name", ["one", "contra", "three"])
def test_shipped_sat_instances(capsys, examples_dir, name):
    d = examples_dir / "sat"
    init = (d / f"{name}.init").read_text().strip()
    code, out, _ = run(capsys, "mc", str(d / f"{name}.sys"), "--init", init, "--spec", f"ba:{d / name}.ba")
    want = oracle_sat(*reversed(parse_dimacs((d / f"{name}.cnf").read_text())))
    assert out.strip() == ("SAT" if want else "UNSAT")
    assert code == (0 if want else 1)


def test_schemas_and_cps(capsys, examples_dir):
    code, out, _ = run(capsys, "schemas", str(examples_dir / "minschema.sys"), "--state", "q0")
    assert code == 0 and "d1 (d2 d3)+ d4 d5 (d6 d5)^w" in out.splitlines()
    code, out, _ = run(
        capsys, "cps", str(examples_dir / "fig1.sys"), "--init", "q1 3 0", "--spec", f"ba:{examples_dir / 'fig1.ba'}"
    )
    assert code == 0 and "constraint:" in out


def test_member_and_fo_eval(tmp_path, capsys, examples_dir):
    w = tmp_path / "w.txt"
    w.write_text("prefix: {}\nperiod: {p,x1-x2=0} {}\n")
    code, out, _ = run(capsys, "member", str(w), "--spec", f"ba:{examples_dir / 'fig1.ba'}")
    assert (code, out.strip()) == (0, "ACCEPT")
    phi = tmp_path / "phi.fo"
    phi.write_text("(exists z (at q z))\n")
    code, out, _ = run(capsys, "fo-eval", str(w), str(phi))
    assert code == 1 and out.strip() in ("FALSE", "REJECT")


def test_global_writes_formula(tmp_path, capsys, examples_dir):
    out_file = tmp_path / "F.pres"
    code, _, _ = run(
        capsys, "global", str(examples_dir / "fig1.sys"), "--state", "q1", "--spec",
        f"ba:{examples_dir / 'fig1.ba'}", "--out", str(out_file),
    )
    assert code == 0
    from flatmc import presburger as pb

    F = pb.parse(out_file.read_text())
    assert pb.check(pb.substitute(F, {"z1": 3, "z2": 0})).status == pb.SAT
    assert pb.check(pb.substitute(F, {"z1": 1, "z2": 0})).status == pb.UNSAT


def test_oracle_verb(capsys, examples_dir):
    code, out, _ = run(
        capsys, "oracle", "mc-ba", str(examples_dir / "fig1.sys"), "--init", "q1 0 0",
        "--spec", f"ba:{examples_dir / 'fig1.ba'}",
    )
    assert code == 0 and out.startswith("TRUE")


def _env(hashseed):
    import os

    return {**os.environ, "PYTHONHASHSEED": hashseed}


def test_output_is_deterministic(examples_dir):
    cmd = [
        sys.executable, "-m", "flatmc.cli", "mc", str(examples_dir / "fig1.sys"), "--init", "q1 5 2",
        "--spec", f"ba:{examples_dir / 'fig1.ba'}", "--witness", "--json",
    ]
    a, b = (subprocess.run(cmd, capture_output=True, check=False, env=_env(h)) for h in ("1", "2"))
    assert a.returncode == 0
    assert a.stdout == b.stdout
