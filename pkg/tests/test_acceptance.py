"""The ten acceptance criteria, one test each.

Every test records a one-line PASS/FAIL summary that is printed at the end
of the session (see ``pytest_terminal_summary`` in conftest).
"""

import os
import subprocess
import sys

import pytest

from flatmc import acceptance

LINES: list[str] = []


def _record(line: str) -> None:
    LINES.append(line)
    print(line)


def _check(key: str):
    res = acceptance.CRITERIA[key](42)
    _record(res.line())
    assert res.passed, "\n".join(map(str, res.failures[:5])) or res.detail


def test_c1_schema_soundness_and_completeness():
    _check("1")


def test_c2_constraint_system_exactness():
    _check("2")


def test_c3_stuttering():
    _check("3")


def test_c4_buchi_pumping():
    _check("4")


def test_c5_sat_reduction_round_trip():
    _check("5")


def test_c6a_fig1_verdicts():
    _check("6a")


@pytest.mark.xfail(
    strict=True,
    reason="the displayed closed form misses runs through q4 with a last-loop meeting point; "
    "global formula and oracle agree with each other, e.g. at (0,1)",
)
def test_c6b_global_formula_matches_displayed_characterization():
    _check("6b")


def test_c7_parikh_bounded_equivalence():
    _check("7")


def test_c8_dealternation():
    _check("8")


def test_c9_differential_end_to_end():
    _check("9")


@pytest.mark.slow
def test_c10_selftest_is_byte_deterministic():
    cmd = [sys.executable, "-m", "flatmc.cli", "selftest", "--seed", "42"]
    # different hash seeds so set iteration order cannot leak into the report
    a, b = (
        subprocess.run(cmd, capture_output=True, check=False, env={**os.environ, "PYTHONHASHSEED": h})
        for h in ("1", "2")
    )
    ok = a.stdout == b.stdout and a.returncode == b.returncode == 0 and a.stdout
    _record(f"C10 {'PASS' if ok else 'FAIL'} determinism: two selftest runs, {len(a.stdout)} bytes, identical={a.stdout == b.stdout}")
    assert a.returncode == 0, a.stderr.decode()
    assert a.stdout == b.stdout
