from importlib import resources

import pytest

from flatmc.checker import gen_sat_instance, model_check, parse_dimacs
from flatmc.core_system import parse_configuration, parse_system, system_to_text
from flatmc.spec_automata import ba_to_text, parse_ba

from conftest import EXAMPLES

SYSTEMS = sorted(p.relative_to(EXAMPLES).as_posix() for p in EXAMPLES.rglob("*.sys"))
BAS = sorted(p.relative_to(EXAMPLES).as_posix() for p in EXAMPLES.rglob("*.ba"))


@pytest.mark.parametrize("name", SYSTEMS)
def test_system_round_trip(name):
    sys = parse_system((EXAMPLES / name).read_text())
    assert parse_system(system_to_text(sys)) == sys


@pytest.mark.parametrize("name", BAS)
def test_ba_round_trip(name):
    spec = parse_ba((EXAMPLES / name).read_text())
    assert parse_ba(ba_to_text(spec)) == spec


@pytest.mark.parametrize("name", ["fig1.sys", "fig1.ba"])
def test_package_data_matches(name):
    shipped = resources.files("flatmc").joinpath("data").joinpath(name).read_text()
    assert shipped == (EXAMPLES / name).read_text()


def test_expected_table(fig1):
    sys, spec = fig1
    rows = [l.split() for l in (EXAMPLES / "fig1.expected").read_text().splitlines() if l and not l.startswith("#")]
    assert len(rows) == 6
    for a, b, verdict in rows:
        c0 = parse_configuration(sys, f"q1 {a} {b}")
        assert model_check(sys, c0, spec).answer == verdict


@pytest.mark.parametrize("name", ["one", "contra", "three"])
def test_sat_files_are_generator_output(name):
    d = EXAMPLES / "sat"
    nvars, cnf = parse_dimacs((d / f"{name}.cnf").read_text())
    sys, c0, spec = gen_sat_instance(cnf, nvars)
    assert parse_system((d / f"{name}.sys").read_text()) == sys
    assert parse_ba((d / f"{name}.ba").read_text()) == spec
    assert parse_configuration(sys, (d / f"{name}.init").read_text().strip()) == c0
