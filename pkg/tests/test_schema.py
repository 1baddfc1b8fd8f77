import itertools
import random

import pytest

from flatmc import presburger as pb
from flatmc.core_system import Configuration, enumerate_runs, parse_atom, parse_system
from flatmc.errors import BadArity, NotFlat
from flatmc.gen import random_config, random_flat_system
from flatmc.oracle import lasso_runs
from flatmc.schema import (
    build_constrained_schemas,
    check_minimal,
    enumerate_minimal_schemas,
    in_X,
    instantiate_word,
    replay,
    schema_regex_match,
)

COUNTDOWN = """system 1
state q0
state q1
trans q0 -> q0 guard true update (-3)
trans q0 -> q1 guard true update (0)
trans q1 -> q1 guard true update (0)
"""


def count_solutions(cps, hi=8):
    f = cps.constraint
    out = []
    for v in itertools.product(range(1, hi + 1), repeat=len(cps.variables)):
        if pb.evaluate(f, dict(zip(cps.variables, v))):
            out.append(v)
    return out


def test_minschema_figure(examples_dir):
    sys = parse_system((examples_dir / "minschema.sys").read_text())
    texts = [P.to_text() for P in enumerate_minimal_schemas(sys, "q0")]
    assert "d1 (d2 d3)+ d4 d5 (d6 d5)^w" in texts
    for P in enumerate_minimal_schemas(sys, "q0"):
        check_minimal(sys, P)
    again = [P.to_text() for P in enumerate_minimal_schemas(sys, "q0")]
    assert again == texts


def test_single_self_loop():
    sys = parse_system("system 1\nstate q\ntrans q -> q guard true update (0)\n")
    schemas = enumerate_minimal_schemas(sys, "q")
    assert [P.to_text() for P in schemas] == ["(d1)^w"]
    (cps,) = build_constrained_schemas(sys, Configuration("q", (2,)), [parse_atom("x1 >= 1")])
    assert cps.variables == ()
    assert cps.constraint == pb.TOP
    assert cps.letters() == {frozenset({"x1>=1"})}


def test_not_flat():
    sys = parse_system("system 0\nstate a\nstate b\ntrans a -> b guard true update ()\ntrans b -> a guard true update ()\ntrans a -> a guard true update ()\n")
    with pytest.raises(NotFlat):
        enumerate_minimal_schemas(sys, "a")


def test_loop_count_solutions_from_seven():
    sys = parse_system(COUNTDOWN)
    c0 = Configuration("q0", (7,))
    counts = set()
    for cps in build_constrained_schemas(sys, c0):
        if len(cps.provenance.schema.loops) == 2:
            counts |= {cps.schema_counts(v)[0] for v in count_solutions(cps)}
    assert counts == {1, 2}
    # independent check: runs of the form d1^n d2 from (7)
    runs = enumerate_runs(sys, c0, 4)
    ok = {r.steps.index(1) for r in runs if 1 in r.steps and set(r.steps[: r.steps.index(1)]) == {0}}
    assert ok == {1, 2}


def test_phase_split_boundary():
    sys = parse_system(COUNTDOWN)
    c0 = Configuration("q0", (10,))
    atom = parse_atom("x1 >= 7")
    seen = set()
    for cps in build_constrained_schemas(sys, c0, [atom]):
        P = cps.provenance.schema
        if P.k != 2:
            continue
        for v in count_solutions(cps):
            configs, letters = replay(sys, c0, cps, v, [atom])
            w = instantiate_word(cps, v)
            assert letters[: len(w.prefix)] == list(w.prefix)
            seen.add((cps.schema_counts(v)[0], len(cps.provenance.loop_phases[0])))
    # 10 and 7 satisfy the atom, 4 does not: three iterations need two phases
    assert seen == {(1, 1), (2, 1), (3, 2)}


def test_decreasing_final_loop_unsat():
    sys = parse_system("system 1\nstate q\ntrans q -> q guard true update (-1)\n")
    assert list(build_constrained_schemas(sys, Configuration("q", (5,)))) == []


def test_instantiate_word(fig1):
    sys, spec = fig1
    xs = list(build_constrained_schemas(sys, Configuration("q1", (3, 0)), spec.atoms()))
    cps = next(c for c in xs if c.k == 2)
    w = instantiate_word(cps, (2,))
    assert len(w.prefix) == len(cps.segments[0]) + 2 * len(cps.loops[0]) + len(cps.segments[1])
    assert w.period == cps.loops[1]
    with pytest.raises(BadArity):
        instantiate_word(cps, ())
    one = next(c for c in xs if c.k == 1) if any(c.k == 1 for c in xs) else None
    if one is not None:
        assert instantiate_word(one, ()).prefix == one.segments[0]


def test_fig1_marks_equality_at_q3():
    sys, spec = fig1_sys_spec()
    c0 = Configuration("q1", (0, 0))
    marked = False
    for cps in build_constrained_schemas(sys, c0, spec.atoms()):
        for v in count_solutions(cps, 3):
            w = instantiate_word(cps, v)
            if any("x1-x2=0" in a and "q" in a for a in w.period):
                marked = True
    assert marked


def fig1_sys_spec():
    from pathlib import Path

    from flatmc.spec_automata import parse_ba

    ex = Path(__file__).resolve().parents[1] / "examples"
    return parse_system((ex / "fig1.sys").read_text()), parse_ba((ex / "fig1.ba").read_text())


def test_in_X_accepts_own_members(fig1):
    sys, spec = fig1
    c0 = Configuration("q1", (3, 0))
    xs = list(build_constrained_schemas(sys, c0, spec.atoms()))
    assert xs
    assert all(in_X(c, sys, c0, spec.atoms()) for c in xs)
    assert not in_X(xs[0], sys, Configuration("q2", (3, 0)), spec.atoms())


def test_random_soundness_and_completeness():
    rng = random.Random(7)
    live = 0
    while live < 30:
        sys = random_flat_system(rng)
        c0 = random_config(rng, sys, 3)
        runs = lasso_runs(sys, c0, count_cap=4)
        if not runs:
            continue
        live += 1
        schemas = enumerate_minimal_schemas(sys, c0.state)
        for P in schemas:
            check_minimal(sys, P)
        for prefix, loop in runs[:40]:
            assert sum(schema_regex_match(sys, P, prefix, loop) for P in schemas) >= 1
        replayed = 0
        for cps in build_constrained_schemas(sys, c0):
            for v in count_solutions(cps, 4):
                replay(sys, c0, cps, v)
                replayed += 1
        assert replayed >= 1
