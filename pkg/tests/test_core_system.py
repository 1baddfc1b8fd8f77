import pytest
from hypothesis import given, settings, strategies as st

from flatmc.core_system import (
    TRUE,
    And,
    Atom,
    Configuration,
    CounterSystem,
    LinearAtom,
    Not,
    Transition,
    cycle_of,
    enumerate_runs,
    eval_guard,
    guard_to_text,
    is_flat,
    map_atoms,
    parse_configuration,
    parse_guard,
    parse_system,
    step,
    system_to_text,
)
from flatmc.errors import DimensionMismatch, GuardFailed, NonNegativityViolation, ParseError, WrongSource


def diag(c1, c2, cmp, rhs):
    return Atom(LinearAtom((c1, c2), cmp, rhs))


def test_eval_guard_examples():
    assert eval_guard(TRUE, (0, 0))
    assert eval_guard(diag(1, -1, "=", 0), (5, 5))
    g = And((diag(1, -1, "=", 0), Not(diag(1, 0, ">=", 6))))
    assert not eval_guard(g, (6, 6))
    assert eval_guard(g, (5, 5))


def test_eval_guard_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        eval_guard(diag(1, -1, "=", 0), (1, 2, 3))


@given(st.integers(-5, 5), st.integers(-5, 5), st.sampled_from(["<=", "<", "=", ">=", ">"]),
       st.integers(-6, 6), st.integers(0, 9), st.integers(0, 9))
def test_atom_matches_direct_arithmetic(a, b, cmp, rhs, x, y):
    lhs = a * x + b * y
    expect = {"<=": lhs <= rhs, "<": lhs < rhs, "=": lhs == rhs, ">=": lhs >= rhs, ">": lhs > rhs}[cmp]
    assert eval_guard(diag(a, b, cmp, rhs), (x, y)) == expect


def test_step_examples(fig1):
    sys, _ = fig1
    assert step(sys, Configuration("q3", (5, 5)), 3) == Configuration("q5", (6, 5))
    assert step(sys, Configuration("q1", (2, 3)), 0) == Configuration("q2", (2, 3))
    with pytest.raises(NonNegativityViolation):
        step(sys, Configuration("q2", (2, 0)), 1)
    with pytest.raises(WrongSource):
        step(sys, Configuration("q1", (0, 0)), 1)


def test_step_guard_failure():
    sys = CounterSystem(1, ("a",), (frozenset(),), (Transition("a", "a", Atom(LinearAtom((1,), ">=", 1)), (0,)),))
    with pytest.raises(GuardFailed):
        step(sys, Configuration("a", (0,)), 0)


def test_is_flat_examples(fig1):
    assert is_flat(fig1[0])
    assert is_flat(CounterSystem(0, ("a",), (frozenset(),), ()))
    two = CounterSystem(1, ("a",), (frozenset(),), (Transition("a", "a", TRUE, (0,)), Transition("a", "a", TRUE, (1,))))
    assert not is_flat(two)


def test_nested_cycles_not_flat():
    sys = parse_system(
        "system 0\nstate a\nstate b\ntrans a -> b guard true update ()\n"
        "trans b -> a guard true update ()\ntrans b -> b guard true update ()\n"
    )
    assert not is_flat(sys)


def test_cycle_of_rotates(fig1):
    cyc = cycle_of(fig1[0])
    assert cyc["q3"] == (3, 4)
    assert cyc["q5"] == (4, 3)
    assert cyc["q2"] == (1,)
    assert "q1" not in cyc


def test_enumerate_runs_examples(fig1):
    sys, _ = fig1
    assert len(enumerate_runs(sys, Configuration("q1", (0, 0)), 0)) == 1
    loop = CounterSystem(1, ("a",), (frozenset(),), (Transition("a", "a", TRUE, (0,)),))
    assert len(enumerate_runs(loop, Configuration("a", (0,)), 3)) == 4
    # runs q1 q2^t q3: the q2 loop can be taken 0, 1 or 2 times from (7,0)
    taken = set()
    for r in enumerate_runs(sys, Configuration("q1", (7, 0)), 6):
        if r.steps and r.steps[-1] == 2:
            taken.add(r.steps.count(1))
    assert taken == {0, 1, 2}


def test_system_text_round_trip(fig1, examples_dir):
    sys = fig1[0]
    assert parse_system(system_to_text(sys)) == sys
    for p in sorted(examples_dir.glob("**/*.sys")):
        s = parse_system(p.read_text())
        assert parse_system(system_to_text(s)) == s


def test_parse_system_errors():
    with pytest.raises(ParseError) as e:
        parse_system("system 1\nstate a\ntrans a -> b guard true update (0)\n")
    assert e.value.line == 3
    with pytest.raises(ParseError):
        parse_system("system 1\nstate a\ntrans a -> a guard x1 >=  update (0)\n")


def test_parse_configuration(fig1):
    sys = fig1[0]
    assert parse_configuration(sys, "q1 3 0") == Configuration("q1", (3, 0))
    with pytest.raises(ParseError):
        parse_configuration(sys, "nowhere 0 0")
    with pytest.raises(DimensionMismatch):
        parse_configuration(sys, "q1 0")


guards = st.recursive(
    st.builds(lambda a, b, c, r: Atom(LinearAtom((a, b), c, r)),
              st.integers(-3, 3), st.integers(-3, 3), st.sampled_from(["<=", "<", "=", ">=", ">"]), st.integers(0, 5)),
    lambda sub: st.one_of(st.builds(Not, sub), st.builds(lambda xs: And(tuple(xs)), st.lists(sub, min_size=2, max_size=3))),
    max_leaves=6,
)


@settings(max_examples=100)
@given(guards, st.integers(0, 6), st.integers(0, 6))
def test_guard_text_round_trip_preserves_meaning(g, x, y):
    # parsed atoms only span the counters they mention; pad as systems do
    back = map_atoms(parse_guard(guard_to_text(g), allow_props=False), lambda a: a.with_dim(2))
    assert eval_guard(back, (x, y)) == eval_guard(g, (x, y))
