import itertools

import pytest
from hypothesis import given, settings, strategies as st

from flatmc import presburger as pb
from flatmc.errors import ParseError, UnboundVariable
from flatmc.presburger import Lin, Nfa

x1, x2, y = Lin.var("x1"), Lin.var("x2"), Lin.var("y")


def test_eval_examples():
    assert pb.evaluate(pb.TOP, {})
    assert not pb.evaluate(pb.conj([pb.eq(x1 + x2, 3), pb.ge(x1, 5)]), {"x1": 5, "x2": 0})
    assert pb.evaluate(pb.eq(2 * x1 - x2, 1), {"x1": 1, "x2": 1})


def test_eval_unbound():
    with pytest.raises(UnboundVariable):
        pb.evaluate(pb.le(x1, 3), {})


def test_feasible_examples():
    assert pb.feasible(pb.lt(x1, x1)) is None
    assert pb.feasible(pb.conj([pb.eq(x1 + x2, 3), pb.ge(x1, 5)])) is None
    m = pb.feasible(pb.conj([pb.eq(x1, 3 * y + x2), pb.eq(x2, 0), pb.eq(x1, 3)]))
    assert m == {"x1": 3, "x2": 0, "y": 1}


def test_feasible_box_confirms_unique_family():
    # exhaustive search in [0,10]^3 has the single solution found above
    sols = [(a, b, c) for a, b, c in itertools.product(range(11), repeat=3) if a == 3 * c + b and b == 0 and a == 3]
    assert sols == [(3, 0, 1)]


def test_small_model_box():
    assert pb.pstar(1) == 64
    assert pb.pstar(2) == 65536
    assert pb.pstar(3) > pb.pstar(2)
    assert pb.log2_pstar(3) == 30


def test_text_examples():
    assert pb.to_text(pb.TOP) == "(true)"
    with pytest.raises(ParseError) as e:
        pb.parse("(le x1 x1")
    assert e.value.pos is not None


def test_parse_infix_and_prefix_agree():
    a = pb.parse("x1 + 2*x2 <= 5 & !(x1 = 1)")
    b = pb.parse("(and (le (+ x1 (* 2 x2)) 5) (not (eq x1 1)))")
    for v in itertools.product(range(6), repeat=2):
        asg = dict(zip(("x1", "x2"), v))
        assert pb.evaluate(a, asg) == pb.evaluate(b, asg)


def test_existential_text():
    f = pb.exists(["y"], pb.eq(x1, 3 * y))
    assert pb.to_text(f).startswith("(exists (y)")
    assert pb.parse(pb.to_text(f)) == f
    assert pb.check(pb.substitute(f, {"x1": 6})).status == pb.SAT
    assert pb.check(pb.substitute(f, {"x1": 7})).status == pb.UNSAT


atoms = st.builds(
    lambda cs, op, r: pb.atom(sum((c * Lin.var(v) for c, v in zip(cs, ("a", "b", "c"))), Lin()), op, r),
    st.lists(st.integers(-3, 3), min_size=3, max_size=3),
    st.sampled_from(pb.OPS),
    st.integers(-5, 8),
)
formulas = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.builds(pb.PNot, sub),
        st.builds(lambda xs: pb.conj(xs), st.lists(sub, min_size=2, max_size=3)),
        st.builds(lambda xs: pb.disj(xs), st.lists(sub, min_size=2, max_size=3)),
    ),
    max_leaves=6,
)


@settings(max_examples=200)
@given(formulas)
def test_text_round_trip(f):
    assert pb.parse(pb.to_text(f)) == f


@settings(max_examples=60, deadline=None)
@given(formulas)
def test_check_agrees_with_box_enumeration(f):
    box = range(6)
    vs = sorted(pb.free_vars(f))
    brute = any(pb.evaluate(f, dict(zip(vs, v))) for v in itertools.product(box, repeat=len(vs)))
    res = pb.check(f)
    if res.status == pb.SAT:
        assert pb.evaluate(f, {**{v: 0 for v in vs}, **res.model})
    if brute:
        assert res.status == pb.SAT
    # coefficients and constants are tiny, so a solution always lies in the box
    if res.status == pb.SAT and max(res.model.values(), default=0) < 6:
        assert brute


def test_parikh_examples():
    star = Nfa((0,), 0, frozenset({0}), ((0, "a", 0),))
    f = pb.parikh_formula(star)
    for m in range(6):
        assert pb.check(pb.substitute(f, {"n_a": m})).status == pb.SAT
    dead = Nfa((0,), 0, frozenset(), ((0, "a", 0),))
    assert pb.check(pb.parikh_formula(dead)).status == pb.UNSAT


def test_parikh_ab_star():
    nfa = Nfa((0, 1), 0, frozenset({0}), ((0, "a", 1), (1, "b", 0)))
    f = pb.parikh_formula(nfa)
    got = {(a, b) for a in range(6) for b in range(6) if pb.check(pb.substitute(f, {"n_a": a, "n_b": b})).status == pb.SAT}
    assert got == {(a, a) for a in range(6)}


def test_parikh_needs_connectivity():
    # a loop on an unreachable state must not be counted
    nfa = Nfa((0, 1), 0, frozenset({0}), ((0, "a", 0), (1, "b", 1)))
    f = pb.parikh_formula(nfa)
    assert pb.check(pb.substitute(f, {"n_a": 0, "n_b": 2})).status == pb.UNSAT


def test_dnf_and_nnf_preserve_meaning():
    f = pb.PNot(pb.conj([pb.le(x1, 2), pb.disj([pb.eq(x2, 1), pb.gt(x1, x2)])]))
    g = pb.disj([pb.conj(c) for c in pb.dnf(f)])
    for v in itertools.product(range(5), repeat=2):
        asg = {"x1": v[0], "x2": v[1]}
        assert pb.evaluate(f, asg) == pb.evaluate(g, asg) == pb.evaluate(pb.nnf(f), asg)
