import random

import pytest
from hypothesis import given, settings, strategies as st

from flatmc.core_system import FALSE, TRUE, And, Prop
from flatmc.errors import ParseError
from flatmc.gen import random_ba, random_word
from flatmc.oracle import explicit_membership, oracle_membership, product_ba
from flatmc.spec_automata import (
    AbaSpec,
    BuchiSpec,
    ExplicitAsImplicit,
    UpWord,
    aba_conjunction,
    aba_from_ba,
    aba_to_text,
    all_letters,
    ba_to_text,
    dealternate,
    expand,
    membership,
    membership_compressed,
    membership_onthefly,
    parse_aba,
    parse_ba,
    parse_word,
    restrict_subalphabet,
    word_to_text,
)

SIGMA = all_letters(["p", "q"])
E, P = frozenset(), frozenset({"p"})
PX = frozenset({"p", "x1-x2=0"})


def inf_p() -> BuchiSpec:
    return parse_ba("ba\nstart a\naccept b\nedge a a [ true ]\nedge a b [ p ]\nedge b a [ true ]\nedge b b [ p ]\n")


def test_expand_true_edge():
    spec = BuchiSpec(("s",), "s", frozenset({"s"}), (("s", TRUE, "s"),))
    assert len(expand(spec, [E, P]).transitions) == 2


def test_expand_false_edge():
    spec = BuchiSpec(("s",), "s", frozenset({"s"}), (("s", FALSE, "s"),))
    assert expand(spec, [E, P]).transitions == ()


def test_expand_constrained_edge(fig1):
    _, spec = fig1
    B = expand(spec, all_letters(["p", "x1-x2=0"]))
    into_s2 = {a for s, a, t in B.transitions if s == "s1" and t == "s2"}
    assert into_s2 == {PX}


def test_membership_examples():
    B = expand(inf_p(), SIGMA)
    assert membership(UpWord((E,), (P,)), B)
    assert not membership(UpWord((P,), (E,)), B)


def test_membership_fig1_alternation(fig1):
    _, spec = fig1
    B = expand(spec, all_letters(["p", "x1-x2=0"]))
    w = UpWord((E,), (PX, E))
    assert membership(w, B)
    assert oracle_membership(w.prefix, w.period, spec)
    assert membership(UpWord((E,), (PX,)), B)
    assert not membership(UpWord((PX,), (P, E)), B)


def test_empty_accepting_set():
    spec = BuchiSpec(("s",), "s", frozenset(), (("s", TRUE, "s"),))
    B = expand(spec, SIGMA)
    rng = random.Random(3)
    assert not any(membership(random_word(rng, SIGMA), B) for _ in range(30))


def test_restrict_full_and_empty():
    rng = random.Random(5)
    spec = inf_p()
    full = expand(restrict_subalphabet(spec, SIGMA), SIGMA)
    empty = expand(restrict_subalphabet(spec, []), SIGMA)
    B = expand(spec, SIGMA)
    for _ in range(50):
        w = random_word(rng, SIGMA)
        assert membership(w, full) == membership(w, B)
        assert not membership(w, empty)


def test_restrict_random_differential():
    rng = random.Random(11)
    for _ in range(100):
        spec = random_ba(rng)
        sub = [a for a in SIGMA if rng.random() < 0.6]
        w = random_word(rng, SIGMA)
        got = membership(w, expand(restrict_subalphabet(spec, sub), SIGMA))
        want = oracle_membership(w.prefix, w.period, spec) and w.letters() <= set(sub)
        assert got == want


def test_onthefly_matches_explicit():
    rng = random.Random(17)
    for _ in range(100):
        B = expand(random_ba(rng), SIGMA)
        w = random_word(rng, SIGMA)
        assert membership_onthefly(w, ExplicitAsImplicit(B)) == membership(w, B)


def test_onthefly_leaves_unreachable_region_alone():
    # states u0..u9 are only reachable through a letter the word never uses
    edges = [("a", Prop("p"), "a"), ("a", Prop("q"), "u0")]
    edges += [(f"u{i}", TRUE, f"u{(i + 1) % 10}") for i in range(10)]
    states = ("a",) + tuple(f"u{i}" for i in range(10))
    spec = BuchiSpec(states, "a", frozenset({"a"}), tuple(edges))
    auto = ExplicitAsImplicit(expand(spec, SIGMA))
    assert membership_onthefly(UpWord((), (P,)), auto)
    assert auto.probed == {"a"}


def _rotations(w: UpWord):
    yield UpWord(w.prefix + w.period, w.period)
    yield UpWord(w.prefix + w.period[:1], w.period[1:] + w.period[:1])
    yield UpWord(w.prefix, w.period + w.period)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_membership_representation_invariance(seed):
    rng = random.Random(seed)
    B = expand(random_ba(rng), SIGMA)
    w = random_word(rng, SIGMA)
    v = membership(w, B)
    for w2 in _rotations(w):
        assert membership(w2, B) == v


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_compressed_prefix_matches_unrolled(seed):
    rng = random.Random(seed)
    B = expand(random_ba(rng), SIGMA)
    blocks = [(tuple(rng.choice(SIGMA) for _ in range(rng.randint(1, 2))), rng.randint(0, 5)) for _ in range(2)]
    period = tuple(rng.choice(SIGMA) for _ in range(rng.randint(1, 2)))
    flat = tuple(a for blk, n in blocks for _ in range(n) for a in blk)
    assert membership_compressed(blocks, period, B) == membership(UpWord(flat, period), B)


def test_dealternate_plain_ba_shape():
    rng = random.Random(23)
    for _ in range(100):
        spec = random_ba(rng)
        w = random_word(rng, SIGMA)
        D = dealternate(aba_from_ba(spec), SIGMA)
        assert membership_onthefly(w, D) == oracle_membership(w.prefix, w.period, spec)


@pytest.mark.parametrize("k", [2, 3])
def test_dealternate_conjunction_matches_product(k):
    rng = random.Random(29 + k)
    for _ in range(40):
        specs = [random_ba(rng) for _ in range(k)]
        aba = aba_conjunction(specs)
        prod = product_ba(specs[0], specs[1], SIGMA)
        for _ in range(3):
            w = random_word(rng, SIGMA)
            want = all(oracle_membership(w.prefix, w.period, sp) for sp in specs)
            assert membership_onthefly(w, dealternate(aba, SIGMA)) == want
            assert membership(w, dealternate(aba, SIGMA).materialize(SIGMA)) == want
            if k == 2:
                assert explicit_membership(w.prefix, w.period, prod) == want


def test_dealternate_false_initial():
    aba = AbaSpec(("i",), "i", frozenset({"i"}), (("i", TRUE, FALSE),))
    rng = random.Random(1)
    D = dealternate(aba, SIGMA)
    assert not any(membership_onthefly(random_word(rng, SIGMA), D) for _ in range(20))
    assert not D.materialize().accepting or not D.materialize().transitions


def test_aba_rejects_negative_successor():
    with pytest.raises(ParseError):
        parse_aba("aba\nstart a\nedge a [ true ] -> !a\n")


def test_text_round_trips(fig1, examples_dir):
    _, spec = fig1
    assert parse_ba(ba_to_text(spec)) == spec
    aba = aba_conjunction([spec, inf_p()])
    assert parse_aba(aba_to_text(aba)).edges == aba.edges
    w = UpWord((E, PX), (P, E))
    assert parse_word(word_to_text(w)) == w


def test_ba_parse_errors():
    with pytest.raises(ParseError):
        parse_ba("start s\n")
    with pytest.raises(ParseError) as e:
        parse_ba("ba\nstart s\nedge s t [ p & ]\n")
    assert e.value.line == 3
    with pytest.raises(ParseError):
        parse_word("prefix: {p}\n")


def test_aba_conjunction_and_shape():
    a = aba_conjunction([inf_p(), inf_p()])
    assert any(isinstance(f, And) for _, _, f in a.edges)
