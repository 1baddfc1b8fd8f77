import random

import pytest
from hypothesis import given, settings, strategies as st

from flatmc import spec_fo
from flatmc.errors import FlatMcError, ParseError
from flatmc.gen import random_fo, random_word
from flatmc.oracle import oracle_fo_eval
from flatmc.spec_automata import UpWord, all_letters
from flatmc.spec_fo import (
    FAnd,
    FAt,
    FExists,
    FLt,
    FNot,
    StutterParams,
    fo_eval,
    fo_eval_blocks,
    fo_loop_bound,
    fo_to_text,
    fo_translate_to_alphabet,
    parse_fo,
    qheight,
    rename_bound,
)

A, B = frozenset({"a"}), frozenset({"b"})
SIGMA = all_letters(["p", "q"])
BACKENDS = ["python"] + (["cython"] if spec_fo._eval_compiled is not None else [])


def test_qheight_examples():
    assert qheight(FAt("a", "z")) == 0
    assert qheight(parse_fo("(exists z (exists w (lt z w)))")) == 2
    assert qheight(parse_fo("(and (not (exists z (at a z))) (exists z (at b z)))")) == 1


def test_stutter_params():
    assert StutterParams(2).threshold == 8
    assert StutterParams(2).collapse == 9


def test_translate_empty_and_full():
    phi = parse_fo("(exists z (at p z))")
    none = fo_translate_to_alphabet(phi, [frozenset(), frozenset({"q"})])
    assert not fo_eval(UpWord((), (frozenset({"q"}),)), none)
    full = [frozenset({"p"}), frozenset({"p", "q"})]
    every = fo_translate_to_alphabet(parse_fo("(forall z (at p z))"), full)
    assert fo_eval(UpWord((full[1],), (full[0],)), every)


def test_translate_random_differential():
    rng = random.Random(41)
    for _ in range(60):
        phi = random_fo(rng, rng.randint(1, 2))
        sub = [a for a in SIGMA if rng.random() < 0.7] or [SIGMA[0]]
        w = random_word(rng, sub)
        assert fo_eval(w, fo_translate_to_alphabet(phi, sub)) == fo_eval(w, phi)


@pytest.mark.parametrize("backend", BACKENDS)
def test_fo_eval_examples(backend):
    assert fo_eval(UpWord((), (A,)), parse_fo("(exists z (at a z))"), backend=backend)
    assert fo_eval(UpWord((), (A,)), parse_fo("(not (exists z (at b z)))"), backend=backend)
    phi = parse_fo("(exists z1 (exists z2 (and (lt z1 z2) (at a z1) (at b z2))))")
    assert fo_eval(UpWord((), (A, B)), phi, backend=backend)


@pytest.mark.parametrize("backend", BACKENDS)
def test_no_last_position(backend):
    # a quantifier range fixed in advance would find a "last" position here
    phi = parse_fo("(exists z (not (exists y (lt z y))))")
    assert not fo_eval(UpWord((), (A,)), phi, backend=backend)
    assert not oracle_fo_eval((), (A,), phi)


def test_huge_counts_stay_cheap():
    phi = parse_fo("(exists z (exists w (and (succ z w) (at a z) (at b w))))")
    assert fo_eval_blocks([((A,), 10**30)], (B,), phi)
    assert not fo_eval_blocks([((A,), 10**30)], (A,), phi)


def test_loop_bound():
    assert fo_loop_bound(0, 1) >= 4
    for n in (1, 2, 3):
        assert fo_loop_bound(n + 1, 2) == 2 * fo_loop_bound(n, 2)
    assert fo_loop_bound(1, 3) > fo_loop_bound(1, 2)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_fo("(exists z (at p z)")
    with pytest.raises(ParseError):
        parse_fo("(frob z)")
    with pytest.raises(FlatMcError):
        fo_eval(UpWord((), (A,)), FAt("a", "z"))


def test_text_round_trip_random():
    rng = random.Random(43)
    for _ in range(100):
        phi = random_fo(rng, rng.randint(0, 3))
        assert parse_fo(fo_to_text(phi)) == phi


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**6))
def test_agrees_with_oracle_and_backends(seed):
    rng = random.Random(seed)
    phi = random_fo(rng, rng.randint(1, 3))
    w = random_word(rng, SIGMA, max_prefix=3, max_period=2)
    got = {b: fo_eval(w, phi, backend=b) for b in BACKENDS}
    assert len(set(got.values())) == 1
    assert got["python"] == oracle_fo_eval(w.prefix, w.period, phi)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_range_doubling_and_renaming(seed):
    rng = random.Random(seed)
    phi = random_fo(rng, rng.randint(1, 3))
    w = random_word(rng, SIGMA, max_prefix=3, max_period=2)
    v = fo_eval(w, phi)
    assert fo_eval(w, phi, range_factor=2) == v
    assert fo_eval(w, rename_bound(phi, "r")) == v


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_stuttering(seed, N):
    rng = random.Random(seed)
    M = StutterParams(N).collapse
    w1 = tuple(rng.choice(SIGMA) for _ in range(rng.randint(0, 2)))
    s = tuple(rng.choice(SIGMA) for _ in range(rng.randint(1, 2)))
    w2 = tuple(rng.choice(SIGMA) for _ in range(rng.randint(1, 2)))
    phi = random_fo(rng, N)
    assert fo_eval(UpWord(w1 + s * M, w2), phi) == fo_eval(UpWord(w1 + s * (M + 1), w2), phi)


def test_derived_connectives_desugar():
    phi = parse_fo("(forall z (implies (at p z) (exists w (and (lt z w) (at q w)))))")
    assert isinstance(phi, FNot)
    P, Q = frozenset({"p"}), frozenset({"q"})
    assert fo_eval(UpWord((), (P, Q)), phi)
    assert not fo_eval(UpWord((Q,), (P,)), phi)
    assert qheight(FExists("x", FAnd((FLt("x", "x"),)))) == 1
