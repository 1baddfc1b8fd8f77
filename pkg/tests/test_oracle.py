import itertools
import random

import pytest

from flatmc.checker import SAT, UNSAT, gen_sat_instance, model_check
from flatmc.core_system import Configuration, parse_atom, parse_system
from flatmc.errors import NotFlat
from flatmc.gen import random_ba, random_cnf, random_config, random_flat_system, random_fo, random_word
from flatmc.oracle import (
    FALSE,
    INCONCLUSIVE,
    TRUE,
    ExplicitBA,
    explicit_membership,
    lasso_runs,
    omega_tail,
    oracle_fo_eval,
    oracle_mc_ba,
    oracle_mc_fo,
    oracle_membership,
    oracle_sat,
    product_ba,
)
from flatmc.spec_automata import all_letters, parse_ba
from flatmc.spec_fo import fo_eval, parse_fo

A, B = frozenset({"a"}), frozenset({"b"})
SIGMA = all_letters(["p", "q"])
ANY = parse_ba("ba\nstart s\naccept s\nedge s s [ true ]\n")


def test_no_run_is_false():
    sys = parse_system("system 1\nstate q\ntrans q -> q guard false update (0)\n")
    v = oracle_mc_ba(sys, Configuration("q", (0,)), ANY)
    assert v.answer == FALSE and v.justification


def test_fig1_zero_is_true(fig1):
    sys, spec = fig1
    v = oracle_mc_ba(sys, Configuration("q1", (0, 0)), spec)
    assert v.answer == TRUE
    start, prefix, loop = v.run
    assert start == Configuration("q1", (0, 0)) and loop


def test_fig1_one_one_run(fig1):
    sys, spec = fig1
    v = oracle_mc_ba(sys, Configuration("q1", (0, 1)), spec)
    assert v.answer == TRUE
    # q1 -> q4 -> q3 then (q3 q5) forever: the counters meet at q5
    _, prefix, loop = v.run
    assert [sys.transitions[t].dst for t in loop] in (["q5", "q3"], ["q3", "q5"])


def test_not_flat():
    sys = parse_system("system 0\nstate a\nstate b\ntrans a -> b guard true update ()\ntrans b -> a guard true update ()\ntrans a -> a guard true update ()\n")
    with pytest.raises(NotFlat):
        oracle_mc_ba(sys, Configuration("a", ()), ANY)


def test_omega_tail():
    sys = parse_system("system 1\nstate q\ntrans q -> q guard x1 >= 0 update (1)\n")
    pre, per = omega_tail(sys, Configuration("q", (0,)), (0,), [parse_atom("x1 >= 3")])
    assert [c.counters for c in pre] == [(0,), (1,), (2,), (3,)]
    assert [c.counters for c in per] == [(4,)]
    down = parse_system("system 1\nstate q\ntrans q -> q guard true update (-1)\n")
    assert omega_tail(down, Configuration("q", (9,)), (0,), []) is None


def test_lasso_runs_small():
    sys = parse_system("system 1\nstate a\nstate b\ntrans a -> a guard true update (1)\ntrans a -> b guard true update (0)\ntrans b -> b guard true update (0)\n")
    runs = lasso_runs(sys, Configuration("a", (0,)), count_cap=2)
    assert ((), (0,)) in runs
    assert ((0, 0, 1), (2,)) in runs


def test_fo_eval_examples():
    ex = parse_fo("(exists z (at a z))")
    assert oracle_fo_eval((), (A,), ex)
    assert not oracle_fo_eval((), (B,), ex)


def test_fo_eval_agrees_500():
    rng = random.Random(101)
    for _ in range(500):
        phi = random_fo(rng, rng.randint(0, 2))
        w = random_word(rng, SIGMA, 3, 2)
        assert oracle_fo_eval(w.prefix, w.period, phi) == fo_eval(w, phi)


def test_oracle_sat_examples():
    assert oracle_sat([], 0)
    assert not oracle_sat([(1,), (-1,)], 1)
    assert oracle_sat([(1, -2, 3)], 3)


def test_oracle_sat_agrees_with_pipeline():
    rng = random.Random(5)
    for _ in range(10):
        n, cnf = random_cnf(rng, 3, 4)
        sys, c0, spec = gen_sat_instance(cnf, n)
        assert (model_check(sys, c0, spec).answer == SAT) == oracle_sat(cnf, n)


def test_product_matches_both():
    rng = random.Random(13)
    for _ in range(60):
        s1, s2 = random_ba(rng), random_ba(rng)
        P = product_ba(s1, s2, SIGMA)
        assert isinstance(P, ExplicitBA)
        w = random_word(rng, SIGMA)
        both = oracle_membership(w.prefix, w.period, s1) and oracle_membership(w.prefix, w.period, s2)
        assert explicit_membership(w.prefix, w.period, P) == both


def test_differential_ba_200():
    rng = random.Random(2024)
    decisive = 0
    for _ in range(200):
        sys = random_flat_system(rng)
        c0 = random_config(rng, sys, 3)
        spec = random_ba(rng)
        o = oracle_mc_ba(sys, c0, spec)
        m = model_check(sys, c0, spec)
        if o.answer == INCONCLUSIVE or m.answer not in (SAT, UNSAT):
            continue
        decisive += 1
        assert (o.answer == TRUE) == (m.answer == SAT)
    assert decisive >= 150


def test_differential_fo():
    rng = random.Random(77)
    decisive = 0
    for _ in range(60):
        sys = random_flat_system(rng)
        c0 = random_config(rng, sys, 3)
        phi = random_fo(rng, rng.randint(1, 2))
        o = oracle_mc_fo(sys, c0, phi)
        m = model_check(sys, c0, phi)
        if o.answer == INCONCLUSIVE or m.answer not in (SAT, UNSAT):
            continue
        decisive += 1
        assert (o.answer == TRUE) == (m.answer == SAT)
    assert decisive >= 40


def test_fig1_box_against_oracle(fig1):
    sys, spec = fig1
    for v in itertools.product(range(5), repeat=2):
        o = oracle_mc_ba(sys, Configuration("q1", v), spec)
        m = model_check(sys, Configuration("q1", v), spec)
        assert o.decisive
        assert (o.answer == TRUE) == (m.answer == SAT)
