import dataclasses
import itertools
import random

import pytest

from flatmc import presburger as pb
from flatmc.checker import (
    SAT,
    UNSAT,
    ba_loop_bound,
    check_witness,
    gen_sat_instance,
    global_holds,
    global_model_check,
    intersect_ba,
    intersect_fo,
    model_check,
    parse_dimacs,
)
from flatmc.core_system import Configuration, parse_system
from flatmc.errors import NotFlat
from flatmc.gen import random_ba, random_cnf, random_config, random_flat_system, random_fo
from flatmc.oracle import FALSE, TRUE, oracle_mc_ba, oracle_sat
from flatmc.presburger import Lin
from flatmc.schema import build_constrained_schemas, instantiate_word
from flatmc.spec_automata import aba_from_ba, expand, membership, parse_ba
from flatmc.spec_fo import fo_eval, parse_fo

AB = """system 1
state qa
state qb props p
trans qa -> qa guard true update (0)
trans qa -> qb guard true update (0)
trans qb -> qb guard true update (0)
"""

FG_P = parse_ba("ba\nstart s\naccept t\nedge s s [ true ]\nedge s t [ p ]\nedge t t [ p ]\n")

FOUR_A = parse_ba(
    "ba\nstart s0\naccept t\n"
    + "".join(f"edge s{i} s{i + 1} [ !p ]\n" for i in range(4))
    + "edge s4 s4 [ !p ]\nedge s4 t [ p ]\nedge t t [ p ]\n"
)


def a_star_b_omega(constraint=None):
    """The cps ``a^x1 b^omega`` with a = {} and b = {p}."""
    sys = parse_system(AB)
    cps = next(c for c in build_constrained_schemas(sys, Configuration("qa", (0,))) if c.k == 2)
    cps = dataclasses.replace(cps, segments=((), ()))
    if constraint is not None:
        cps = dataclasses.replace(cps, constraint=constraint)
    return cps


x1 = Lin.var("x1")


def test_intersect_ba_examples():
    cps = a_star_b_omega()
    assert intersect_ba(cps, FG_P).answer == SAT
    dead = a_star_b_omega(pb.conj([pb.ge(x1, 1), pb.le(x1, 0)]))
    assert intersect_ba(dead, FG_P).answer == UNSAT


@pytest.mark.parametrize("method", ["periodic", "parikh"])
def test_intersect_ba_four_letters(method):
    cps = a_star_b_omega(pb.ge(x1, 3))
    v = intersect_ba(cps, FOUR_A, method=method)
    assert v.answer == SAT
    B = expand(FOUR_A, cps.letters())
    brute = [n for n in range(1, 9) if membership(instantiate_word(cps, (n,)), B)]
    assert brute == [4, 5, 6, 7, 8]
    assert v.witness["counts"][0] in brute
    assert membership(v.witness["word"], B)
    capped = a_star_b_omega(pb.conj([pb.ge(x1, 3), pb.le(x1, 4)]))
    assert intersect_ba(capped, FOUR_A, method=method).witness["counts"] == (4,)


def test_intersect_fo_examples():
    cps = a_star_b_omega()
    trivial = parse_fo("(not (exists z (false)))")
    assert intersect_fo(cps, trivial).answer == SAT
    dead = a_star_b_omega(pb.conj([pb.ge(x1, 1), pb.le(x1, 0)]))
    assert intersect_fo(dead, trivial).answer == UNSAT
    three = parse_fo(
        "(exists z1 z2 z3 (and (lt z1 z2) (lt z2 z3) (not (at p z1)) (not (at p z2)) (not (at p z3))))"
    )
    v = intersect_fo(cps, three)
    assert v.answer == SAT and v.witness["counts"] == (3,)
    assert [n for n in range(1, 7) if fo_eval(instantiate_word(cps, (n,)), three)] == [3, 4, 5, 6]


FIG1_TABLE = {(0, 0): SAT, (3, 0): SAT, (0, 1): SAT, (5, 2): SAT, (1, 0): UNSAT, (2, 0): UNSAT}


@pytest.mark.parametrize("v,expected", sorted(FIG1_TABLE.items()))
def test_fig1_verdicts(fig1, v, expected):
    sys, spec = fig1
    c0 = Configuration("q1", v)
    got = model_check(sys, c0, spec)
    assert got.answer == expected
    assert oracle_mc_ba(sys, c0, spec).answer == (TRUE if expected == SAT else FALSE)
    if got.answer == SAT:
        assert check_witness(sys, c0, spec, got)


def test_fig1_aba_route_matches(fig1):
    sys, spec = fig1
    for v, expected in FIG1_TABLE.items():
        assert model_check(sys, Configuration("q1", v), aba_from_ba(spec)).answer == expected


def test_parallel_matches_serial(fig1):
    sys, spec = fig1
    for v in [(3, 0), (1, 0)]:
        a = model_check(sys, Configuration("q1", v), spec)
        b = model_check(sys, Configuration("q1", v), spec, parallel=2)
        assert a.answer == b.answer
        if a.answer == SAT:
            assert a.witness["cps_index"] == b.witness["cps_index"]
            assert a.witness["counts"] == b.witness["counts"]


def test_not_flat_rejected():
    sys = parse_system("system 0\nstate a\nstate b\ntrans a -> b guard true update ()\ntrans b -> a guard true update ()\ntrans a -> a guard true update ()\n")
    with pytest.raises(NotFlat):
        model_check(sys, Configuration("a", ()), FG_P)


def test_global_examples():
    everything = parse_ba("ba\nstart s\naccept s\nedge s s [ true ]\n")
    stuck = parse_system("system 1\nstate q\nstate r\ntrans r -> q guard true update (0)\n")
    assert global_model_check(stuck, "q", everything) == pb.BOT
    loop = parse_system("system 2\nstate q\ntrans q -> q guard true update (1,0)\n")
    F = global_model_check(loop, "q", everything)
    for v in itertools.product(range(4), repeat=2):
        assert global_holds(F, v) == SAT


def test_global_coherence_fig1(fig1):
    sys, spec = fig1
    F = global_model_check(sys, "q1", spec)
    for v in itertools.product(range(7), repeat=2):
        assert global_holds(F, v) == model_check(sys, Configuration("q1", v), spec).answer


def test_global_text_has_binders(fig1):
    sys, spec = fig1
    text = pb.to_text(global_model_check(sys, "q1", spec))
    assert "(exists (" in text
    assert pb.parse(text) == global_model_check(sys, "q1", spec)


def test_gen_sat_examples():
    for cnf, want in [([(1, 1, 1)], SAT), ([(1, 1, 1), (-1, -1, -1)], UNSAT)]:
        sys, c0, spec = gen_sat_instance(cnf)
        assert model_check(sys, c0, spec).answer == want
    assert parse_dimacs("c x\np cnf 2 1\n1 -2 0\n") == (2, [(1, -2)])
    # short clauses are padded by repeating their last literal
    sys, c0, spec = gen_sat_instance([(1, -2)], 2)
    assert model_check(sys, c0, spec).answer == SAT


def test_gen_sat_random_small():
    rng = random.Random(3)
    for _ in range(12):
        n, cnf = random_cnf(rng, 3, 5)
        sys, c0, spec = gen_sat_instance(cnf, n)
        assert (model_check(sys, c0, spec).answer == SAT) == oracle_sat(cnf, n)


def test_ba_loop_bound_formula():
    b = ba_loop_bound(3, 2)
    lg = 2 * 2 * 4
    assert b.value == 2**lg + 2 * 3**2 * 2 ** (2 * lg)
    assert b.origin == "BA"


def test_witness_validity_random():
    rng = random.Random(19)
    sat = 0
    for _ in range(60):
        sys = random_flat_system(rng)
        c0 = random_config(rng, sys, 3)
        spec = random_ba(rng)
        v = model_check(sys, c0, spec)
        if v.answer == SAT:
            sat += 1
            assert check_witness(sys, c0, spec, v)
    assert sat > 0


def test_fo_model_check_witness_random():
    rng = random.Random(21)
    for _ in range(30):
        sys = random_flat_system(rng)
        c0 = random_config(rng, sys, 3)
        phi = random_fo(rng, 2)
        v = model_check(sys, c0, phi)
        if v.answer == SAT:
            assert check_witness(sys, c0, phi, v)


def exact_fig1_set(x1, x2):
    """Good initial counters of fig1 from q1, with a = x1 - x2."""
    a = x1 - x2
    return any(a == 3 * y or (a == 3 * y - 1 and x2 >= 1) or a == -2 * y or a == -2 * y - 1 for y in range(x1 + x2 + 2))


def test_global_fig1_exact_set(fig1):
    sys, spec = fig1
    F = global_model_check(sys, "q1", spec)
    for v in itertools.product(range(31), repeat=2):
        assert (global_holds(F, v) == SAT) == exact_fig1_set(*v), v
    # spot checks against the oracle where the closed form in C6b differs
    for v in [(0, 1), (2, 3), (4, 2)]:
        assert oracle_mc_ba(sys, Configuration("q1", v), spec).answer == (TRUE if exact_fig1_set(*v) else FALSE)
