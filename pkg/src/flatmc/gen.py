"""Seeded random instances for property tests and the self-test report."""

from __future__ import annotations

import random
from typing import Sequence

from .core_system import (
    TRUE,
    And,
    Atom,
    Configuration,
    CounterSystem,
    LinearAtom,
    Not,
    Or,
    Prop,
    Transition,
    cycle_of,
    is_flat,
)
from .spec_automata import BuchiSpec, UpWord
from .spec_fo import FAnd, FAt, FExists, FLt, FNot, FOr, FSucc, Fo, FTrue

PROPS = ("p", "q")


def random_atom(rng: random.Random, dim: int, max_rhs: int = 4) -> LinearAtom:
    while True:
        coeffs = tuple(rng.choice((-1, 0, 0, 1)) for _ in range(dim))
        if any(coeffs):
            break
    return LinearAtom(coeffs, rng.choice(("<=", ">=", "=", "<", ">")), rng.randint(0, max_rhs))


def random_guard(rng: random.Random, dim: int, p_true: float = 0.6):
    if dim == 0 or rng.random() < p_true:
        return TRUE
    g = Atom(random_atom(rng, dim))
    if rng.random() < 0.2:
        g = And((g, Atom(random_atom(rng, dim))))
    return g


def random_flat_system(rng: random.Random, max_states: int = 4, max_trans: int = 6, max_dim: int = 2, upd: int = 2) -> CounterSystem:
    """Random flat system with at least one cycle."""
    while True:
        n = rng.randint(1, max_states)
        dim = rng.randint(1, max_dim)
        states = tuple(f"q{i}" for i in range(n))
        labels = tuple(frozenset(p for p in PROPS if rng.random() < 0.4) for _ in states)
        m = rng.randint(1, max_trans)
        trans = []
        reached = [0]
        for _ in range(m):
            # grow from the initial state so most transitions are reachable
            s = rng.choice(reached)
            t = rng.randrange(n)
            if t not in reached:
                reached.append(t)
            update = tuple(rng.randint(-upd, upd) for _ in range(dim))
            trans.append(Transition(states[s], states[t], random_guard(rng, dim), update))
        sys = CounterSystem(dim, states, labels, tuple(trans))
        if is_flat(sys) and cycle_of(sys):
            return sys


def random_config(rng: random.Random, sys: CounterSystem, hi: int = 4) -> Configuration:
    return Configuration(sys.states[0], tuple(rng.randint(0, hi) for _ in range(sys.dim)))


def random_letter_guard(rng: random.Random, atoms: Sequence[LinearAtom] = ()):
    leaves = [Prop(p) for p in PROPS] + [Atom(a) for a in atoms]
    r = rng.random()
    if r < 0.3:
        return TRUE
    g = rng.choice(leaves)
    if rng.random() < 0.4:
        g = Not(g)
    if r > 0.8:
        h = rng.choice(leaves)
        g = And((g, h)) if rng.random() < 0.5 else Or((g, h))
    return g


def random_ba(rng: random.Random, max_states: int = 3, atoms: Sequence[LinearAtom] = ()) -> BuchiSpec:
    n = rng.randint(1, max_states)
    states = tuple(f"s{i}" for i in range(n))
    acc = frozenset(s for s in states if rng.random() < 0.5) or frozenset([rng.choice(states)])
    edges = []
    for _ in range(rng.randint(1, 2 * n + 1)):
        edges.append((rng.choice(states), random_letter_guard(rng, atoms), rng.choice(states)))
    return BuchiSpec(states, states[0], acc, tuple(edges))


def random_word(rng: random.Random, sigma: Sequence, max_prefix: int = 4, max_period: int = 3) -> UpWord:
    sigma = list(sigma)
    pre = [rng.choice(sigma) for _ in range(rng.randint(0, max_prefix))]
    per = [rng.choice(sigma) for _ in range(rng.randint(1, max_period))]
    return UpWord(tuple(pre), tuple(per))


def random_fo(rng: random.Random, height: int, tokens: Sequence[str] = PROPS, _vars: tuple = (), _ctr=None) -> Fo:
    """Random sentence of quantifier height at most ``height``."""
    ctr = _ctr if _ctr is not None else [0]

    def leaf():
        if not _vars:
            return FTrue()
        r = rng.random()
        if r < 0.6 or len(_vars) < 2:
            return FAt(rng.choice(list(tokens)), rng.choice(_vars))
        a, b = rng.sample(list(_vars), 2)
        return FSucc(a, b) if r < 0.8 else FLt(a, b)

    if height == 0 or (_vars and rng.random() < 0.3):
        f = leaf()
        return FNot(f) if rng.random() < 0.3 else f
    ctr[0] += 1
    v = f"z{ctr[0]}"
    body = random_fo(rng, height - 1, tokens, _vars + (v,), ctr)
    if rng.random() < 0.5:
        other = random_fo(rng, height - 1, tokens, _vars + (v,), ctr)
        body = FAnd((body, other)) if rng.random() < 0.5 else FOr((body, other))
    f = FExists(v, body)
    return FNot(f) if rng.random() < 0.4 else f


def random_cnf(rng: random.Random, max_vars: int = 6, max_clauses: int = 10) -> tuple[int, list]:
    n = rng.randint(1, max_vars)
    m = rng.randint(1, max_clauses)
    cnf = []
    for _ in range(m):
        cnf.append(tuple(rng.choice((1, -1)) * rng.randint(1, n) for _ in range(3)))
    return n, cnf
