"""Brute-force reference procedures for differential testing.

Everything here is deliberately naive and only relies on the core system
types: runs are unrolled step by step, automata are explored state by state
and first-order sentences are evaluated by direct recursion over an explicit
letter array.  No code is shared with the schema, automata, FO or checker
modules beyond their plain data classes.

Run exploration
---------------
In a flat system every infinite run has the shape
``p1 l1^n1 p2 l2^n2 ... pk lk^omega`` where each cycle is entered once.
:func:`lasso_runs` walks the control graph; on entering a cycle it either
loops forever (decided exactly, see :func:`omega_tail`) or takes ``n >= 0``
full turns and then walks part of the cycle before leaving it.  Counts are
capped, and the search records whether the cap ever cut a branch short.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

from .core_system import (
    Configuration,
    CounterSystem,
    LinearAtom,
    can_step,
    cycle_of,
    eval_on_letter,
    guard_atoms,
    is_flat,
    parse_atom,
    step,
)
from .errors import NotFlat

TRUE, FALSE, INCONCLUSIVE = "TRUE", "FALSE", "INCONCLUSIVE"


@dataclass
class OracleVerdict:
    answer: str
    explored: int = 0
    bound: dict = field(default_factory=dict)
    run: tuple | None = None  # (start, prefix transitions, loop transitions)
    justification: str = ""

    @property
    def decisive(self) -> bool:
        return self.answer != INCONCLUSIVE


# ---------------------------------------------------------------------------
# exact omega tails


def _sign_stable_from(atom: LinearAtom, v, e) -> int:
    """Least ``T`` with ``atom`` constant on ``v + t*e`` for all ``t >= T``."""
    a0 = atom.value(v) - atom.rhs
    s = atom.value(e)
    if s == 0:
        return 0
    return abs(a0) // abs(s) + 1


def omega_tail(sys: CounterSystem, c: Configuration, cycle: Sequence[int], atoms: Sequence[LinearAtom]):
    """Configurations of ``c`` followed by ``cycle^omega`` as ``(prefix, period)``.

    Returns ``None`` when the cycle cannot be iterated forever.  After ``T``
    turns every atom (guards and tracked ones) has constant truth at each
    offset and counters only grow, so turn ``T`` repeats forever.
    """
    n = sys.dim
    eff = [0] * n
    for t in cycle:
        eff = [x + u for x, u in zip(eff, sys.transitions[t].update)]
    if any(x < 0 for x in eff):
        return None
    checks = list(atoms)
    for t in cycle:
        checks.extend(guard_atoms(sys.transitions[t].guard))
    checks = [a.with_dim(n) for a in checks]
    T = 0
    v = list(c.counters)
    for t in cycle:
        for a in checks:
            T = max(T, _sign_stable_from(a, v, eff))
        v = [x + u for x, u in zip(v, sys.transitions[t].update)]
    configs = []
    cur = c
    for _ in range(T + 1):
        for t in cycle:
            configs.append(cur)
            if not can_step(sys, cur, t):
                return None
            cur = step(sys, cur, t)
    L = len(cycle)
    return configs[: T * L], configs[T * L:]


# ---------------------------------------------------------------------------
# run enumeration


def _tokens_of(sys: CounterSystem, c: Configuration, atoms) -> frozenset:
    toks = set(sys.label(c.state))
    for a in atoms:
        if a.holds(c.counters):
            toks.add(a.token())
    return frozenset(toks)


@dataclass
class _Search:
    sys: CounterSystem
    atoms: list
    cap: int
    read: Callable  # (memory, letter) -> memory
    accept: Callable  # (memory, prefix letters, period letters, path, cycle) -> bool
    zero_cap: int | None  # repetition cap for loops with zero effect, None = until repeat
    complete: bool = True
    explored: int = 0
    found: tuple | None = None

    def letter(self, c):
        return _tokens_of(self.sys, c, self.atoms)

    def run(self, c0: Configuration, mem0):
        self.cycles = cycle_of(self.sys)
        self.start = c0
        self._at_vertex(c0, mem0, (), frozenset())
        return self.found

    def _at_vertex(self, c, mem, path, used):
        if self.found:
            return
        cyc = self.cycles.get(c.state)
        if cyc is not None and cyc not in used:
            self._enter_cycle(c, mem, path, used | {cyc}, cyc)
        else:
            self._leave(c, mem, path, used, ())

    def _enter_cycle(self, c, mem, path, used, cyc):
        # omega option
        tail = omega_tail(self.sys, c, cyc, self.atoms)
        self.explored += 1
        if tail is not None:
            pre = [self.letter(x) for x in tail[0]]
            per = [self.letter(x) for x in tail[1]]
            if self.accept(mem, pre, per, path, cyc):
                self.found = (self.start, path, cyc)
                return
        verts = {self.sys.transitions[t].src for t in cyc}
        if all(t in cyc for q in verts for t in self.sys.outgoing(q)):
            return  # no way out: only the omega option matters
        net = [sum(col) for col in zip(*(self.sys.transitions[t].update for t in cyc))]
        zero = not any(net)  # a full turn returns to the same configuration
        seen = set()
        n = 0
        while True:
            key = (c, _freeze(mem))
            if zero and key in seen:
                break
            seen.add(key)
            self._walk(c, mem, path, used, cyc)
            if self.found:
                return
            limit = self.zero_cap if zero else self.cap
            if limit is not None and n >= limit:
                # only zero-effect loops with an explicit stutter cap are exhaustive here
                if not zero:
                    nxt = self._turn(c, mem, cyc)
                    if nxt is not None:
                        self.complete = False
                break
            nxt = self._turn(c, mem, cyc)
            if nxt is None:
                break
            c, mem = nxt
            path = path + cyc
            n += 1

    def _turn(self, c, mem, cyc):
        for t in cyc:
            if not can_step(self.sys, c, t):
                return None
            mem = self.read(mem, self.letter(c))
            c = step(self.sys, c, t)
        return c, mem

    def _walk(self, c, mem, path, used, cyc):
        """Walk ``0..len-1`` edges along the cycle, leaving it at some vertex."""
        for k in range(len(cyc)):
            self._leave(c, mem, path, used, cyc)
            if self.found:
                return
            if k == len(cyc) - 1:
                break
            t = cyc[k]
            if not can_step(self.sys, c, t):
                return
            mem = self.read(mem, self.letter(c))
            c = step(self.sys, c, t)
            path = path + (t,)

    def _leave(self, c, mem, path, used, cyc):
        for t in self.sys.outgoing(c.state):
            if t in cyc:
                continue
            if not can_step(self.sys, c, t):
                continue
            mem2 = self.read(mem, self.letter(c))
            self._at_vertex(step(self.sys, c, t), mem2, path + (t,), used)
            if self.found:
                return


def _freeze(mem):
    if isinstance(mem, (set, frozenset)):
        return frozenset(mem)
    if isinstance(mem, list):
        return tuple(mem)
    return mem


def lasso_runs(sys: CounterSystem, c0: Configuration, count_cap: int = 6) -> list:
    """Lasso runs ``(prefix transitions, loop transitions)`` with full-turn counts ``<= count_cap``."""
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    out = set()

    def accept(mem, pre, per, path, cyc):
        out.add((path, cyc))
        return False

    _Search(sys, [], count_cap, lambda m, a: m + 1, accept, zero_cap=count_cap).run(c0, 0)
    return sorted(out)


# ---------------------------------------------------------------------------
# Büchi automata, explicitly


def ba_successors(spec, s, letter) -> list:
    return [t for (src, g, t) in spec.edges if src == s and eval_on_letter(g, letter)]


def ba_accepts_lasso(spec, starts: Iterable, prefix: Sequence, period: Sequence) -> bool:
    """Acceptance of ``prefix . period^omega`` by unrolling the product graph."""
    U, P = len(prefix), len(period)
    word = list(prefix) + list(period)

    def succ(node):
        i, s = node
        j = i + 1 if i + 1 < U + P else U
        return [(j, t) for t in ba_successors(spec, s, word[i])]

    reach = set()
    todo = [(0, s) for s in starts] if U + P else []
    while todo:
        x = todo.pop()
        if x in reach:
            continue
        reach.add(x)
        todo.extend(succ(x))
    for x in reach:
        if x[0] < U or x[1] not in spec.accepting:
            continue
        # can x reach itself again?
        seen = set()
        todo = list(succ(x))
        while todo:
            y = todo.pop()
            if y == x:
                return True
            if y in seen:
                continue
            seen.add(y)
            todo.extend(succ(y))
    return False


def oracle_membership(prefix, period, spec) -> bool:
    return ba_accepts_lasso(spec, [spec.initial], prefix, period)


def _ba_atoms(spec) -> list:
    seen = {}
    for _, g, _ in spec.edges:
        for a in guard_atoms(g):
            seen.setdefault(a.key(), a)
    return list(seen.values())


def oracle_mc_ba(sys: CounterSystem, c0: Configuration, spec, count_cap: int = 6) -> OracleVerdict:
    """Explicit search for a run whose letter word the automaton accepts.

    The memory carried along a run is the set of automaton states reachable
    on the letters read so far.  FALSE is reported when no branch was cut by
    the count cap: loops with nonzero effect then always blocked within the
    cap, and zero-effect loops were iterated until their (configuration,
    state set) pair repeated.
    """
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    atoms = [a.with_dim(sys.dim) for a in _ba_atoms(spec)]

    def read(mem, letter):
        return frozenset(t for s in mem for t in ba_successors(spec, s, letter))

    def accept(mem, pre, per, path, cyc):
        return bool(mem) and ba_accepts_lasso(spec, mem, pre, per)

    s = _Search(sys, atoms, count_cap, read, accept, zero_cap=None)
    found = s.run(c0, frozenset([spec.initial]))
    bound = {"count_cap": count_cap}
    if found:
        return OracleVerdict(TRUE, s.explored, bound, found, "lasso run accepted")
    if s.complete:
        return OracleVerdict(FALSE, s.explored, bound, None, "every branch blocked or repeated within the cap")
    return OracleVerdict(INCONCLUSIVE, s.explored, bound, None, "count cap reached")


# ---------------------------------------------------------------------------
# first-order logic, naively


def _height(phi) -> int:
    from . import spec_fo as F

    if isinstance(phi, F.FExists):
        return 1 + _height(phi.body)
    if isinstance(phi, F.FNot):
        return _height(phi.arg)
    if isinstance(phi, (F.FAnd, F.FOr)):
        return max((_height(a) for a in phi.args), default=0)
    return 0


def oracle_fo_eval(prefix: Sequence, period: Sequence, phi, depth_ranges: Sequence[int] | None = None) -> bool:
    """Direct recursive evaluation over an explicit letter array.

    The quantifier at nesting depth ``d`` (outermost ``d = 1``) ranges over
    ``[0, |u| + d |v| (C + 1))`` with ``C = 2^(h+1) + 2`` for sentence height
    ``h``; this always contains a witness whenever one exists.
    """
    from . import spec_fo as F

    U, P = len(prefix), len(period)
    h = _height(phi)
    C = 2 ** (max(h, 1) + 1) + 2
    if depth_ranges is None:
        depth_ranges = [U + d * P * (C + 1) + 1 for d in range(1, h + 2)]
    L = max(depth_ranges, default=U + P)
    word = [prefix[i] if i < U else period[(i - U) % P] for i in range(L)]

    def ev(f, env, d):
        if isinstance(f, F.FTrue):
            return True
        if isinstance(f, F.FFalse):
            return False
        if isinstance(f, F.FAt):
            return f.token in word[env[f.var]]
        if isinstance(f, F.FLetter):
            return word[env[f.var]] == f.letter
        if isinstance(f, F.FSucc):
            return env[f.right] == env[f.left] + 1
        if isinstance(f, F.FLt):
            return env[f.left] < env[f.right]
        if isinstance(f, F.FEq):
            return env[f.left] == env[f.right]
        if isinstance(f, F.FNot):
            return not ev(f.arg, env, d)
        if isinstance(f, F.FAnd):
            return all(ev(a, env, d) for a in f.args)
        if isinstance(f, F.FOr):
            return any(ev(a, env, d) for a in f.args)
        if isinstance(f, F.FExists):
            for i in range(depth_ranges[d]):
                if ev(f.body, {**env, f.var: i}, d + 1):
                    return True
            return False
        raise TypeError(f)

    return ev(phi, {}, 0)


def _fo_atoms(phi) -> list:
    from . import spec_fo as F

    out = {}

    def go(f):
        if isinstance(f, F.FAt):
            if any(ch in f.token for ch in "<>="):
                a = parse_atom(f.token)
                out.setdefault(a.key(), a)
        elif isinstance(f, F.FLetter):
            for tok in f.letter:
                if any(ch in tok for ch in "<>="):
                    a = parse_atom(tok)
                    out.setdefault(a.key(), a)
        elif isinstance(f, F.FNot):
            go(f.arg)
        elif isinstance(f, (F.FAnd, F.FOr)):
            for a in f.args:
                go(a)
        elif isinstance(f, F.FExists):
            go(f.body)

    go(phi)
    return list(out.values())


def oracle_mc_fo(sys: CounterSystem, c0: Configuration, phi, count_cap: int = 6) -> OracleVerdict:
    """Explicit search for a run whose letter word satisfies ``phi``.

    Zero-effect loops repeat one block of letters, so iterating them more than
    ``2^(h+1) + 1`` times cannot change the truth of a height-``h``
    sentence; they are cut there without losing exhaustiveness.
    """
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    atoms = [a.with_dim(sys.dim) for a in _fo_atoms(phi)]
    h = _height(phi)

    def read(mem, letter):
        return mem + (letter,)

    def accept(mem, pre, per, path, cyc):
        return oracle_fo_eval(list(mem) + list(pre), per, phi)

    s = _Search(sys, atoms, count_cap, read, accept, zero_cap=2 ** (h + 1) + 1)
    found = s.run(c0, ())
    bound = {"count_cap": count_cap, "stutter_cap": 2 ** (h + 1) + 1}
    if found:
        return OracleVerdict(TRUE, s.explored, bound, found, "run word satisfies the sentence")
    if s.complete:
        return OracleVerdict(FALSE, s.explored, bound, None, "every branch blocked or stutter-capped")
    return OracleVerdict(INCONCLUSIVE, s.explored, bound, None, "count cap reached")


# ---------------------------------------------------------------------------
# propositional satisfiability and automata products


def oracle_sat(cnf: Sequence[Sequence[int]], nvars: int | None = None) -> bool:
    """Truth-table satisfiability."""
    if nvars is None:
        nvars = max((abs(l) for c in cnf for l in c), default=0)
    if nvars > 16:
        raise ValueError("truth-table oracle limited to 16 variables")
    for bits in product((False, True), repeat=nvars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in cnf):
            return True
    return False


@dataclass(frozen=True)
class ExplicitBA:
    """Plain Büchi automaton with ``(src, letter, dst)`` transitions."""

    states: tuple
    initial: object
    accepting: frozenset
    transitions: tuple


def _explicit_accepts(B: ExplicitBA, prefix, period) -> bool:
    U, P = len(prefix), len(period)
    word = [frozenset(a) for a in list(prefix) + list(period)]
    succ_tab = {}
    for s, a, t in B.transitions:
        succ_tab.setdefault((s, frozenset(a)), []).append(t)

    def succ(node):
        i, s = node
        j = i + 1 if i + 1 < U + P else U
        return [(j, t) for t in succ_tab.get((s, word[i]), ())]

    reach, todo = set(), [(0, B.initial)]
    while todo:
        x = todo.pop()
        if x not in reach:
            reach.add(x)
            todo.extend(succ(x))
    for x in reach:
        if x[0] < U or x[1] not in B.accepting:
            continue
        seen, todo = set(), list(succ(x))
        while todo:
            y = todo.pop()
            if y == x:
                return True
            if y not in seen:
                seen.add(y)
                todo.extend(succ(y))
    return False


def product_ba(spec1, spec2, sigma: Iterable) -> ExplicitBA:
    """Intersection of two symbolic specs over ``sigma`` with a two-phase flag."""
    sigma = sorted({frozenset(a) for a in sigma}, key=sorted)
    init = (spec1.initial, spec2.initial, 0)
    states, trans = [], []
    seen, todo = {init}, [init]
    while todo:
        x = todo.pop()
        states.append(x)
        s1, s2, f = x
        for a in sigma:
            for t1 in ba_successors(spec1, s1, a):
                for t2 in ba_successors(spec2, s2, a):
                    if f == 0:
                        g = 1 if s1 in spec1.accepting else 0
                    else:
                        g = 0 if s2 in spec2.accepting else 1
                    y = (t1, t2, g)
                    trans.append((x, a, y))
                    if y not in seen:
                        seen.add(y)
                        todo.append(y)
    acc = frozenset(x for x in states if x[2] == 1 and x[1] in spec2.accepting)
    return ExplicitBA(tuple(sorted(states, key=repr)), init, acc, tuple(trans))


def explicit_membership(prefix, period, B: ExplicitBA) -> bool:
    return _explicit_accepts(B, prefix, period)
