"""Büchi and alternating Büchi specifications over constrained letters.

A letter is a frozenset of tokens: proposition names and canonical atom
tokens such as ``x1-x2=0``.  Atoms are opaque here; a guard reads a letter
propositionally, so every token missing from the letter is false.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Protocol, Sequence

from .core_system import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    Guard,
    Not,
    Or,
    Prop,
    eval_on_letter,
    guard_atoms,
    guard_props,
    guard_to_text,
    parse_atom,
    parse_guard,
)
from .errors import FlatMcError, ParseError

Letter = frozenset


# ---------------------------------------------------------------------------
# letters and words


def canonical_token(tok: str) -> str:
    """Normalise an atom token to its canonical spelling; props are kept."""
    tok = tok.strip()
    if any(c in tok for c in "<>="):
        return parse_atom(tok).token()
    return tok


def guard_tokens(g: Guard) -> set[str]:
    return set(guard_props(g)) | {a.token() for a in guard_atoms(g)}


def token_guard(tok: str) -> Guard:
    if any(c in tok for c in "<>="):
        return Atom(parse_atom(tok))
    return Prop(tok)


def letter_text(a: Iterable[str]) -> str:
    return "{" + ",".join(sorted(a)) + "}"


def parse_letter(text: str, pos: int = 0) -> Letter:
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ParseError(f"letter must be written {{...}}: {text!r}", pos=pos)
    body = s[1:-1].strip()
    if not body:
        return frozenset()
    try:
        return frozenset(canonical_token(t) for t in body.split(","))
    except ParseError as e:
        raise ParseError(f"bad token in letter {text!r}: {e.msg}", pos=pos) from None


def parse_letters(text: str, line: int | None = None, base_col: int = 0) -> list[Letter]:
    """Whitespace separated letters, e.g. ``{p} {} {p,x1-x2=0}``."""
    out = []
    i = 0
    s = text
    while i < len(s):
        if s[i].isspace():
            i += 1
            continue
        if s[i] != "{":
            raise ParseError("expected '{'", line=line, col=base_col + i + 1, pos=i)
        j = s.find("}", i)
        if j < 0:
            raise ParseError("unterminated letter", line=line, col=base_col + i + 1, pos=i)
        try:
            out.append(parse_letter(s[i:j + 1], pos=i))
        except ParseError as e:
            raise ParseError(e.msg, line=line, col=base_col + i + 1, pos=i) from None
        i = j + 1
    return out


@dataclass(frozen=True)
class UpWord:
    """The ultimately periodic word ``prefix . period^omega``."""

    prefix: tuple
    period: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(a) for a in self.prefix))
        object.__setattr__(self, "period", tuple(frozenset(a) for a in self.period))
        if not self.period:
            raise ValueError("period must be nonempty")

    def letter_at(self, i: int) -> Letter:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def letters(self) -> set:
        return set(self.prefix) | set(self.period)


def parse_word(text: str) -> UpWord:
    prefix: list = []
    period = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        col = line.find(":") + 1
        if not sep or key not in ("prefix", "period"):
            raise ParseError("expected 'prefix:' or 'period:'", line=lineno, col=1)
        letters = parse_letters(rest, line=lineno, base_col=col)
        if key == "prefix":
            prefix.extend(letters)
        else:
            period = (period or []) + letters
    if not period:
        raise ParseError("missing nonempty 'period:'", line=1, col=1)
    return UpWord(tuple(prefix), tuple(period))


def word_to_text(w: UpWord) -> str:
    pre = " ".join(letter_text(a) for a in w.prefix)
    per = " ".join(letter_text(a) for a in w.period)
    return f"prefix: {pre}".rstrip() + "\n" + f"period: {per}\n"


# ---------------------------------------------------------------------------
# symbolic and explicit Büchi automata


@dataclass(frozen=True)
class BuchiSpec:
    states: tuple
    initial: str
    accepting: frozenset
    edges: tuple  # ((src, guard, dst), ...)

    def tokens(self) -> set[str]:
        out: set[str] = set()
        for _, g, _ in self.edges:
            out |= guard_tokens(g)
        return out

    def atoms(self):
        seen = {}
        for _, g, _ in self.edges:
            for a in guard_atoms(g):
                seen.setdefault(a.key(), a)
        return list(seen.values())


@dataclass(frozen=True)
class BuchiAutomaton:
    states: tuple
    initial: object
    accepting: frozenset
    transitions: tuple  # ((src, letter, dst), ...)
    _succ: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        succ: dict = {}
        for s, a, t in self.transitions:
            succ.setdefault((s, a), []).append(t)
        object.__setattr__(self, "_succ", {k: tuple(dict.fromkeys(v)) for k, v in succ.items()})

    def successors(self, s, a) -> tuple:
        return self._succ.get((s, frozenset(a)), ())

    def alphabet(self) -> set:
        return {a for _, a, _ in self.transitions}


def expand(spec: BuchiSpec, sigma: Iterable[Letter]) -> BuchiAutomaton:
    """Explicit automaton: ``q -a-> q'`` iff some edge ``q -beta-> q'`` has ``a |= beta``."""
    sigma = sorted({frozenset(a) for a in sigma}, key=lambda a: sorted(a))
    trans = []
    for s, g, t in spec.edges:
        for a in sigma:
            if eval_on_letter(g, a):
                trans.append((s, a, t))
    trans = list(dict.fromkeys(trans))
    return BuchiAutomaton(tuple(spec.states), spec.initial, frozenset(spec.accepting), tuple(trans))


def letter_formula(a: Letter, universe: Iterable[str]) -> Guard:
    """Conjunction fixing every token of ``universe`` to its value in ``a``."""
    lits = []
    for tok in sorted(set(universe) | set(a)):
        g = token_guard(tok)
        lits.append(g if tok in a else Not(g))
    if not lits:
        return TRUE
    return lits[0] if len(lits) == 1 else And(tuple(lits))


def restrict_subalphabet(spec: BuchiSpec, sigma: Iterable[Letter]) -> BuchiSpec:
    """Conjoin every edge with ``OR_{a in sigma} phi_a``.

    The characterising formulas range over the tokens of the automaton and of
    ``sigma``; letters are assumed to be drawn from that universe.
    """
    sigma = sorted({frozenset(a) for a in sigma}, key=lambda a: sorted(a))
    universe = spec.tokens().union(*sigma) if sigma else spec.tokens()
    if not sigma:
        cover: Guard = FALSE
    else:
        parts = [letter_formula(a, universe) for a in sigma]
        cover = parts[0] if len(parts) == 1 else Or(tuple(parts))
    edges = tuple((s, And((cover, g)), t) for s, g, t in spec.edges)
    return BuchiSpec(spec.states, spec.initial, spec.accepting, edges)


def _decl_states(order: list, name: str):
    if name not in order:
        order.append(name)


def parse_ba(text: str) -> BuchiSpec:
    order: list = []
    start = None
    acc: list = []
    edges = []
    header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        kw = words[0]
        if not header:
            if kw != "ba":
                raise ParseError("expected 'ba' header", line=lineno, col=1)
            header = True
            continue
        if kw == "start":
            if len(words) != 2:
                raise ParseError("expected 'start <state>'", line=lineno, col=1)
            start = words[1]
            _decl_states(order, start)
        elif kw == "accept":
            for q in words[1:]:
                acc.append(q)
                _decl_states(order, q)
        elif kw == "state":
            for q in words[1:]:
                _decl_states(order, q)
        elif kw == "edge":
            if len(words) < 3:
                raise ParseError("expected 'edge <s> <t> [ <guard> ]'", line=lineno, col=1)
            lb = line.find("[")
            rb = line.rfind("]")
            if lb < 0 or rb < lb:
                raise ParseError("guard must be enclosed in [ ]", line=lineno, col=len(line) + 1)
            head = line[:lb].split()
            if len(head) != 3:
                raise ParseError("expected 'edge <s> <t> [ <guard> ]'", line=lineno, col=1)
            if line[rb + 1:].strip():
                raise ParseError("trailing text after ']'", line=lineno, col=rb + 2)
            g = parse_guard(line[lb + 1:rb], line=lineno, base_col=lb + 1)
            _decl_states(order, head[1])
            _decl_states(order, head[2])
            edges.append((head[1], g, head[2]))
        else:
            raise ParseError(f"unknown declaration {kw!r}", line=lineno, col=1)
    if not header:
        raise ParseError("empty automaton file", line=1, col=1)
    if start is None:
        raise ParseError("missing 'start'", line=1, col=1)
    return BuchiSpec(tuple(order), start, frozenset(acc), tuple(edges))


def ba_to_text(spec: BuchiSpec) -> str:
    lines = ["ba", "state " + " ".join(spec.states), f"start {spec.initial}"]
    acc = [q for q in spec.states if q in spec.accepting]
    if acc:
        lines.append("accept " + " ".join(acc))
    for s, g, t in spec.edges:
        lines.append(f"edge {s} {t} [ {guard_to_text(g, long_atoms=False)} ]")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# membership


def _post(B, S, a):
    out = set()
    for s in S:
        out.update(B.successors(s, a))
    return out


def _lasso_accepts(starts, is_acc, succ, period: Sequence) -> bool:
    """Some accepting product node ``(q_f, j)`` reachable from ``starts`` lies on a cycle.

    Product nodes are ``(state, j)`` where ``j`` indexes the period; only the
    reachable part is ever built.
    """
    m = len(period)
    seen = set()
    todo = deque((s, 0) for s in starts)
    seen.update(todo)
    edges: dict = {}
    while todo:
        node = todo.popleft()
        s, j = node
        nxt = [(t, (j + 1) % m) for t in succ(s, period[j])]
        edges[node] = nxt
        for n in nxt:
            if n not in seen:
                seen.add(n)
                todo.append(n)
    targets = sorted((n for n in seen if is_acc(n[0])), key=lambda n: (n[1], repr(n[0])))
    for f in targets:
        # is f reachable from itself in at least one step?
        vis = set()
        stack = list(edges.get(f, ()))
        while stack:
            n = stack.pop()
            if n == f:
                return True
            if n in vis:
                continue
            vis.add(n)
            stack.extend(edges.get(n, ()))
    return False


def membership(w: UpWord, B: BuchiAutomaton) -> bool:
    """``u . v^omega in L(B)`` by prefix subset simulation then a lasso search."""
    S = {B.initial}
    for a in w.prefix:
        S = _post(B, S, a)
        if not S:
            return False
    if not B.accepting:
        return False
    return _lasso_accepts(S, lambda s: s in B.accepting, B.successors, w.period)


class ImplicitAutomaton(Protocol):
    def initial_states(self) -> Iterable: ...

    def is_accepting(self, s) -> bool: ...

    def successors(self, s, letter) -> Iterable: ...


class ExplicitAsImplicit:
    """Wraps an explicit automaton and counts the states it is asked about."""

    def __init__(self, B: BuchiAutomaton):
        self.B = B
        self.probed: set = set()

    def initial_states(self):
        return [self.B.initial]

    def is_accepting(self, s):
        self.probed.add(s)
        return s in self.B.accepting

    def successors(self, s, letter):
        self.probed.add(s)
        return self.B.successors(s, letter)


def membership_onthefly(w: UpWord, auto) -> bool:
    """Same verdict as :func:`membership`, exploring ``auto`` lazily."""
    S = set(auto.initial_states())
    for a in w.prefix:
        nxt = set()
        for s in S:
            nxt.update(auto.successors(s, a))
        S = nxt
        if not S:
            return False
    return _lasso_accepts(S, auto.is_accepting, auto.successors, w.period)


# compressed prefixes ------------------------------------------------------


def _rel_letter(B: BuchiAutomaton, a) -> dict:
    return {s: frozenset(B.successors(s, a)) for s in B.states}


def _rel_compose(r1: dict, r2: dict) -> dict:
    out = {}
    for s, mids in r1.items():
        acc = set()
        for m in mids:
            acc |= r2.get(m, frozenset())
        out[s] = frozenset(acc)
    return out


def _rel_identity(states) -> dict:
    return {s: frozenset((s,)) for s in states}


def _rel_power(r: dict, n: int, states) -> dict:
    result = _rel_identity(states)
    base = r
    while n:
        if n & 1:
            result = _rel_compose(result, base)
        n >>= 1
        if n:
            base = _rel_compose(base, base)
    return result


def block_relation(B: BuchiAutomaton, letters: Sequence) -> dict:
    r = _rel_identity(B.states)
    for a in letters:
        r = _rel_compose(r, _rel_letter(B, a))
    return r


def membership_compressed(blocks: Sequence[tuple[Sequence, int]], period: Sequence, B: BuchiAutomaton) -> bool:
    """Membership of ``b1^{c1} ... bm^{cm} . period^omega`` without unrolling.

    Each block relation is raised to its count by repeated squaring of the
    state relation, so counts may be astronomically large.
    """
    S = {B.initial}
    for letters, cnt in blocks:
        if cnt == 0 or not letters:
            continue
        r = _rel_power(block_relation(B, letters), cnt, B.states)
        nxt = set()
        for s in S:
            nxt |= r.get(s, frozenset())
        S = nxt
        if not S:
            return False
    if not B.accepting:
        return False
    return _lasso_accepts(S, lambda s: s in B.accepting, B.successors, tuple(frozenset(a) for a in period))


# ---------------------------------------------------------------------------
# alternating automata


@dataclass(frozen=True)
class AbaSpec:
    """Edges ``(src, letter guard, positive Boolean formula over states)``.

    Successor formulas reuse the guard AST with :class:`Prop` leaves naming
    states; they must not contain negation or atoms.
    """

    states: tuple
    initial: str
    accepting: frozenset
    edges: tuple

    def __post_init__(self):
        for _, _, f in self.edges:
            _check_positive(f)

    def tokens(self) -> set[str]:
        out: set[str] = set()
        for _, g, _ in self.edges:
            out |= guard_tokens(g)
        return out

    def atoms(self):
        seen = {}
        for _, g, _ in self.edges:
            for a in guard_atoms(g):
                seen.setdefault(a.key(), a)
        return list(seen.values())

    def delta(self, q, a) -> Guard:
        parts = [f for s, g, f in self.edges if s == q and eval_on_letter(g, a)]
        if not parts:
            return FALSE
        return parts[0] if len(parts) == 1 else Or(tuple(parts))


def _check_positive(f: Guard):
    if isinstance(f, (Not, Atom)):
        raise FlatMcError("successor formulas must be positive Boolean combinations of states")
    for a in getattr(f, "args", ()):
        _check_positive(a)


def _minimise(sets) -> list[frozenset]:
    uniq = sorted(set(sets), key=lambda s: (len(s), sorted(map(str, s))))
    out: list[frozenset] = []
    for s in uniq:
        if not any(o <= s for o in out):
            out.append(s)
    return out


def minimal_models(f: Guard) -> list[frozenset]:
    """All minimal sets of states satisfying a positive formula."""
    if isinstance(f, Const):
        return [frozenset()] if f.value else []
    if isinstance(f, Prop):
        return [frozenset((f.name,))]
    if isinstance(f, Or):
        acc = []
        for a in f.args:
            acc.extend(minimal_models(a))
        return _minimise(acc)
    if isinstance(f, And):
        acc = [frozenset()]
        for a in f.args:
            ms = minimal_models(a)
            acc = _minimise(x | y for x in acc for y in ms)
            if not acc:
                return []
        return acc
    raise FlatMcError(f"not a positive formula: {f!r}")


def _models_of_set(aba: AbaSpec, S, a) -> list[frozenset]:
    parts = [aba.delta(q, a) for q in sorted(S)]
    if not parts:
        return [frozenset()]
    return minimal_models(And(tuple(parts)) if len(parts) > 1 else parts[0])


class Dealternated:
    """Miyano–Hayashi breakpoint automaton, built on demand.

    States are pairs ``(S, O)`` with ``O`` the set of obligations still owed
    a visit to an accepting state; ``(S, O)`` is accepting when ``O`` is empty.
    """

    def __init__(self, aba: AbaSpec, sigma: Iterable[Letter] = ()):
        self.aba = aba
        self.sigma = sorted({frozenset(a) for a in sigma}, key=lambda a: sorted(a))
        self.F = frozenset(aba.accepting)
        self._cache: dict = {}
        self.probed: set = set()

    def initial_states(self):
        return [(frozenset((self.aba.initial,)), frozenset())]

    def is_accepting(self, st) -> bool:
        return not st[1]

    def successors(self, st, letter):
        key = (st, frozenset(letter))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.probed.add(st)
        S, O = st
        a = frozenset(letter)
        out = []
        if not O:
            for X in _models_of_set(self.aba, S, a):
                out.append((X, X - self.F))
        else:
            for Y in _models_of_set(self.aba, O, a):
                for X in _models_of_set(self.aba, S - O, a):
                    out.append((X | Y, Y - self.F))
        res = tuple(dict.fromkeys(out))
        self._cache[key] = res
        return res

    def materialize(self, sigma: Iterable[Letter] | None = None, limit: int | None = None) -> BuchiAutomaton:
        """Explicit automaton over ``sigma`` restricted to reachable states."""
        sigma = self.sigma if sigma is None else sorted({frozenset(a) for a in sigma}, key=lambda a: sorted(a))
        init = self.initial_states()[0]
        seen = {init: 0}
        order = [init]
        trans = []
        todo = deque([init])
        while todo:
            st = todo.popleft()
            for a in sigma:
                for t in self.successors(st, a):
                    if t not in seen:
                        seen[t] = len(order)
                        order.append(t)
                        todo.append(t)
                        if limit is not None and len(order) > limit:
                            raise FlatMcError("dealternated automaton exceeds the state limit")
                    trans.append((seen[st], a, seen[t]))
        acc = frozenset(i for i, st in enumerate(order) if self.is_accepting(st))
        return BuchiAutomaton(tuple(range(len(order))), 0, acc, tuple(trans))


def dealternate(aba: AbaSpec, sigma: Iterable[Letter] = ()) -> Dealternated:
    return Dealternated(aba, sigma)


def aba_from_ba(spec: BuchiSpec) -> AbaSpec:
    edges = tuple((s, g, Prop(t)) for s, g, t in spec.edges)
    return AbaSpec(spec.states, spec.initial, spec.accepting, edges)


def aba_conjunction(specs: Sequence[BuchiSpec], init: str = "init") -> AbaSpec:
    """ABA accepting the intersection of the given Büchi specs.

    States are renamed ``b<k>_<q>``; a fresh initial state conjoins the
    initial moves of every component.
    """
    states = [init]
    acc = set()
    edges = []
    firsts = []
    for k, sp in enumerate(specs):
        ren = {q: f"b{k}_{q}" for q in sp.states}
        states.extend(ren[q] for q in sp.states)
        acc |= {ren[q] for q in sp.accepting}
        for s, g, t in sp.edges:
            edges.append((ren[s], g, Prop(ren[t])))
        firsts.append([(g, Prop(ren[t])) for s, g, t in sp.edges if s == sp.initial])
    for combo in product(*firsts):
        gs = tuple(g for g, _ in combo)
        ts = tuple(t for _, t in combo)
        edges.append((init, And(gs) if len(gs) > 1 else gs[0], And(ts) if len(ts) > 1 else ts[0]))
    return AbaSpec(tuple(states), init, frozenset(acc), tuple(edges))


def parse_aba(text: str) -> AbaSpec:
    order: list = []
    start = None
    acc: list = []
    edges = []
    header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        kw = words[0]
        if not header:
            if kw != "aba":
                raise ParseError("expected 'aba' header", line=lineno, col=1)
            header = True
            continue
        if kw == "start":
            if len(words) != 2:
                raise ParseError("expected 'start <state>'", line=lineno, col=1)
            start = words[1]
            _decl_states(order, start)
        elif kw == "accept":
            for q in words[1:]:
                acc.append(q)
                _decl_states(order, q)
        elif kw == "state":
            for q in words[1:]:
                _decl_states(order, q)
        elif kw == "edge":
            lb = line.find("[")
            rb = line.find("]", lb + 1)
            arrow = line.find("->", rb + 1) if rb >= 0 else -1
            if lb < 0 or rb < 0 or arrow < 0:
                raise ParseError("expected 'edge <s> [ <guard> ] -> <formula>'", line=lineno, col=1)
            head = line[:lb].split()
            if len(head) != 2:
                raise ParseError("expected a single source state", line=lineno, col=1)
            g = parse_guard(line[lb + 1:rb], line=lineno, base_col=lb + 1)
            f = parse_guard(line[arrow + 2:], line=lineno, base_col=arrow + 2)
            try:
                _check_positive(f)
            except FlatMcError as e:
                raise ParseError(str(e), line=lineno, col=arrow + 3) from None
            _decl_states(order, head[1])
            for q in guard_props(f):
                _decl_states(order, q)
            edges.append((head[1], g, f))
        else:
            raise ParseError(f"unknown declaration {kw!r}", line=lineno, col=1)
    if not header:
        raise ParseError("empty automaton file", line=1, col=1)
    if start is None:
        raise ParseError("missing 'start'", line=1, col=1)
    return AbaSpec(tuple(order), start, frozenset(acc), tuple(edges))


def aba_to_text(aba: AbaSpec) -> str:
    lines = ["aba", "state " + " ".join(aba.states), f"start {aba.initial}"]
    acc = [q for q in aba.states if q in aba.accepting]
    if acc:
        lines.append("accept " + " ".join(acc))
    for s, g, f in aba.edges:
        lines.append(f"edge {s} [ {guard_to_text(g, long_atoms=False)} ] -> {guard_to_text(f)}")
    return "\n".join(lines) + "\n"


def all_letters(tokens: Iterable[str]) -> list[Letter]:
    """Every subset of ``tokens`` in a deterministic order."""
    toks = sorted(set(tokens))
    out = []
    for bits in product((False, True), repeat=len(toks)):
        out.append(frozenset(t for t, b in zip(toks, bits) if b))
    return out


def iter_words(sigma: Sequence[Letter], max_prefix: int, max_period: int) -> Iterator[UpWord]:
    for lp in range(max_prefix + 1):
        for pre in product(sigma, repeat=lp):
            for lv in range(1, max_period + 1):
                for per in product(sigma, repeat=lv):
                    yield UpWord(pre, per)
