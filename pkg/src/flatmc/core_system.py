"""Counter systems: guards, configurations, runs, flatness and the text DSL.

A system of dimension ``n`` has named control states, a propositional
labelling and a list of transitions.  Transition ids are list indices.
Guards are Boolean combinations of linear atoms ``sum a_i*x_i ~ b``; the same
guard type, extended with proposition leaves, labels specification edges.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import (
    DimensionMismatch,
    GuardFailed,
    NonNegativityViolation,
    ParseError,
    WrongSource,
)

CMPS = ("<=", ">=", "=", "<", ">")

_CMP_FN = {
    "=": lambda a, b: a == b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


# ---------------------------------------------------------------------------
# atoms and guards


@dataclass(frozen=True)
class LinearAtom:
    """``sum coeffs[i] * x_{i+1}  cmp  rhs`` over counter vectors."""

    coeffs: tuple[int, ...]
    cmp: str
    rhs: int

    def __post_init__(self):
        if self.cmp not in _CMP_FN:
            raise ValueError(f"bad comparison {self.cmp!r}")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", int(self.rhs))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def value(self, v: Sequence[int]) -> int:
        if len(v) != len(self.coeffs):
            raise DimensionMismatch(
                f"atom over {len(self.coeffs)} counters evaluated on vector of length {len(v)}"
            )
        return sum(a * x for a, x in zip(self.coeffs, v))

    def holds(self, v: Sequence[int]) -> bool:
        return _CMP_FN[self.cmp](self.value(v), self.rhs)

    def with_dim(self, n: int) -> "LinearAtom":
        """Pad (or trim zero) coefficients so the atom ranges over ``n`` counters."""
        cs = list(self.coeffs)
        while len(cs) > n:
            if cs[-1] != 0:
                raise DimensionMismatch(f"atom {self.token()} mentions x{len(cs)} but n = {n}")
            cs.pop()
        cs.extend([0] * (n - len(cs)))
        return LinearAtom(tuple(cs), self.cmp, self.rhs)

    def key(self) -> tuple:
        """Dimension independent identity (trailing zero coefficients dropped)."""
        cs = list(self.coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        return (tuple(cs), self.cmp, self.rhs)

    def token(self) -> str:
        """Compact canonical spelling used inside letters, e.g. ``x1-x2=0``."""
        parts = []
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            mag = abs(a)
            body = f"x{i + 1}" if mag == 1 else f"{mag}*x{i + 1}"
            if not parts:
                parts.append(("-" if a < 0 else "") + body)
            else:
                parts.append(("-" if a < 0 else "+") + body)
        lhs = "".join(parts) if parts else "0"
        return f"{lhs}{self.cmp}{self.rhs}"

    def dsl(self) -> str:
        """Spelling in the long system-DSL form ``1*x1 + -1*x2 = 0``."""
        terms = [f"{a}*x{i + 1}" for i, a in enumerate(self.coeffs) if a != 0]
        lhs = " + ".join(terms) if terms else "0*x1"
        return f"{lhs} {self.cmp} {self.rhs}"

    def __str__(self):
        return self.token()


class Guard:
    """Boolean expression node.  Subclasses are immutable and hashable."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Const(Guard):
    value: bool


@dataclass(frozen=True)
class Atom(Guard):
    atom: LinearAtom


@dataclass(frozen=True)
class Prop(Guard):
    name: str


@dataclass(frozen=True)
class Not(Guard):
    arg: Guard


@dataclass(frozen=True)
class And(Guard):
    args: tuple


@dataclass(frozen=True)
class Or(Guard):
    args: tuple


TRUE = Const(True)
FALSE = Const(False)


def eval_guard(g: Guard, v: Sequence[int]) -> bool:
    """Evaluate a counter guard on a counter vector."""
    if isinstance(g, Atom):
        return g.atom.holds(v)
    if isinstance(g, Const):
        return g.value
    if isinstance(g, Not):
        return not eval_guard(g.arg, v)
    if isinstance(g, And):
        # evaluate every child so dimension errors are never masked
        return all([eval_guard(a, v) for a in g.args])
    if isinstance(g, Or):
        return any([eval_guard(a, v) for a in g.args])
    if isinstance(g, Prop):
        raise ValueError(f"proposition {g.name} inside a counter guard")
    raise TypeError(g)


def eval_on_letter(g: Guard, letter: frozenset) -> bool:
    """Propositional reading of a specification guard on a letter.

    Letters are sets of proposition names and atom tokens; anything absent
    from the letter is false.
    """
    if isinstance(g, Prop):
        return g.name in letter
    if isinstance(g, Atom):
        return g.atom.token() in letter
    if isinstance(g, Const):
        return g.value
    if isinstance(g, Not):
        return not eval_on_letter(g.arg, letter)
    if isinstance(g, And):
        return all(eval_on_letter(a, letter) for a in g.args)
    if isinstance(g, Or):
        return any(eval_on_letter(a, letter) for a in g.args)
    raise TypeError(g)


def guard_atoms(g: Guard) -> list[LinearAtom]:
    """Atom leaves in left-to-right order, with repetitions."""
    out: list[LinearAtom] = []

    def walk(h):
        if isinstance(h, Atom):
            out.append(h.atom)
        elif isinstance(h, Not):
            walk(h.arg)
        elif isinstance(h, (And, Or)):
            for a in h.args:
                walk(a)

    walk(g)
    return out


def guard_props(g: Guard) -> list[str]:
    out: list[str] = []

    def walk(h):
        if isinstance(h, Prop):
            out.append(h.name)
        elif isinstance(h, Not):
            walk(h.arg)
        elif isinstance(h, (And, Or)):
            for a in h.args:
                walk(a)

    walk(g)
    return out


def map_atoms(g: Guard, fn) -> Guard:
    """Rebuild ``g`` with every atom replaced by ``fn(atom)``."""
    if isinstance(g, Atom):
        return Atom(fn(g.atom))
    if isinstance(g, Not):
        return Not(map_atoms(g.arg, fn))
    if isinstance(g, And):
        return And(tuple(map_atoms(a, fn) for a in g.args))
    if isinstance(g, Or):
        return Or(tuple(map_atoms(a, fn) for a in g.args))
    return g


def guard_to_text(g: Guard, long_atoms: bool = True) -> str:
    """Print in the DSL grammar; binary connectives are always parenthesised."""
    if isinstance(g, Const):
        return "true" if g.value else "false"
    if isinstance(g, Atom):
        return g.atom.dsl() if long_atoms else g.atom.token()
    if isinstance(g, Prop):
        return g.name
    if isinstance(g, Not):
        return "!" + guard_to_text(g.arg, long_atoms)
    if isinstance(g, (And, Or)):
        if not g.args:
            return "true" if isinstance(g, And) else "false"
        if len(g.args) == 1:
            return guard_to_text(g.args[0], long_atoms)
        op = " & " if isinstance(g, And) else " | "
        return "(" + op.join(guard_to_text(a, long_atoms) for a in g.args) + ")"
    raise TypeError(g)


# ---------------------------------------------------------------------------
# guard parser

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_COUNTER = re.compile(r"x([0-9]+)$")
_INT = re.compile(r"[0-9]+")


class _GuardParser:
    """Recursive descent over one string.  ``base_col`` shifts error columns."""

    def __init__(self, text: str, line: int | None = None, base_col: int = 0, allow_props: bool = True):
        self.s = text
        self.i = 0
        self.line = line
        self.base_col = base_col
        self.allow_props = allow_props

    def err(self, msg, at=None):
        at = self.i if at is None else at
        raise ParseError(msg, line=self.line, col=self.base_col + at + 1, pos=at)

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self, k=1):
        self.ws()
        return self.s[self.i:self.i + k]

    def parse(self) -> Guard:
        g = self.disj()
        self.ws()
        if self.i != len(self.s):
            self.err(f"unexpected {self.s[self.i]!r}")
        return g

    def disj(self):
        args = [self.conj()]
        while True:
            if self.peek(2) == "||":
                self.i += 2
            elif self.peek() == "|":
                self.i += 1
            else:
                break
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while True:
            if self.peek(2) == "&&":
                self.i += 2
            elif self.peek() == "&":
                self.i += 1
            else:
                break
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        c = self.peek()
        if c in ("!", "~"):
            self.i += 1
            return Not(self.unary())
        if c == "(":
            self.i += 1
            g = self.disj()
            if self.peek() != ")":
                self.err("expected ')'")
            self.i += 1
            return g
        if c == "":
            self.err("unexpected end of guard")
        m = _IDENT.match(self.s, self.i)
        if m and not _COUNTER.match(m.group()):
            word = m.group()
            # an identifier directly followed by '*' or a comparison is not a prop
            if word in ("true", "false"):
                self.i = m.end()
                return TRUE if word == "true" else FALSE
            if word in ("T", "top"):
                self.i = m.end()
                return TRUE
            if not self.allow_props:
                self.err(f"propositions are not allowed here: {word!r}")
            self.i = m.end()
            return Prop(word)
        return Atom(self.atom())

    def atom(self) -> LinearAtom:
        lhs, lc = self.linexpr()
        self.ws()
        cmp = None
        for op in ("<=", ">=", "==", "=<", "=>", "=", "<", ">"):
            if self.s.startswith(op, self.i):
                cmp = {"==": "=", "=<": "<=", "=>": ">="}.get(op, op)
                self.i += len(op)
                break
        if cmp is None:
            self.err("expected comparison operator")
        rhs, rc = self.linexpr()
        coeffs = dict(lhs)
        for k, a in rhs.items():
            coeffs[k] = coeffs.get(k, 0) - a
        n = max(coeffs) if coeffs else 0
        vec = tuple(coeffs.get(i, 0) for i in range(1, n + 1))
        return LinearAtom(vec, cmp, rc - lc)

    def linexpr(self):
        """Returns (coefficient map, constant)."""
        coeffs: dict[int, int] = {}
        const = 0
        first = True
        while True:
            self.ws()
            sign = 1
            if self.i < len(self.s) and self.s[self.i] in "+-":
                sign = -1 if self.s[self.i] == "-" else 1
                self.i += 1
                self.ws()
                # "a + -2*x1" as written by dsl()
                if self.i < len(self.s) and self.s[self.i] in "+-":
                    sign *= -1 if self.s[self.i] == "-" else 1
                    self.i += 1
                    self.ws()
            elif not first:
                break
            num = None
            m = _INT.match(self.s, self.i)
            if m:
                num = int(m.group())
                self.i = m.end()
                self.ws()
                if self.i < len(self.s) and self.s[self.i] == "*":
                    self.i += 1
                    self.ws()
            if self.i < len(self.s) and self.s[self.i] == "x":
                m2 = re.compile(r"x([0-9]+)").match(self.s, self.i)
                if not m2:
                    self.err("expected counter name x<i>")
                idx = int(m2.group(1))
                if idx < 1:
                    self.err("counters are numbered from x1")
                self.i = m2.end()
                a = sign * (1 if num is None else num)
                coeffs[idx] = coeffs.get(idx, 0) + a
            elif num is not None:
                const += sign * num
            else:
                self.err("expected term")
            first = False
        return coeffs, const


def parse_guard(text: str, allow_props: bool = True, line: int | None = None, base_col: int = 0) -> Guard:
    return _GuardParser(text, line=line, base_col=base_col, allow_props=allow_props).parse()


def parse_atom(text: str) -> LinearAtom:
    p = _GuardParser(text)
    a = p.atom()
    p.ws()
    if p.i != len(text):
        p.err("trailing input after atom")
    return a


# ---------------------------------------------------------------------------
# systems, configurations, runs


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    guard: Guard
    update: tuple[int, ...]


@dataclass(frozen=True)
class CounterSystem:
    dim: int
    states: tuple[str, ...]
    labels: tuple[frozenset, ...]
    transitions: tuple[Transition, ...]
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        if len(self.labels) != len(self.states):
            raise ValueError("one label set per state required")
        idx = {q: i for i, q in enumerate(self.states)}
        fixed = []
        for t in self.transitions:
            if t.src not in idx or t.dst not in idx:
                raise ValueError(f"unknown state in transition {t}")
            if len(t.update) != self.dim:
                raise DimensionMismatch(f"update {t.update} has length {len(t.update)}, expected {self.dim}")
            g = map_atoms(t.guard, lambda a: a.with_dim(self.dim))
            if guard_props(g):
                raise ValueError("counter guards cannot mention propositions")
            fixed.append(Transition(t.src, t.dst, g, tuple(int(u) for u in t.update)))
        object.__setattr__(self, "transitions", tuple(fixed))
        object.__setattr__(self, "labels", tuple(frozenset(l) for l in self.labels))
        object.__setattr__(self, "_index", idx)

    @staticmethod
    def build(dim: int, states: Iterable, transitions: Iterable) -> "CounterSystem":
        """Convenience constructor.

        ``states`` holds names or ``(name, props)`` pairs; ``transitions`` holds
        ``(src, dst, guard, update)`` tuples where ``guard`` may be a string.
        """
        names, labels = [], []
        for s in states:
            if isinstance(s, str):
                names.append(s)
                labels.append(frozenset())
            else:
                names.append(s[0])
                labels.append(frozenset(s[1]))
        ts = []
        for src, dst, g, u in transitions:
            if isinstance(g, str):
                g = parse_guard(g, allow_props=False)
            elif g is None:
                g = TRUE
            ts.append(Transition(src, dst, g, tuple(u)))
        return CounterSystem(dim, tuple(names), tuple(labels), tuple(ts))

    def state_id(self, q: str) -> int:
        return self._index[q]

    def label(self, q: str) -> frozenset:
        return self.labels[self._index[q]]

    def outgoing(self, q: str) -> list[int]:
        return [i for i, t in enumerate(self.transitions) if t.src == q]

    def props(self) -> frozenset:
        out = set()
        for l in self.labels:
            out |= l
        return frozenset(out)

    def atoms(self) -> list[LinearAtom]:
        seen, out = set(), []
        for t in self.transitions:
            for a in guard_atoms(t.guard):
                if a.key() not in seen:
                    seen.add(a.key())
                    out.append(a)
        return out


@dataclass(frozen=True)
class Configuration:
    state: str
    counters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counters", tuple(int(c) for c in self.counters))
        if any(c < 0 for c in self.counters):
            raise NonNegativityViolation(f"negative counter in {self.counters}")

    def __str__(self):
        return f"({self.state},({','.join(map(str, self.counters))}))"


def step(sys: CounterSystem, c: Configuration, t: int) -> Configuration:
    tr = sys.transitions[t]
    if tr.src != c.state:
        raise WrongSource(f"transition d{t + 1} leaves {tr.src}, not {c.state}")
    if len(c.counters) != sys.dim:
        raise DimensionMismatch(f"configuration has {len(c.counters)} counters, system has {sys.dim}")
    if not eval_guard(tr.guard, c.counters):
        raise GuardFailed(f"guard of d{t + 1} fails at {c.counters}")
    nxt = tuple(a + b for a, b in zip(c.counters, tr.update))
    if any(x < 0 for x in nxt):
        raise NonNegativityViolation(f"d{t + 1} from {c.counters} yields {nxt}")
    return Configuration(tr.dst, nxt)


def can_step(sys: CounterSystem, c: Configuration, t: int) -> bool:
    tr = sys.transitions[t]
    if tr.src != c.state or not eval_guard(tr.guard, c.counters):
        return False
    return all(a + b >= 0 for a, b in zip(c.counters, tr.update))


@dataclass(frozen=True)
class Run:
    """A finite run, or a lasso when ``loop_from`` is set.

    For a lasso, ``steps[loop_from:]`` is repeated forever; ``configs`` then
    lists the configurations along one unfolding of ``steps``.
    """

    start: Configuration
    steps: tuple[int, ...]
    loop_from: int | None = None

    def configs(self, sys: CounterSystem) -> list[Configuration]:
        out = [self.start]
        c = self.start
        for t in self.steps:
            c = step(sys, c, t)
            out.append(c)
        return out

    def __len__(self):
        return len(self.steps)


def enumerate_runs(sys: CounterSystem, c0: Configuration, depth: int) -> list[Run]:
    """All finite runs of at most ``depth`` steps from ``c0``, in BFS order."""
    out = [Run(c0, ())]
    frontier = deque([(c0, ())])
    for _ in range(depth):
        nxt = deque()
        while frontier:
            c, steps = frontier.popleft()
            for t in sys.outgoing(c.state):
                if can_step(sys, c, t):
                    c2 = step(sys, c, t)
                    s2 = steps + (t,)
                    out.append(Run(c0, s2))
                    nxt.append((c2, s2))
        frontier = nxt
    return out


def iter_runs(sys: CounterSystem, c0: Configuration, depth: int) -> Iterator[tuple[tuple[int, ...], list[Configuration]]]:
    """Depth-first variant yielding (steps, configs) pairs; cheaper than Run objects."""
    stack = [((), [c0])]
    while stack:
        steps, cfgs = stack.pop()
        yield steps, cfgs
        if len(steps) == depth:
            continue
        c = cfgs[-1]
        for t in reversed(sys.outgoing(c.state)):
            if can_step(sys, c, t):
                stack.append((steps + (t,), cfgs + [step(sys, c, t)]))


# ---------------------------------------------------------------------------
# flatness


def _sccs(nodes: Sequence[str], succ: dict) -> list[list[str]]:
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = [0]

    def visit(v):
        # iterative Tarjan
        work = [(v, iter(succ.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)

    for v in nodes:
        if v not in index:
            visit(v)
    return out


def cycle_structure(sys: CounterSystem) -> list[list[int]]:
    """For each strongly connected component with internal edges, its edge ids."""
    succ: dict[str, list[str]] = {}
    for t in sys.transitions:
        succ.setdefault(t.src, []).append(t.dst)
    comps = _sccs(sys.states, succ)
    where = {}
    for k, comp in enumerate(comps):
        for q in comp:
            where[q] = k
    inner: dict[int, list[int]] = {}
    for i, t in enumerate(sys.transitions):
        if where[t.src] == where[t.dst]:
            inner.setdefault(where[t.src], []).append(i)
    return [inner[k] for k in sorted(inner)]


def is_flat(sys: CounterSystem) -> bool:
    """Every state lies on at most one simple cycle.

    Equivalently each strongly connected component carries at most as many
    internal edges as it has states: a component with one cycle has exactly
    one internal edge per state, and any extra edge creates a second cycle
    through some state.
    """
    for edges in cycle_structure(sys):
        nodes = {sys.transitions[i].src for i in edges}
        if len(edges) > len(nodes):
            return False
    return True


def cycle_of(sys: CounterSystem) -> dict[str, tuple[int, ...]]:
    """Map each state lying on a cycle to that cycle, rotated to start there.

    Requires a flat system.
    """
    out: dict[str, tuple[int, ...]] = {}
    for edges in cycle_structure(sys):
        by_src = {sys.transitions[i].src: i for i in edges}
        for q in by_src:
            seq, cur = [], q
            while True:
                i = by_src[cur]
                seq.append(i)
                cur = sys.transitions[i].dst
                if cur == q:
                    break
            out[q] = tuple(seq)
    return out


# ---------------------------------------------------------------------------
# text DSL

_TRANS = re.compile(r"trans\s+(\S+)\s*->\s*(\S+)\s+guard\s+(.*?)\s+update\s*(\(.*\))\s*$")


def parse_system(text: str) -> CounterSystem:
    dim = None
    names: list[str] = []
    labels: dict[str, frozenset] = {}
    trans: list[Transition] = []
    pending: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        words = body.split()
        kw = words[0]
        if kw == "system":
            if len(words) != 2 or not words[1].isdigit():
                raise ParseError("expected 'system <n>'", line=lineno, col=indent + 1)
            if dim is not None:
                raise ParseError("duplicate 'system' header", line=lineno, col=indent + 1)
            dim = int(words[1])
        elif kw == "state":
            if len(words) < 2:
                raise ParseError("expected state name", line=lineno, col=indent + len(kw) + 2)
            name = words[1]
            if name in labels:
                raise ParseError(f"duplicate state {name}", line=lineno, col=raw.find(name) + 1)
            props: list[str] = []
            if len(words) > 2:
                if words[2] != "props":
                    raise ParseError("expected 'props'", line=lineno, col=raw.find(words[2]) + 1)
                props = words[3:]
            names.append(name)
            labels[name] = frozenset(props)
        elif kw == "trans":
            m = _TRANS.match(body)
            if not m:
                col = indent + 1
                if "guard" not in body:
                    col = len(line) + 1
                    raise ParseError("expected 'guard <expr>'", line=lineno, col=col)
                if "update" not in body:
                    raise ParseError("expected 'update (<i1>,...,<in>)'", line=lineno, col=len(line) + 1)
                raise ParseError("malformed transition", line=lineno, col=col)
            src, dst, gtext, utext = m.groups()
            gcol = line.find(gtext, line.find("guard") + 5)
            g = parse_guard(gtext, allow_props=False, line=lineno, base_col=gcol)
            ucol = line.rfind(utext)
            inner = utext.strip()[1:-1].strip()
            try:
                upd = tuple(int(p) for p in inner.split(",")) if inner else ()
            except ValueError:
                raise ParseError("update entries must be integers", line=lineno, col=ucol + 1) from None
            trans.append(Transition(src, dst, g, upd))
            pending.append((lineno, src, dst))
        else:
            raise ParseError(f"unknown declaration {kw!r}", line=lineno, col=indent + 1)
    if dim is None:
        raise ParseError("missing 'system <n>' header", line=1, col=1)
    for lineno, src, dst in pending:
        for q in (src, dst):
            if q not in labels:
                raise ParseError(f"undeclared state {q}", line=lineno, col=1)
    for lineno, t in zip((p[0] for p in pending), trans):
        if len(t.update) != dim:
            raise ParseError(f"update has {len(t.update)} entries, expected {dim}", line=lineno, col=1)
        for a in guard_atoms(t.guard):
            if a.dim > dim and any(a.coeffs[dim:]):
                raise ParseError(f"guard mentions x{a.dim} but the system has {dim} counters", line=lineno, col=1)
    return CounterSystem(dim, tuple(names), tuple(labels[q] for q in names), tuple(trans))


def system_to_text(sys: CounterSystem) -> str:
    lines = [f"system {sys.dim}"]
    for q, l in zip(sys.states, sys.labels):
        lines.append(f"state {q}" + (" props " + " ".join(sorted(l)) if l else ""))
    for t in sys.transitions:
        upd = "(" + ",".join(str(u) for u in t.update) + ")"
        lines.append(f"trans {t.src} -> {t.dst} guard {guard_to_text(t.guard)} update {upd}")
    return "\n".join(lines) + "\n"


def parse_configuration(sys: CounterSystem, text: str) -> Configuration:
    """Parse ``"<state> v1 ... vn"``."""
    parts = text.split()
    if not parts:
        raise ParseError("empty configuration", pos=0)
    q, vals = parts[0], parts[1:]
    if q not in sys._index:
        raise ParseError(f"unknown state {q}", pos=0)
    if len(vals) != sys.dim:
        raise DimensionMismatch(f"expected {sys.dim} counter values, got {len(vals)}")
    try:
        v = tuple(int(x) for x in vals)
    except ValueError:
        raise ParseError("counter values must be integers", pos=len(q) + 1) from None
    return Configuration(q, v)
