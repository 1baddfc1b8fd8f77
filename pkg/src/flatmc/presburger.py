"""Quantifier-free linear arithmetic over the naturals.

Formulas are Boolean combinations of linear atoms over named variables.  An
existential binder is accepted at positive positions only; its variables are
renamed apart and treated as extra unknowns by the solver.

Text syntax (prefix)::

    (and (le (+ (* 2 x1) (* -1 x2)) 4) (not (eq x1 0)))
    (exists (y) (eq x1 (+ (* 3 y) x2)))

Infix input such as ``2*x1 - x2 <= 4 & !(x1 = 0)`` is accepted as sugar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import count
from typing import Iterable, Mapping

from . import _lp
from .errors import FlatMcError, ParseError, UnboundVariable

SAT, UNSAT, UNKNOWN = _lp.SAT, _lp.UNSAT, _lp.UNKNOWN

OPS = ("le", "lt", "ge", "gt", "eq")
_SYM = {"le": "<=", "lt": "<", "ge": ">=", "gt": ">", "eq": "="}
_FROM_SYM = {v: k for k, v in _SYM.items()}

#: default hard cap on the small-model box (bits); beyond it the box is not imposed
BOX_BITS_CAP = 4096


class Unknown(FlatMcError):
    """Feasibility could not be decided within the configured caps."""


# ---------------------------------------------------------------------------
# linear terms


class Lin:
    """Immutable-by-convention linear expression ``sum c*v + const``."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Mapping[str, int] | None = None, const: int = 0):
        self.coeffs = {v: c for v, c in (coeffs or {}).items() if c}
        self.const = const

    @staticmethod
    def var(name: str) -> "Lin":
        return Lin({name: 1})

    @staticmethod
    def of(x) -> "Lin":
        if isinstance(x, Lin):
            return x
        if isinstance(x, int):
            return Lin({}, x)
        if isinstance(x, str):
            return Lin.var(x)
        raise TypeError(x)

    def __add__(self, other):
        other = Lin.of(other)
        cs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            cs[v] = cs.get(v, 0) + c
        return Lin(cs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Lin({v: -c for v, c in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-Lin.of(other))

    def __rsub__(self, other):
        return Lin.of(other) - self

    def __mul__(self, k: int):
        return Lin({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    __rmul__ = __mul__

    def is_const(self) -> bool:
        return not self.coeffs

    def evaluate(self, asg: Mapping[str, int]) -> int:
        s = self.const
        for v, c in self.coeffs.items():
            if v not in asg:
                raise UnboundVariable(v)
            s += c * asg[v]
        return s

    def subst(self, asg: Mapping[str, "Lin | int"]) -> "Lin":
        out = Lin({}, self.const)
        for v, c in self.coeffs.items():
            if v in asg:
                out = out + Lin.of(asg[v]) * c
            else:
                out = out + Lin({v: c})
        return out

    def key(self):
        return (tuple(sorted(self.coeffs.items())), self.const)

    def __eq__(self, other):
        return isinstance(other, Lin) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Lin({self.coeffs}, {self.const})"


# ---------------------------------------------------------------------------
# formula AST


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj([self, other])

    def __or__(self, other):
        return disj([self, other])

    def __invert__(self):
        return PNot(self)


@dataclass(frozen=True)
class PTrue(Formula):
    pass


@dataclass(frozen=True)
class PFalse(Formula):
    pass


@dataclass(frozen=True)
class PAtom(Formula):
    """``sum terms  op  rhs`` with canonical sorted nonzero terms."""

    op: str
    terms: tuple  # ((var, coef), ...)
    rhs: int

    def lin(self) -> Lin:
        return Lin(dict(self.terms))


@dataclass(frozen=True)
class PNot(Formula):
    arg: Formula


@dataclass(frozen=True)
class PAnd(Formula):
    args: tuple


@dataclass(frozen=True)
class POr(Formula):
    args: tuple


@dataclass(frozen=True)
class PExists(Formula):
    vars: tuple
    body: Formula


TOP = PTrue()
BOT = PFalse()


def atom(lhs, op: str, rhs=0) -> PAtom:
    """Build ``lhs op rhs`` from Lin/int/str operands, moving constants right."""
    op = _FROM_SYM.get(op, op)
    if op not in OPS:
        raise ValueError(op)
    e = Lin.of(lhs) - Lin.of(rhs)
    return PAtom(op, tuple(sorted(e.coeffs.items())), -e.const)


def le(a, b):
    return atom(a, "le", b)


def lt(a, b):
    return atom(a, "lt", b)


def ge(a, b):
    return atom(a, "ge", b)


def gt(a, b):
    return atom(a, "gt", b)


def eq(a, b):
    return atom(a, "eq", b)


def conj(args: Iterable[Formula]) -> Formula:
    out = []
    for a in args:
        if isinstance(a, PTrue):
            continue
        if isinstance(a, PFalse):
            return BOT
        if isinstance(a, PAnd):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TOP
    return out[0] if len(out) == 1 else PAnd(tuple(out))


def disj(args: Iterable[Formula]) -> Formula:
    out = []
    for a in args:
        if isinstance(a, PFalse):
            continue
        if isinstance(a, PTrue):
            return TOP
        if isinstance(a, POr):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return BOT
    return out[0] if len(out) == 1 else POr(tuple(out))


def exists(vs: Iterable[str], body: Formula) -> Formula:
    vs = tuple(vs)
    return PExists(vs, body) if vs else body


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, PAtom):
        return {v for v, _ in f.terms}
    if isinstance(f, PNot):
        return free_vars(f.arg)
    if isinstance(f, (PAnd, POr)):
        out = set()
        for a in f.args:
            out |= free_vars(a)
        return out
    if isinstance(f, PExists):
        return free_vars(f.body) - set(f.vars)
    return set()


def _cmp(op, s, r):
    if op == "le":
        return s <= r
    if op == "lt":
        return s < r
    if op == "ge":
        return s >= r
    if op == "gt":
        return s > r
    return s == r


def evaluate(f: Formula, asg: Mapping[str, int]) -> bool:
    """Truth of a quantifier-free formula under an assignment over N."""
    if isinstance(f, PAtom):
        s = 0
        for v, c in f.terms:
            if v not in asg:
                raise UnboundVariable(v)
            s += c * asg[v]
        return _cmp(f.op, s, f.rhs)
    if isinstance(f, PTrue):
        return True
    if isinstance(f, PFalse):
        return False
    if isinstance(f, PNot):
        return not evaluate(f.arg, asg)
    if isinstance(f, PAnd):
        missing = free_vars(f) - set(asg)
        if missing:
            raise UnboundVariable(sorted(missing)[0])
        return all(evaluate(a, asg) for a in f.args)
    if isinstance(f, POr):
        missing = free_vars(f) - set(asg)
        if missing:
            raise UnboundVariable(sorted(missing)[0])
        return any(evaluate(a, asg) for a in f.args)
    if isinstance(f, PExists):
        inner = substitute(f.body, {v: asg[v] for v in free_vars(f) if v in asg})
        missing = free_vars(inner) - set(f.vars)
        if missing:
            raise UnboundVariable(sorted(missing)[0])
        res = check(inner)
        if res.status == _lp.UNKNOWN:
            raise Unknown("existential subformula undecided")
        return res.status == _lp.SAT
    raise TypeError(f)


# public alias matching the operation name
eval = evaluate  # noqa: A001


def substitute(f: Formula, asg: Mapping[str, "int | Lin"]) -> Formula:
    """Replace variables by constants or linear terms, folding ground atoms."""
    if isinstance(f, PAtom):
        e = Lin(dict(f.terms)).subst(asg)
        if e.is_const():
            return TOP if _cmp(f.op, e.const, f.rhs) else BOT
        return atom(e, f.op, f.rhs)
    if isinstance(f, PNot):
        a = substitute(f.arg, asg)
        if isinstance(a, PTrue):
            return BOT
        if isinstance(a, PFalse):
            return TOP
        return PNot(a)
    if isinstance(f, PAnd):
        return conj(substitute(a, asg) for a in f.args)
    if isinstance(f, POr):
        return disj(substitute(a, asg) for a in f.args)
    if isinstance(f, PExists):
        inner = {k: v for k, v in asg.items() if k not in f.vars}
        return exists(f.vars, substitute(f.body, inner))
    return f


def rename(f: Formula, mapping: Mapping[str, str]) -> Formula:
    return substitute(f, {k: Lin.var(v) for k, v in mapping.items()})


# ---------------------------------------------------------------------------
# size and small-model box


def size(f: Formula) -> int:
    """Formula size N: atoms + connectives + total coefficient bit-length.

    Coefficients include the right-hand side constant; zero counts one bit.
    """
    if isinstance(f, PAtom):
        bits = sum(max(1, abs(c).bit_length()) for _, c in f.terms)
        return 1 + bits + max(1, abs(f.rhs).bit_length())
    if isinstance(f, (PTrue, PFalse)):
        return 1
    if isinstance(f, PNot):
        return 1 + size(f.arg)
    if isinstance(f, (PAnd, POr)):
        return max(0, len(f.args) - 1) + sum(size(a) for a in f.args)
    if isinstance(f, PExists):
        return 1 + size(f.body)
    raise TypeError(f)


@dataclass(frozen=True)
class SmallModelBound:
    n_vars: int
    size_N: int
    box: int

    @property
    def bits(self) -> int:
        return 2 * self.size_N * (self.size_N + 2)


def pstar(n: int) -> int:
    """``2^(2N(N+2))``."""
    return 1 << (2 * n * (n + 2))


def small_model_box(f_or_n) -> SmallModelBound:
    if isinstance(f_or_n, int):
        return SmallModelBound(0, f_or_n, pstar(f_or_n))
    n = size(f_or_n)
    return SmallModelBound(len(free_vars(f_or_n)), n, pstar(n))


def log2_pstar(n: int) -> int:
    return 2 * n * (n + 2)


# ---------------------------------------------------------------------------
# normal forms


def nnf(f: Formula, neg: bool = False) -> Formula:
    """Negation normal form with ``le``/``eq`` atoms only; binders kept."""
    if isinstance(f, PAtom):
        e = Lin(dict(f.terms))
        r = f.rhs
        op = f.op
        if neg:
            op = {"le": "gt", "lt": "ge", "ge": "lt", "gt": "le", "eq": "ne"}[op]
        if op == "le":
            return atom(e, "le", r)
        if op == "lt":
            return atom(e, "le", r - 1)
        if op == "ge":
            return atom(-e, "le", -r)
        if op == "gt":
            return atom(-e, "le", -r - 1)
        if op == "eq":
            return atom(e, "eq", r)
        return disj([atom(e, "le", r - 1), atom(-e, "le", -r - 1)])
    if isinstance(f, PTrue):
        return BOT if neg else TOP
    if isinstance(f, PFalse):
        return TOP if neg else BOT
    if isinstance(f, PNot):
        return nnf(f.arg, not neg)
    if isinstance(f, PAnd):
        parts = [nnf(a, neg) for a in f.args]
        return disj(parts) if neg else conj(parts)
    if isinstance(f, POr):
        parts = [nnf(a, neg) for a in f.args]
        return conj(parts) if neg else disj(parts)
    if isinstance(f, PExists):
        if neg:
            raise FlatMcError("existential binder under negation is not supported")
        return PExists(f.vars, nnf(f.body))
    raise TypeError(f)


_bind = count()


def _strip_binders(f: Formula, used: set) -> Formula:
    """Rename bound variables apart and drop the binders (positive positions)."""
    if isinstance(f, PExists):
        mapping = {}
        for v in f.vars:
            while True:
                nv = f"{v}__{next(_bind)}"
                if nv not in used:
                    break
            used.add(nv)
            mapping[v] = nv
        return _strip_binders(rename(f.body, mapping), used)
    if isinstance(f, PAnd):
        return conj(_strip_binders(a, used) for a in f.args)
    if isinstance(f, POr):
        return disj(_strip_binders(a, used) for a in f.args)
    return f


def dnf_branch_bound(f: Formula) -> int:
    """Upper bound 2^(#disjunction nodes) on the DNF width."""
    k = 0

    def walk(g):
        nonlocal k
        if isinstance(g, POr):
            k += 1
        for a in getattr(g, "args", ()):
            walk(a)
        if isinstance(g, (PNot,)):
            walk(g.arg)
        if isinstance(g, PExists):
            walk(g.body)

    walk(f)
    return 2 ** k


def dnf(f: Formula) -> list[list[PAtom]]:
    """Explicit DNF of the negation normal form (used for small formulas)."""
    g = _strip_binders(nnf(f), set(free_vars(f)))

    def go(h):
        if isinstance(h, PTrue):
            return [[]]
        if isinstance(h, PFalse):
            return []
        if isinstance(h, PAtom):
            return [[h]]
        if isinstance(h, PAnd):
            acc = [[]]
            for a in h.args:
                acc = [x + y for x in acc for y in go(a)]
            return acc
        if isinstance(h, POr):
            out = []
            for a in h.args:
                out.extend(go(a))
            return out
        raise TypeError(h)

    return go(g)


# ---------------------------------------------------------------------------
# feasibility


@dataclass
class CheckResult:
    status: str  # SAT / UNSAT / UNKNOWN
    model: dict | None = None
    reason: str = ""


def _to_row(a: PAtom):
    return (dict(a.terms), a.op, a.rhs)


def check(f: Formula, node_cap: int = 4000, box: bool = True, extra_vars: Iterable[str] = ()) -> CheckResult:
    """Decide satisfiability over N exactly, or report UNKNOWN on cap.

    Disjunctions are split lazily: at each split the conjunction collected so
    far is tested by its rational relaxation and abandoned if infeasible.
    Each complete branch is solved by branch and bound.  When the
    small-model box ``p*(N)`` has at most ``BOX_BITS_CAP`` bits it bounds
    every variable, which guarantees termination of each branch.
    """
    fv = free_vars(f)
    g = _strip_binders(nnf(f), set(fv))
    allvars = sorted(free_vars(g) | set(fv) | set(extra_vars))
    n = size(f)
    ub_all = pstar(n) if box and log2_pstar(n) <= BOX_BITS_CAP else None
    unknown = [False]

    def solve_leaf(rows):
        status, model = _lp.ilp_solve(rows, (), node_cap=node_cap, ub_all=ub_all)
        if status == _lp.UNKNOWN:
            unknown[0] = True
            return None
        return model if status == _lp.SAT else None

    def search(rows, pending):
        pending = list(pending)
        while pending:
            h = pending.pop()
            if isinstance(h, PAtom):
                rows = rows + [_to_row(h)]
            elif isinstance(h, PAnd):
                pending.extend(h.args)
            elif isinstance(h, PTrue):
                pass
            elif isinstance(h, PFalse):
                return None
            elif isinstance(h, POr):
                # look for further atoms first so pruning sees them
                others = [p for p in pending if not isinstance(p, POr)]
                if others:
                    pending = [p for p in pending if isinstance(p, POr)] + [h] + others
                    continue
                if not _lp.lp_feasible(rows):
                    return None
                for a in h.args:
                    m = search(rows, pending + [a])
                    if m is not None:
                        return m
                return None
            else:
                raise TypeError(h)
        return solve_leaf(rows)

    model = search([], [g])
    if model is not None:
        out = {v: model.get(v, 0) for v in allvars}
        keep = {v: out[v] for v in sorted(fv | set(extra_vars))}
        for v in allvars:
            keep.setdefault(v, out[v])
        # always re-check the witness on the binder-free formula
        if not evaluate(g, out):  # pragma: no cover - internal consistency
            raise AssertionError("solver returned a non-model")
        return CheckResult(_lp.SAT, keep)
    if unknown[0]:
        return CheckResult(_lp.UNKNOWN, None, "branch-and-bound node cap")
    return CheckResult(_lp.UNSAT)


def feasible(f: Formula, node_cap: int = 4000) -> dict | None:
    """A model of ``f`` over N restricted to its free variables, or ``None``.

    Raises :class:`Unknown` when the search cap is hit.
    """
    res = check(f, node_cap=node_cap)
    if res.status == _lp.UNKNOWN:
        raise Unknown(res.reason)
    if res.status == _lp.UNSAT:
        return None
    fv = free_vars(f)
    return {v: res.model.get(v, 0) for v in sorted(fv)}


# ---------------------------------------------------------------------------
# text syntax


def to_text(f: Formula) -> str:
    if isinstance(f, PTrue):
        return "(true)"
    if isinstance(f, PFalse):
        return "(false)"
    if isinstance(f, PAtom):
        return f"({f.op} {_term_text(f.terms)} {f.rhs})"
    if isinstance(f, PNot):
        return f"(not {to_text(f.arg)})"
    if isinstance(f, PAnd):
        return "(and " + " ".join(to_text(a) for a in f.args) + ")"
    if isinstance(f, POr):
        return "(or " + " ".join(to_text(a) for a in f.args) + ")"
    if isinstance(f, PExists):
        return f"(exists ({' '.join(f.vars)}) {to_text(f.body)})"
    raise TypeError(f)


def _term_text(terms) -> str:
    parts = []
    for v, c in terms:
        parts.append(v if c == 1 else f"(* {c} {v})")
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


_TOK = re.compile(r"\s*(?:(\()|(\))|(-?[0-9]+)|([A-Za-z_#$][A-Za-z0-9_#$.'@]*)|(<=|>=|==|!=|=|<|>|&&|\|\||[&|!~+\-*]))")
_PREFIX_HEADS = {"and", "or", "not", "true", "false", "exists", "implies", "le", "lt", "ge", "gt", "eq", "ne"}


def _tokens(s: str):
    toks = []
    i = 0
    while i < len(s):
        if s[i].isspace():
            i += 1
            continue
        m = _TOK.match(s, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {s[i]!r}", pos=i)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        kind = m.lastindex
        toks.append((kind, m.group(kind), start))
        i = m.end()
    return toks


class _Prefix:
    def __init__(self, s: str):
        self.s = s
        self.toks = _tokens(s)
        self.i = 0

    def err(self, msg):
        pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.s)
        raise ParseError(msg, pos=pos)

    def next(self):
        if self.i >= len(self.toks):
            self.err("unexpected end of input")
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_close(self):
        k, v, _ = self.next()
        if k != 2:
            self.i -= 1
            self.err("expected ')'")

    def formula(self) -> Formula:
        k, v, _ = self.next()
        if k != 1:
            self.i -= 1
            self.err("expected '('")
        k, head, _ = self.next()
        if k != 4:
            self.i -= 1
            self.err("expected an operator")
        if head == "true":
            self.expect_close()
            return TOP
        if head == "false":
            self.expect_close()
            return BOT
        if head in ("and", "or"):
            args = []
            while self.peek_kind() == 1:
                args.append(self.formula())
            self.expect_close()
            if not args:
                return TOP if head == "and" else BOT
            if len(args) == 1:
                return args[0]
            return PAnd(tuple(args)) if head == "and" else POr(tuple(args))
        if head == "not":
            a = self.formula()
            self.expect_close()
            return PNot(a)
        if head == "implies":
            a = self.formula()
            b = self.formula()
            self.expect_close()
            return POr((PNot(a), b))
        if head == "exists":
            k, _, _ = self.next()
            if k != 1:
                self.i -= 1
                self.err("expected '(' before bound variables")
            vs = []
            while self.peek_kind() == 4:
                vs.append(self.next()[1])
            self.expect_close()
            body = self.formula()
            self.expect_close()
            return PExists(tuple(vs), body)
        if head in OPS or head == "ne":
            a = self.term()
            b = self.term()
            self.expect_close()
            if head == "ne":
                return PNot(atom(a, "eq", b))
            return atom(a, head, b)
        self.i -= 1
        self.err(f"unknown operator {head!r}")

    def peek_kind(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def term(self) -> Lin:
        k, v, _ = self.next()
        if k == 3:
            return Lin({}, int(v))
        if k == 4:
            return Lin.var(v)
        if k == 1:
            k2, op, _ = self.next()
            if op == "+":
                acc = Lin()
                while self.peek_kind() != 2:
                    acc = acc + self.term()
                self.expect_close()
                return acc
            if op == "-":
                a = self.term()
                if self.peek_kind() == 2:
                    self.expect_close()
                    return -a
                acc = a
                while self.peek_kind() != 2:
                    acc = acc - self.term()
                self.expect_close()
                return acc
            if op == "*":
                a = self.term()
                b = self.term()
                self.expect_close()
                if a.is_const():
                    return b * a.const
                if b.is_const():
                    return a * b.const
                self.i -= 1
                self.err("nonlinear product")
            self.i -= 1
            self.err(f"unknown term operator {op!r}")
        self.i -= 1
        self.err("expected a term")


class _Infix:
    """``|`` < ``&`` < ``!`` < comparison; terms use ``+ - *``."""

    def __init__(self, s: str):
        self.s = s
        self.toks = _tokens(s)
        self.i = 0

    def err(self, msg):
        pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.s)
        raise ParseError(msg, pos=pos)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.s))

    def eat(self, *vals):
        k, v, _ = self.peek()
        if v in vals:
            self.i += 1
            return True
        return False

    def parse(self):
        f = self.disj()
        if self.i != len(self.toks):
            self.err("unexpected token")
        return f

    def disj(self):
        args = [self.conj()]
        while self.eat("|", "||", "or"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else POr(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.eat("&", "&&", "and"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else PAnd(tuple(args))

    def unary(self):
        if self.eat("!", "~", "not"):
            return PNot(self.unary())
        k, v, _ = self.peek()
        if v in ("true", "false"):
            self.i += 1
            return TOP if v == "true" else BOT
        if k == 1:
            # parenthesised formula or parenthesised term: try formula first
            save = self.i
            self.i += 1
            try:
                f = self.disj()
                if self.eat(")"):
                    k2, v2, _ = self.peek()
                    if v2 not in ("<=", ">=", "=", "==", "<", ">", "!=", "+", "-", "*"):
                        return f
            except ParseError:
                pass
            self.i = save
        return self.comparison()

    def comparison(self):
        a = self.sum()
        k, v, _ = self.peek()
        ops = {"<=": "le", ">=": "ge", "=": "eq", "==": "eq", "<": "lt", ">": "gt", "!=": "ne"}
        if v not in ops:
            self.err("expected comparison")
        self.i += 1
        b = self.sum()
        if ops[v] == "ne":
            return PNot(atom(a, "eq", b))
        return atom(a, ops[v], b)

    def sum(self):
        acc = self.product()
        while True:
            if self.eat("+"):
                acc = acc + self.product()
            elif self.eat("-"):
                acc = acc - self.product()
            else:
                return acc

    def product(self):
        a = self.factor()
        while self.eat("*"):
            b = self.factor()
            if a.is_const():
                a = b * a.const
            elif b.is_const():
                a = a * b.const
            else:
                self.err("nonlinear product")
        return a

    def factor(self):
        k, v, _ = self.peek()
        if v == "-":
            self.i += 1
            return -self.factor()
        if k == 3:
            self.i += 1
            return Lin({}, int(v))
        if k == 4:
            self.i += 1
            return Lin.var(v)
        if k == 1:
            self.i += 1
            e = self.sum()
            if not self.eat(")"):
                self.err("expected ')'")
            return e
        self.err("expected a term")


def parse(text: str) -> Formula:
    toks = _tokens(text)
    if not toks:
        raise ParseError("empty formula", pos=0)
    if toks[0][0] == 1 and len(toks) > 1 and toks[1][0] == 4 and toks[1][1] in _PREFIX_HEADS:
        p = _Prefix(text)
        f = p.formula()
        if p.i != len(p.toks):
            p.err("trailing input")
        return f
    return _Infix(text).parse()


# ---------------------------------------------------------------------------
# Parikh images


@dataclass(frozen=True)
class Nfa:
    """Finite automaton; transition letters may be ``None`` (silent)."""

    states: tuple
    initial: object
    finals: frozenset
    transitions: tuple  # ((src, letter, dst), ...)

    def alphabet(self) -> list:
        return sorted({a for _, a, _ in self.transitions if a is not None}, key=str)


def parikh_formula(nfa: Nfa, letter_var=None, prefix: str = "pk") -> Formula:
    """Existential encoding of the Parikh image of ``L(nfa)``.

    Free variables are the letter counters ``letter_var(a)`` (default
    ``n_<a>``); every other variable is auxiliary and may be projected away.

    * one flow variable per transition;
    * flow conservation: ``in(q) + [q initial] = out(q) + e_q`` where the
      final-choice variables ``e_q`` (final states only) sum to one;
    * letter counts are sums of flows on same-letter transitions;
    * connectivity: the initial state has depth 0 and every state carrying
      flow is entered by a used transition from a state of smaller depth.
    """
    if letter_var is None:
        def letter_var(a):
            return f"n_{a}"
    idx = {q: i for i, q in enumerate(nfa.states)}
    flow = [f"{prefix}_f{i}" for i in range(len(nfa.transitions))]
    depth = {q: f"{prefix}_d{idx[q]}" for q in nfa.states}
    finals = [q for q in nfa.states if q in nfa.finals]
    if not finals:
        return BOT
    sel = {q: f"{prefix}_e{idx[q]}" for q in finals}
    parts: list[Formula] = [eq(sum((Lin.var(sel[q]) for q in finals), Lin()), 1)]
    for q in nfa.states:
        inflow = sum((Lin.var(flow[i]) for i, t in enumerate(nfa.transitions) if t[2] == q), Lin())
        outflow = sum((Lin.var(flow[i]) for i, t in enumerate(nfa.transitions) if t[0] == q), Lin())
        lhs = inflow + (1 if q == nfa.initial else 0)
        rhs = outflow + (Lin.var(sel[q]) if q in sel else Lin())
        parts.append(eq(lhs, rhs))
    for a in nfa.alphabet():
        tot = sum((Lin.var(flow[i]) for i, t in enumerate(nfa.transitions) if t[1] == a), Lin())
        parts.append(eq(Lin.var(letter_var(a)), tot))
    parts.append(eq(Lin.var(depth[nfa.initial]), 0))
    bound = len(nfa.states)
    for q in nfa.states:
        parts.append(le(Lin.var(depth[q]), bound))
        if q == nfa.initial:
            continue
        incoming = [i for i, t in enumerate(nfa.transitions) if t[2] == q]
        inflow = sum((Lin.var(flow[i]) for i in incoming), Lin())
        # a final state without incoming flow may still be selected only if initial
        idle = [eq(inflow, 0)]
        if q in sel:
            idle.append(eq(Lin.var(sel[q]), 0))
        options = [conj(idle)]
        for i in incoming:
            src = nfa.transitions[i][0]
            options.append(conj([ge(Lin.var(flow[i]), 1), ge(Lin.var(depth[q]), Lin.var(depth[src]) + 1)]))
        parts.append(disj(options))
    return conj(parts)
