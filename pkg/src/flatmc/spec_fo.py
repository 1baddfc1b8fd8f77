"""First-order logic over omega-words.

Sentences are built from letter predicates, successor, order and equality
with negation, conjunction and existential quantification; disjunction is
kept as a node for speed while ``forall`` and ``implies`` are desugared by
the parser.  ``(at p z)`` holds when token ``p`` belongs to the letter at
position ``z``; ``(letter {p,q} z)`` holds when that letter is exactly
``{p,q}``.

Evaluation on ``u . v^omega`` scans every existential over a finite window
that depends on the positions of the variables free in it.  Formulas are
compiled into flat arrays and run by ``_fokernel`` when the compiled module
is importable, else by the pure-Python twin in ``_fo_py``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import FlatMcError, ParseError
from .spec_automata import Letter, UpWord, canonical_token, letter_text, parse_letter

try:  # pragma: no cover - depends on the build
    from ._fokernel import eval_program as _eval_compiled

    BACKEND = "cython"
except ImportError:  # pragma: no cover
    _eval_compiled = None
    BACKEND = "python"

from ._fo_py import eval_program as _eval_python


# ---------------------------------------------------------------------------
# syntax


class Fo:
    __slots__ = ()


@dataclass(frozen=True)
class FTrue(Fo):
    pass


@dataclass(frozen=True)
class FFalse(Fo):
    pass


@dataclass(frozen=True)
class FAt(Fo):
    token: str
    var: str


@dataclass(frozen=True)
class FLetter(Fo):
    letter: frozenset
    var: str


@dataclass(frozen=True)
class FSucc(Fo):
    left: str
    right: str


@dataclass(frozen=True)
class FLt(Fo):
    left: str
    right: str


@dataclass(frozen=True)
class FEq(Fo):
    left: str
    right: str


@dataclass(frozen=True)
class FNot(Fo):
    arg: Fo


@dataclass(frozen=True)
class FAnd(Fo):
    args: tuple


@dataclass(frozen=True)
class FOr(Fo):
    args: tuple


@dataclass(frozen=True)
class FExists(Fo):
    var: str
    body: Fo


def f_and(*args: Fo) -> Fo:
    flat = []
    for x in args:
        if isinstance(x, FTrue):
            continue
        if isinstance(x, FFalse):
            return FFalse()
        flat.extend(x.args if isinstance(x, FAnd) else (x,))
    if not flat:
        return FTrue()
    return flat[0] if len(flat) == 1 else FAnd(tuple(flat))


def f_or(*args: Fo) -> Fo:
    flat = []
    for x in args:
        if isinstance(x, FFalse):
            continue
        if isinstance(x, FTrue):
            return FTrue()
        flat.extend(x.args if isinstance(x, FOr) else (x,))
    if not flat:
        return FFalse()
    return flat[0] if len(flat) == 1 else FOr(tuple(flat))


def f_forall(var: str, body: Fo) -> Fo:
    return FNot(FExists(var, FNot(body)))


def qheight(phi: Fo) -> int:
    """Maximal nesting depth of existential quantifiers."""
    if isinstance(phi, FExists):
        return 1 + qheight(phi.body)
    if isinstance(phi, FNot):
        return qheight(phi.arg)
    if isinstance(phi, (FAnd, FOr)):
        return max((qheight(a) for a in phi.args), default=0)
    return 0


def free_vars(phi: Fo) -> set[str]:
    if isinstance(phi, (FAt, FLetter)):
        return {phi.var}
    if isinstance(phi, (FSucc, FLt, FEq)):
        return {phi.left, phi.right}
    if isinstance(phi, FNot):
        return free_vars(phi.arg)
    if isinstance(phi, (FAnd, FOr)):
        out: set[str] = set()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, FExists):
        return free_vars(phi.body) - {phi.var}
    return set()


def is_sentence(phi: Fo) -> bool:
    return not free_vars(phi)


def tokens(phi: Fo) -> set[str]:
    if isinstance(phi, FAt):
        return {phi.token}
    if isinstance(phi, FNot):
        return tokens(phi.arg)
    if isinstance(phi, (FAnd, FOr)):
        out: set[str] = set()
        for a in phi.args:
            out |= tokens(a)
        return out
    if isinstance(phi, FExists):
        return tokens(phi.body)
    return set()


def rename_bound(phi: Fo, prefix: str = "v") -> Fo:
    """Alpha-rename every bound variable to ``<prefix><k>`` in binding order."""
    counter = [0]

    def go(f, env):
        if isinstance(f, FAt):
            return FAt(f.token, env.get(f.var, f.var))
        if isinstance(f, FLetter):
            return FLetter(f.letter, env.get(f.var, f.var))
        if isinstance(f, (FSucc, FLt, FEq)):
            return type(f)(env.get(f.left, f.left), env.get(f.right, f.right))
        if isinstance(f, FNot):
            return FNot(go(f.arg, env))
        if isinstance(f, (FAnd, FOr)):
            return type(f)(tuple(go(a, env) for a in f.args))
        if isinstance(f, FExists):
            nv = f"{prefix}{counter[0]}"
            counter[0] += 1
            return FExists(nv, go(f.body, {**env, f.var: nv}))
        return f

    return go(phi, {})


@dataclass(frozen=True)
class StutterParams:
    N: int

    @property
    def threshold(self) -> int:
        return 2 ** (self.N + 1)

    @property
    def collapse(self) -> int:
        """Smallest repetition count past the threshold."""
        return self.threshold + 1


def fo_translate_to_alphabet(phi: Fo, sigma: Iterable[Letter]) -> Fo:
    """Replace ``(at p z)`` by the disjunction of ``(letter a z)`` over ``a`` in sigma containing ``p``."""
    sigma = sorted({frozenset(a) for a in sigma}, key=lambda a: sorted(a))

    def go(f):
        if isinstance(f, FAt):
            return f_or(*[FLetter(a, f.var) for a in sigma if f.token in a])
        if isinstance(f, FNot):
            return FNot(go(f.arg))
        if isinstance(f, FAnd):
            return FAnd(tuple(go(a) for a in f.args))
        if isinstance(f, FOr):
            return FOr(tuple(go(a) for a in f.args))
        if isinstance(f, FExists):
            return FExists(f.var, go(f.body))
        return f

    return go(phi)


def fo_loop_bound(phi: Fo | int, cps) -> int:
    """``2^((qheight + 2) + pol1 + pol2)`` with ``pol1 = pol2 = log2 p*(|cps|)``."""
    qh = phi if isinstance(phi, int) else qheight(phi)
    n = cps if isinstance(cps, int) else cps.size()
    lg = 2 * n * (n + 2)
    return 1 << (qh + 2 + 2 * lg)


# ---------------------------------------------------------------------------
# compilation and evaluation


@dataclass
class Program:
    op: list
    a: list
    b: list
    c: list
    fmask: list
    preds: list  # ("at", token) or ("letter", letter)
    root: int
    nslots: int


def _copies(height: int) -> int:
    return 2 ** (max(height, 1) + 1) + 2


def compile_fo(phi: Fo, range_factor: int = 1) -> Program:
    if not is_sentence(phi):
        raise FlatMcError(f"formula has free variables {sorted(free_vars(phi))}")
    prog = Program([], [], [], [], [], [], 0, 0)
    pred_ids: dict = {}
    if range_factor < 1:
        raise ValueError("range_factor must be positive")

    def emit(o, a=0, b=0, c=0, m=0):
        prog.op.append(o)
        prog.a.append(a)
        prog.b.append(b)
        prog.c.append(c)
        prog.fmask.append(m)
        return len(prog.op) - 1

    def pred(key):
        if key not in pred_ids:
            pred_ids[key] = len(prog.preds)
            prog.preds.append(key)
        return pred_ids[key]

    def chain(o, kids):
        k = kids[-1]
        for x in reversed(kids[:-1]):
            k = emit(o, x, k)
        return k

    def go(f, env, depth):
        if isinstance(f, FTrue):
            return emit(0)
        if isinstance(f, FFalse):
            return emit(1)
        if isinstance(f, FAt):
            return emit(2, pred(("at", f.token)), env[f.var])
        if isinstance(f, FLetter):
            return emit(2, pred(("letter", f.letter)), env[f.var])
        if isinstance(f, FSucc):
            return emit(3, env[f.left], env[f.right])
        if isinstance(f, FLt):
            return emit(4, env[f.left], env[f.right])
        if isinstance(f, FEq):
            return emit(5, env[f.left], env[f.right])
        if isinstance(f, FNot):
            return emit(6, go(f.arg, env, depth))
        if isinstance(f, (FAnd, FOr)):
            kids = [go(x, env, depth) for x in f.args]
            if not kids:
                return emit(0 if isinstance(f, FAnd) else 1)
            return chain(7 if isinstance(f, FAnd) else 8, kids)
        if isinstance(f, FExists):
            slot = depth
            if slot >= 63:
                raise FlatMcError("quantifier nesting too deep")
            prog.nslots = max(prog.nslots, slot + 1)
            mask = 0
            for v in free_vars(f):
                mask |= 1 << env[v]
            body = go(f.body, {**env, f.var: slot}, depth + 1)
            return emit(9, slot, body, _copies(qheight(f.body)) * range_factor, mask)
        raise TypeError(f)

    prog.root = go(phi, {}, 0)
    return prog


def _pred_table(prog: Program, letters: list) -> list:
    tab = []
    for kind, x in prog.preds:
        for a in letters:
            tab.append(x in a if kind == "at" else a == x)
    return tab


def run_program(prog: Program, w: UpWord, backend: str | None = None) -> bool:
    letters = list(dict.fromkeys(list(w.prefix) + list(w.period)))
    idx = {a: i for i, a in enumerate(letters)}
    tab = _pred_table(prog, letters)
    pre = [idx[a] for a in w.prefix]
    per = [idx[a] for a in w.period]
    fn = _eval_compiled if (backend or BACKEND) == "cython" and _eval_compiled is not None else _eval_python
    return fn(prog.op, prog.a, prog.b, prog.c, prog.fmask, tab, len(letters), pre, per, prog.root, prog.nslots)


def fo_eval(w: UpWord, phi: Fo, range_factor: int = 1, backend: str | None = None) -> bool:
    """Truth of the sentence ``phi`` on ``u . v^omega``.

    An existential whose body has height ``r`` scans positions below
    ``B + |v| * (2^(max(r,1)+1) + 2)`` where ``B`` is the least position
    congruent to ``|u|`` mod ``|v|`` that is at least ``|u|`` and beyond every
    position bound to a variable free in the quantified subformula.
    ``range_factor`` multiplies the number of periods scanned.
    """
    return run_program(compile_fo(phi, range_factor), w, backend)


def stutter_blocks(blocks: Sequence[tuple[Sequence, int]], height: int) -> list:
    """Cap every repetition count at ``2^(height+1) + 1`` (verdict preserving)."""
    cap = StutterParams(height).collapse
    return [(tuple(seg), min(n, cap)) for seg, n in blocks]


def fo_eval_blocks(blocks: Sequence[tuple[Sequence, int]], period: Sequence, phi: Fo, backend: str | None = None) -> bool:
    """Evaluate on ``s1^{n1} ... sm^{nm} . period^omega`` with arbitrary counts."""
    prefix = []
    for seg, n in stutter_blocks(blocks, qheight(phi)):
        prefix.extend(list(seg) * n)
    return fo_eval(UpWord(tuple(prefix), tuple(period)), phi, backend=backend)


# ---------------------------------------------------------------------------
# text syntax


_FTOK = re.compile(r"\s*(\(|\)|\{[^}]*\}|[^\s(){}]+)")


def _ftokens(s: str):
    out = []
    i = 0
    while True:
        m = _FTOK.match(s, i)
        if not m:
            rest = s[i:].strip()
            if rest:
                raise ParseError(f"unexpected {rest[0]!r}", pos=len(s) - len(s[i:].lstrip()))
            return out
        start = m.start(1)
        out.append((m.group(1), start))
        i = m.end()


class _FoParser:
    def __init__(self, s: str):
        self.s = s
        self.toks = _ftokens(s)
        self.i = 0

    def err(self, msg):
        pos = self.toks[self.i][1] if self.i < len(self.toks) else len(self.s)
        raise ParseError(msg, pos=pos)

    def next(self):
        if self.i >= len(self.toks):
            self.err("unexpected end of input")
        t = self.toks[self.i][0]
        self.i += 1
        return t

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def close(self):
        if self.next() != ")":
            self.i -= 1
            self.err("expected ')'")

    def var(self):
        t = self.next()
        if t in ("(", ")") or t.startswith("{"):
            self.i -= 1
            self.err("expected a variable")
        return t

    def formula(self) -> Fo:
        if self.next() != "(":
            self.i -= 1
            self.err("expected '('")
        head = self.next()
        if head == "true":
            self.close()
            return FTrue()
        if head == "false":
            self.close()
            return FFalse()
        if head == "at":
            tok = self.next()
            if tok in ("(", ")"):
                self.i -= 1
                self.err("expected a proposition or atom")
            try:
                tok = canonical_token(tok)
            except ParseError:
                self.i -= 1
                self.err(f"bad atom {tok!r}")
            v = self.var()
            self.close()
            return FAt(tok, v)
        if head == "letter":
            t = self.next()
            if not t.startswith("{"):
                self.i -= 1
                self.err("expected a letter {...}")
            a = parse_letter(t)
            v = self.var()
            self.close()
            return FLetter(a, v)
        if head in ("succ", "lt", "eq", "gt"):
            x = self.var()
            y = self.var()
            self.close()
            if head == "succ":
                return FSucc(x, y)
            if head == "lt":
                return FLt(x, y)
            if head == "gt":
                return FLt(y, x)
            return FEq(x, y)
        if head == "not":
            f = self.formula()
            self.close()
            return FNot(f)
        if head in ("and", "or"):
            args = []
            while self.peek() == "(":
                args.append(self.formula())
            self.close()
            if not args:
                return FTrue() if head == "and" else FFalse()
            if len(args) == 1:
                return args[0]
            return FAnd(tuple(args)) if head == "and" else FOr(tuple(args))
        if head == "implies":
            x = self.formula()
            y = self.formula()
            self.close()
            return FOr((FNot(x), y))
        if head in ("exists", "forall"):
            vs = []
            while self.peek() not in ("(", None, ")"):
                vs.append(self.var())
            if not vs:
                self.err("expected a bound variable")
            body = self.formula()
            self.close()
            for v in reversed(vs):
                body = FExists(v, body) if head == "exists" else f_forall(v, body)
            return body
        self.i -= 1
        self.err(f"unknown operator {head!r}")


def parse_fo(text: str) -> Fo:
    p = _FoParser(_strip_comments(text))
    f = p.formula()
    if p.i != len(p.toks):
        p.err("trailing input")
    return f


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def fo_to_text(phi: Fo) -> str:
    if isinstance(phi, FTrue):
        return "(true)"
    if isinstance(phi, FFalse):
        return "(false)"
    if isinstance(phi, FAt):
        return f"(at {phi.token} {phi.var})"
    if isinstance(phi, FLetter):
        return f"(letter {letter_text(phi.letter)} {phi.var})"
    if isinstance(phi, FSucc):
        return f"(succ {phi.left} {phi.right})"
    if isinstance(phi, FLt):
        return f"(lt {phi.left} {phi.right})"
    if isinstance(phi, FEq):
        return f"(eq {phi.left} {phi.right})"
    if isinstance(phi, FNot):
        return f"(not {fo_to_text(phi.arg)})"
    if isinstance(phi, FAnd):
        return "(and " + " ".join(fo_to_text(a) for a in phi.args) + ")"
    if isinstance(phi, FOr):
        return "(or " + " ".join(fo_to_text(a) for a in phi.args) + ")"
    if isinstance(phi, FExists):
        return f"(exists {phi.var} {fo_to_text(phi.body)})"
    raise TypeError(phi)
