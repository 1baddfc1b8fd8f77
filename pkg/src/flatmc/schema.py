"""Minimal path schemas and constrained path schemas of a flat counter system.

A minimal path schema ``p1 l1^+ p2 l2^+ ... pk lk^omega`` is enumerated with a
vertex-simple spine ``p1 ... pk``; every loop is the unique simple cycle
through the vertex where it is entered.  Each infinite run of a flat system
fits one of these schemas (the run meets the cycles of the control graph in
order and winds around each one from its entry vertex).

A constrained path schema (cps) replaces transitions by letters over
propositions and tracked atoms and carries a conjunction of linear
constraints over its loop counts.  Loops are cut into *phases*: the value of
a linear form along loop iterations is affine in the iteration index, so
each half-space ``c.v <= d`` (a *component*) changes truth at most once, in
a direction fixed by the sign of ``c . effect(loop)``.  Inside a phase every
component has a constant truth value at every loop offset and every guard is
witnessed by one fixed disjunct of its DNF, which makes endpoint checks at
the first and last iteration of the phase sufficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

from . import _lp
from .core_system import (
    And,
    Atom,
    Configuration,
    Const,
    CounterSystem,
    Guard,
    LinearAtom,
    Not,
    Or,
    cycle_of,
    is_flat,
)
from .errors import BadArity, DimensionMismatch, NotFlat
from .presburger import BOT, Formula, Lin, conj, size as formula_size, to_text
from . import presburger as pb
from .spec_automata import UpWord, letter_text


# ---------------------------------------------------------------------------
# path schemas


@dataclass(frozen=True)
class PathSchema:
    """``segments[i]`` precedes ``loops[i]``; the last loop is iterated forever."""

    segments: tuple
    loops: tuple

    @property
    def k(self) -> int:
        return len(self.loops)

    def spine(self) -> tuple:
        return tuple(t for seg in self.segments for t in seg)

    def word(self) -> tuple:
        out: list = []
        for seg, loop in zip(self.segments, self.loops):
            out.extend(seg)
            out.extend(loop)
        return tuple(out)

    def key(self) -> tuple:
        return (self.word(), tuple(len(s) for s in self.segments))

    def length(self) -> int:
        return len(self.word())

    def to_text(self) -> str:
        parts = []
        for i, (seg, loop) in enumerate(zip(self.segments, self.loops)):
            parts.extend(f"d{t + 1}" for t in seg)
            body = " ".join(f"d{t + 1}" for t in loop)
            parts.append(f"({body})" + ("^w" if i == self.k - 1 else "+"))
        return " ".join(parts)

    def __str__(self):
        return self.to_text()

    def transition_word(self, counts: Sequence[int], tail: int = 1) -> tuple:
        """``p1 l1^{n1} ... pk lk^{tail}``."""
        if len(counts) != self.k - 1:
            raise BadArity(f"expected {self.k - 1} loop counts, got {len(counts)}")
        out: list = []
        for i, (seg, loop) in enumerate(zip(self.segments, self.loops)):
            out.extend(seg)
            n = counts[i] if i < self.k - 1 else tail
            out.extend(loop * n)
        return tuple(out)


def effect(sys: CounterSystem, seg: Iterable[int]) -> tuple:
    v = [0] * sys.dim
    for t in seg:
        for j, u in enumerate(sys.transitions[t].update):
            v[j] += u
    return tuple(v)


def is_path_segment(sys: CounterSystem, seg: Sequence[int]) -> bool:
    return all(sys.transitions[a].dst == sys.transitions[b].src for a, b in zip(seg, seg[1:]))


def check_minimal(sys: CounterSystem, P: PathSchema) -> None:
    """Raise ``AssertionError`` unless ``P`` satisfies the minimality conditions."""
    word = P.word()
    assert is_path_segment(sys, word), "schema is not a path segment"
    for loop in P.loops:
        assert loop, "empty loop"
        assert sys.transitions[loop[0]].src == sys.transitions[loop[-1]].dst, "loop not closed"
        assert len(set(loop)) == len(loop), "loop not simple"
    spine = P.spine()
    assert len(set(spine)) == len(spine), "spine repeats a transition"
    if spine:
        assert sys.transitions[spine[0]].src != sys.transitions[spine[-1]].dst, "spine is a loop"
    seen: set = set()
    for loop in P.loops:
        assert not (seen & set(loop)), "loops share a transition"
        seen |= set(loop)
    for t in set(word):
        assert word.count(t) <= 2, "transition used more than twice"


def enumerate_minimal_schemas(sys: CounterSystem, q0: str) -> list[PathSchema]:
    """All minimal path schemas from ``q0`` with a vertex-simple spine, sorted."""
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    sys.state_id(q0)
    cyc = cycle_of(sys)
    out: list[PathSchema] = []

    def extend(v, visited, segs, loops, cur, used):
        for t in sys.outgoing(v):
            w = sys.transitions[t].dst
            if w in visited:
                continue
            at_vertex(w, visited | {w}, segs, loops, cur + (t,), used)

    def at_vertex(v, visited, segs, loops, cur, used):
        C = cyc.get(v)
        if C is not None:
            key = frozenset(C)
            if key not in used:
                out.append(PathSchema(segs + (cur,), loops + (C,)))
                extend(v, visited, segs + (cur,), loops + (C,), (), used | {key})
        extend(v, visited, segs, loops, cur, used)

    at_vertex(q0, frozenset((q0,)), (), (), (), frozenset())
    out.sort(key=PathSchema.key)
    return out


def schema_regex_match(sys: CounterSystem, P: PathSchema, prefix: Sequence[int], cycle: Sequence[int]) -> bool:
    """Does the lasso transition word ``prefix . cycle^omega`` belong to L(P)?

    Straightforward backtracking over the schema structure; used by tests
    and the oracle cross-checks.
    """
    m = len(cycle)
    if m == 0:
        return False

    def at(i):
        return prefix[i] if i < len(prefix) else cycle[(i - len(prefix)) % m]

    horizon = len(prefix) + m * (P.length() + 2)

    def go(pos, idx):
        if idx == P.k - 1:
            seg, loop = P.segments[idx], P.loops[idx]
            for j, t in enumerate(seg):
                if at(pos + j) != t:
                    return False
            pos += len(seg)
            if pos < len(prefix):
                # the final loop must absorb the rest of the prefix exactly
                L = len(loop)
                while pos < len(prefix):
                    for j, t in enumerate(loop):
                        if at(pos + j) != t:
                            return False
                    pos += L
            # from pos on, the word must be loop^omega
            L = len(loop)
            for j in range(L * m + m):
                if at(pos + j) != loop[j % L]:
                    return False
            return True
        seg, loop = P.segments[idx], P.loops[idx]
        for j, t in enumerate(seg):
            if at(pos + j) != t:
                return False
        pos += len(seg)
        n = 0
        while pos < horizon:
            ok = all(at(pos + j) == t for j, t in enumerate(loop))
            if not ok:
                return False
            pos += len(loop)
            n += 1
            if go(pos, idx + 1):
                return True
        return False

    return go(0, 0)


# ---------------------------------------------------------------------------
# components and guard DNF


def components(a: LinearAtom, n: int) -> list[tuple]:
    """Half-spaces ``c.v <= d`` whose conjunction is the atom."""
    a = a.with_dim(n)
    c = a.coeffs
    neg = tuple(-x for x in c)
    if a.cmp == "<=":
        return [(c, a.rhs)]
    if a.cmp == "<":
        return [(c, a.rhs - 1)]
    if a.cmp == ">=":
        return [(neg, -a.rhs)]
    if a.cmp == ">":
        return [(neg, -a.rhs - 1)]
    return [(c, a.rhs), (neg, -a.rhs)]


class CompTable:
    def __init__(self, n: int):
        self.n = n
        self.comps: list[tuple] = []
        self._idx: dict = {}

    def idx(self, comp) -> int:
        if comp not in self._idx:
            self._idx[comp] = len(self.comps)
            self.comps.append(comp)
        return self._idx[comp]

    def atom(self, a: LinearAtom) -> tuple[int, ...]:
        return tuple(self.idx(c) for c in components(a, self.n))


def _minimal_terms(terms) -> list[frozenset]:
    uniq = sorted(set(terms), key=lambda s: (len(s), sorted(s)))
    out: list[frozenset] = []
    for s in uniq:
        if not any(o <= s for o in out):
            out.append(s)
    return out


def guard_dnf(g: Guard, table: CompTable) -> list[frozenset]:
    """DNF over component literals ``(comp, truth)``; contradictory terms dropped."""

    def go(h, neg):
        if isinstance(h, Const):
            return [frozenset()] if h.value != neg else []
        if isinstance(h, Atom):
            cs = table.atom(h.atom)
            if not neg:
                return [frozenset((c, True) for c in cs)]
            return [frozenset(((c, False),)) for c in cs]
        if isinstance(h, Not):
            return go(h.arg, not neg)
        if isinstance(h, (And, Or)):
            is_and = isinstance(h, And) != neg
            parts = [go(a, neg) for a in h.args]
            if is_and:
                acc = [frozenset()]
                for p in parts:
                    acc = [x | y for x in acc for y in p]
                    acc = [t for t in acc if not any((c, not b) in t for c, b in t)]
                    acc = _minimal_terms(acc)
                return acc
            out = []
            for p in parts:
                out.extend(p)
            return _minimal_terms(out)
        raise TypeError(h)

    return go(g, False)


# ---------------------------------------------------------------------------
# constrained path schemas


@dataclass(frozen=True)
class Phase:
    """Truth of tracked components per loop offset, chosen guard disjuncts, and whether it is the final one."""

    sig: tuple  # tuple over offsets of tuple over tracked comps (bool)
    disj: tuple  # disjunct index per offset
    omega: bool = False


@dataclass(frozen=True)
class PhasedSchema:
    schema: PathSchema
    seg_choices: tuple  # per segment, per position: (comp truths, disjunct index)
    loop_phases: tuple  # per loop: tuple of Phase


@dataclass(frozen=True)
class ConstrainedPathSchema:
    segments: tuple  # K tuples of letters
    loops: tuple  # K tuples of letters
    constraint: Formula
    variables: tuple  # names of the K-1 count variables
    params: tuple  # names of symbolic initial counters (global model checking)
    tracked: tuple  # tracked atom tokens
    props: tuple  # propositions of the alphabet
    provenance: PhasedSchema
    owner: tuple  # schema loop index of every cps loop

    @property
    def k(self) -> int:
        return len(self.loops)

    def letters(self) -> set:
        out: set = set()
        for s in self.segments:
            out.update(s)
        for l in self.loops:
            out.update(l)
        return out

    def size(self) -> int:
        """Number of letter occurrences plus the constraint size."""
        return sum(map(len, self.segments)) + sum(map(len, self.loops)) + formula_size(self.constraint)

    def schema_counts(self, counts: Sequence[int]) -> tuple:
        """Loop counts of the underlying path schema (phase counts summed)."""
        if len(counts) != self.k - 1:
            raise BadArity(f"expected {self.k - 1} counts, got {len(counts)}")
        P = self.provenance.schema
        out = [0] * (P.k - 1)
        for i, n in enumerate(counts):
            o = self.owner[i]
            if o < P.k - 1:
                out[o] += n
        return tuple(out)

    def final_offset(self, counts: Sequence[int]) -> int:
        """Iterations of the last schema loop spent in non-final phases."""
        return sum(n for i, n in enumerate(counts) if self.owner[i] == self.provenance.schema.k - 1)

    def to_text(self) -> str:
        table = sorted(self.letters(), key=lambda a: (len(a), sorted(a)))
        name = {a: f"a{i}" for i, a in enumerate(table)}
        parts = []
        for i, (seg, loop) in enumerate(zip(self.segments, self.loops)):
            parts.extend(name[a] for a in seg)
            body = " ".join(name[a] for a in loop)
            exp = "^w" if i == self.k - 1 else f"^{self.variables[i]}"
            parts.append(f"({body}){exp}")
        lines = [
            f"schema: {self.provenance.schema.to_text()}",
            "letters: " + " ".join(f"{name[a]}={letter_text(a)}" for a in table),
            "word: " + " ".join(parts),
            f"constraint: {to_text(self.constraint)}",
        ]
        return "\n".join(lines)

    def key(self):
        return (self.provenance.schema.key(), repr(self.provenance))


def instantiate_word(cps: ConstrainedPathSchema, counts: Sequence[int]) -> UpWord:
    """``w1 u1^{n1} ... wk`` followed by ``uk^omega``."""
    if len(counts) != cps.k - 1:
        raise BadArity(f"expected {cps.k - 1} counts, got {len(counts)}")
    u: list = []
    for i in range(cps.k - 1):
        u.extend(cps.segments[i])
        u.extend(cps.loops[i] * counts[i])
    u.extend(cps.segments[-1])
    return UpWord(tuple(u), tuple(cps.loops[-1]))


def word_blocks(cps: ConstrainedPathSchema, counts: Sequence) -> tuple[list, tuple]:
    """Compressed prefix ``[(segment, 1), (loop, n), ...]`` and the period."""
    blocks = []
    for i in range(cps.k - 1):
        if cps.segments[i]:
            blocks.append((cps.segments[i], 1))
        blocks.append((cps.loops[i], counts[i]))
    if cps.segments[-1]:
        blocks.append((cps.segments[-1], 1))
    return blocks, cps.loops[-1]


# ---------------------------------------------------------------------------
# the construction


def _lit_row(L: Lin, comp, truth: bool):
    """Row for ``c.V <= d`` (truth) or ``c.V >= d+1``; ``True``/``False`` when ground."""
    _, d = comp
    if not L.coeffs:
        return (L.const <= d) == truth
    if truth:
        return (dict(L.coeffs), "le", d - L.const)
    return ({v: -c for v, c in L.coeffs.items()}, "le", L.const - d - 1)


def _nonneg_row(L: Lin):
    if not L.coeffs:
        return L.const >= 0
    return ({v: -c for v, c in L.coeffs.items()}, "le", L.const)


def _dot(c, V) -> Lin:
    out = Lin()
    for a, x in zip(c, V):
        if a:
            out = out + x * a
    return out


def _add(V, u, k: Lin | int = 1):
    return [x + Lin.of(k) * a if a else x for x, a in zip(V, u)]


class _Builder:
    """Shared machinery for enumerating and for replaying phased schemas."""

    def __init__(self, sys: CounterSystem, init, atoms: Iterable[LinearAtom]):
        self.sys = sys
        n = sys.dim
        self.table = CompTable(n)
        seen = {}
        for a in atoms:
            a = a.with_dim(n)
            seen.setdefault(a.key(), a)
        self.atoms = list(seen.values())
        self.atom_comps = [self.table.atom(a) for a in self.atoms]
        self.tracked = sorted({c for cs in self.atom_comps for c in cs})
        self.tokens = [a.token() for a in self.atoms]
        self.dnf = [guard_dnf(t.guard, self.table) for t in sys.transitions]
        if isinstance(init, Configuration):
            if len(init.counters) != n:
                raise DimensionMismatch("initial configuration has the wrong dimension")
            self.q0 = init.state
            self.V0 = [Lin({}, v) for v in init.counters]
            self.params: tuple = ()
        else:
            self.q0 = init
            self.params = tuple(f"z{j + 1}" for j in range(n))
            self.V0 = [Lin.var(z) for z in self.params]

    # letters ---------------------------------------------------------------

    def letter(self, q: str, truths: dict) -> frozenset:
        toks = set(self.sys.label(q))
        for tok, cs in zip(self.tokens, self.atom_comps):
            if all(truths[c] for c in cs):
                toks.add(tok)
        return frozenset(toks)

    def slope(self, comp, eff) -> int:
        return sum(a * b for a, b in zip(comp[0], eff))


@dataclass
class _State:
    V: list  # counters (Lin) before the next position
    rows: list
    nvars: int
    segs: list  # letters of cps segments built so far
    loops: list
    owner: list
    cur: list  # letters of the open segment
    seg_choices: list
    loop_phases: list


def _copy(st: _State) -> _State:
    return _State(list(st.V), list(st.rows), st.nvars, list(st.segs), list(st.loops), list(st.owner), list(st.cur), [list(x) for x in st.seg_choices], [list(x) for x in st.loop_phases])


def _add_rows(st: _State, rows) -> bool:
    """Append rows; ``False`` if some ground row is violated."""
    for r in rows:
        if r is True:
            continue
        if r is False:
            return False
        st.rows.append(r)
    return True


def _feasible(st: _State, params) -> bool:
    if not st.rows:
        return True
    return _lp.lp_feasible(st.rows)


def _position_options(B: _Builder, V, t: int):
    """All (truths, disjunct index, rows) for one segment position."""
    comps = B.table.comps
    vals = {c: _dot(comps[c][0], V) for c in B.tracked}
    base_rows = [_nonneg_row(x) for x in V]
    # tracked truths: ground ones are forced
    free = []
    forced = {}
    for c in B.tracked:
        r = _lit_row(vals[c], comps[c], True)
        if r is True or r is False:
            forced[c] = r
        else:
            free.append(c)
    for bits in product((True, False), repeat=len(free)):
        truths = dict(forced)
        truths.update(zip(free, bits))
        for di, term in enumerate(B.dnf[t]):
            if any(c in truths and truths[c] != b for c, b in term):
                continue
            rows = list(base_rows)
            for c, b in zip(free, bits):
                rows.append(_lit_row(vals[c], comps[c], b))
            for c, b in term:
                if c in truths:
                    continue
                rows.append(_lit_row(_dot(comps[c][0], V), comps[c], b))
            yield truths, di, rows


def _phase_rows(B: _Builder, loop, E, partial, T: Lin, y: Lin | None, phase: Phase):
    """Rows making ``phase`` valid on iterations ``[T, T+y-1]`` (``y is None``: forever)."""
    comps = B.table.comps
    eff = partial[-1]
    rows = []
    ends = [T] if y is None else [T, T + y - 1]
    for o, t in enumerate(loop):
        lits = dict(zip(B.tracked, phase.sig[o]))
        for c, b in B.dnf[t][phase.disj[o]]:
            if c in lits and lits[c] != b:
                return None
            lits[c] = b
        for e in ends:
            V = [E[j] + e * eff[j] + partial[o][j] for j in range(len(E))]
            for j in range(len(E)):
                rows.append(_nonneg_row(V[j]))
            for c, b in lits.items():
                rows.append(_lit_row(_dot(comps[c][0], V), comps[c], b))
        if y is None:
            for c, b in lits.items():
                s = B.slope(comps[c], eff)
                if (b and s > 0) or (not b and s < 0):
                    return None
    if y is None and any(x < 0 for x in eff):
        return None
    return rows


def _partials(sys: CounterSystem, loop) -> list:
    """Counter offset before each loop position, plus the loop effect last."""
    out = []
    acc = [0] * sys.dim
    for t in loop:
        out.append(tuple(acc))
        for j, u in enumerate(sys.transitions[t].update):
            acc[j] += u
    out.append(tuple(acc))
    return out


def _allowed_truths(B: _Builder, comp, eff, prev_truth):
    s = B.slope(comp, eff)
    if prev_truth is None:
        return (True, False)
    if prev_truth and s > 0:
        return (True, False)
    if not prev_truth and s < 0:
        return (False, True)
    return (prev_truth,)


def _phase_candidates(B: _Builder, loop, partial, E, T: Lin, prev: Phase | None, used: list):
    """Next phases allowed after ``prev`` by monotone flips and fresh disjuncts.

    Truth values already refuted at the first iteration of the phase (ground
    counter values) are filtered out here.
    """
    comps = B.table.comps
    eff = partial[-1]
    m = len(loop)
    per_offset_sig = []
    for o in range(m):
        V = [E[j] + T * eff[j] + partial[o][j] for j in range(len(E))]
        opts_o = []
        for k, c in enumerate(B.tracked):
            L = _dot(comps[c][0], V)
            opts = _allowed_truths(B, comps[c], eff, None if prev is None else prev.sig[o][k])
            opts_o.append(tuple(b for b in opts if _lit_row(L, comps[c], b) is not False))
        per_offset_sig.append(opts_o)
    disj_opts = []
    for o, t in enumerate(loop):
        nd = len(B.dnf[t])
        if prev is None:
            disj_opts.append(tuple(range(nd)))
        else:
            cur = prev.disj[o]
            disj_opts.append((cur,) + tuple(i for i in range(nd) if i not in used[o]))
    sig_space = [product(*opts_o) for opts_o in per_offset_sig]
    for sig in product(*[list(s) for s in sig_space]):
        for disj in product(*disj_opts):
            ph = Phase(tuple(sig), tuple(disj))
            if prev is not None and ph.sig == prev.sig and ph.disj == prev.disj:
                continue
            yield ph


class _Search:
    def __init__(self, B: _Builder, P: PathSchema, prune: bool = True, check_leaf: bool = True, node_cap: int = 4000):
        self.B = B
        self.P = P
        self.prune = prune
        self.check_leaf = check_leaf
        self.node_cap = node_cap
        self.partials = [_partials(B.sys, l) for l in P.loops]

    def run(self) -> Iterator[tuple[_State, PhasedSchema]]:
        st = _State(list(self.B.V0), [], 0, [], [], [], [], [[] for _ in self.P.segments], [[] for _ in self.P.loops])
        yield from self._segment(st, 0, 0)

    def _ok(self, st):
        return not self.prune or _feasible(st, self.B.params)

    def _segment(self, st: _State, i: int, pos: int):
        seg = self.P.segments[i]
        if pos == len(seg):
            yield from self._loop(st, i, None, frozenset(), [set() for _ in self.P.loops[i]], Lin())
            return
        t = seg[pos]
        src = self.B.sys.transitions[t].src
        for truths, di, rows in _position_options(self.B, st.V, t):
            nst = _copy(st)
            if not _add_rows(nst, rows) or not self._ok(nst):
                continue
            nst.cur.append(self.B.letter(src, truths))
            nst.seg_choices[i].append((tuple(truths[c] for c in self.B.tracked), di))
            nst.V = _add(nst.V, self.B.sys.transitions[t].update)
            yield from self._segment(nst, i, pos + 1)

    def _loop(self, st: _State, i: int, prev: Phase | None, _unused, used: list, T: Lin):
        loop = self.P.loops[i]
        partial = self.partials[i]
        eff = partial[-1]
        final = i == self.P.k - 1
        E = st.V
        for ph in _phase_candidates(self.B, loop, partial, E, T, prev, used):
            for omega in ((False, True) if final else (False,)):
                rows_ph = Phase(ph.sig, ph.disj, omega)
                if omega:
                    rows = _phase_rows(self.B, loop, E, partial, T, None, rows_ph)
                    y = None
                else:
                    y = Lin.var(f"x{st.nvars + 1}")
                    rows = _phase_rows(self.B, loop, E, partial, T, y, rows_ph)
                if rows is None:
                    continue
                nst = _copy(st)
                if y is not None:
                    nst.nvars += 1
                    rows = [({f"x{nst.nvars}": -1}, "le", -1)] + rows
                if not _add_rows(nst, rows) or not self._ok(nst):
                    continue
                letters = tuple(
                    self.B.letter(self.B.sys.transitions[t].src, dict(zip(self.B.tracked, rows_ph.sig[o])))
                    for o, t in enumerate(loop)
                )
                nst.segs.append(tuple(nst.cur))
                nst.cur = []
                nst.loops.append(letters)
                nst.owner.append(i)
                nst.loop_phases[i].append(rows_ph)
                nused = [set(u) for u in used]
                if prev is not None:
                    for o in range(len(loop)):
                        if ph.disj[o] != prev.disj[o]:
                            nused[o].add(prev.disj[o])
                if omega:
                    yield from self._leaf(nst)
                    continue
                T2 = T + y
                # continue with another phase of this loop
                yield from self._loop(nst, i, rows_ph, None, nused, T2)
                if not final:
                    exit_st = _copy(nst)
                    exit_st.V = [E[j] + T2 * eff[j] for j in range(len(E))]
                    yield from self._segment(exit_st, i + 1, 0)

    def _leaf(self, st: _State):
        if self.check_leaf and st.rows:
            status, _ = _lp.ilp_solve(st.rows, node_cap=self.node_cap)
            if status == _lp.UNSAT:
                return
        phased = PhasedSchema(
            self.P,
            tuple(tuple(x) for x in st.seg_choices),
            tuple(tuple(x) for x in st.loop_phases),
        )
        yield st, phased


def _rows_formula(rows) -> Formula:
    atoms = []
    for coeffs, kind, rhs in rows:
        e = Lin(coeffs)
        atoms.append(pb.le(e, rhs) if kind == "le" else pb.eq(e, rhs))
    return conj(_dedupe(atoms))


def _dedupe(xs):
    return list(dict.fromkeys(xs))


def _make_cps(B: _Builder, st: _State, phased: PhasedSchema) -> ConstrainedPathSchema:
    # the open segment is flushed whenever a phase loop starts, so
    # segments and loops line up one to one
    segs = st.segs
    variables = tuple(f"x{i + 1}" for i in range(st.nvars))
    return ConstrainedPathSchema(
        segments=tuple(segs),
        loops=tuple(st.loops),
        constraint=_rows_formula(st.rows),
        variables=variables,
        params=B.params,
        tracked=tuple(B.tokens),
        props=tuple(sorted(B.sys.props())),
        provenance=phased,
        owner=tuple(st.owner),
    )


def guard_phase_split(schema: PathSchema, sys: CounterSystem, ag: Iterable[LinearAtom], init, prune: bool = True) -> list[PhasedSchema]:
    """Phase decompositions of ``schema`` (pruned to rationally feasible ones by default)."""
    B = _Builder(sys, init, ag)
    return [ph for _, ph in _Search(B, schema, prune=prune, check_leaf=False).run()]


def generate_run_constraint(phased: PhasedSchema, sys: CounterSystem, init, ag: Iterable[LinearAtom] = ()) -> Formula:
    """Constraint over phase counts for exactly the runs following ``phased``."""
    cps = derive_cps(sys, init, ag, phased)
    return BOT if cps is None else cps.constraint


def derive_cps(sys: CounterSystem, init, ag: Iterable[LinearAtom], phased: PhasedSchema) -> ConstrainedPathSchema | None:
    """Rebuild the cps of a phase decomposition by replaying its choices."""
    B = _Builder(sys, init, ag)
    P = phased.schema
    st = _State(list(B.V0), [], 0, [], [], [], [], [[] for _ in P.segments], [[] for _ in P.loops])
    partials = [_partials(sys, l) for l in P.loops]
    comps = B.table.comps
    for i in range(P.k):
        seg = P.segments[i]
        if len(phased.seg_choices[i]) != len(seg):
            return None
        for pos, t in enumerate(seg):
            sig, di = phased.seg_choices[i][pos]
            if di >= len(B.dnf[t]):
                return None
            truths = dict(zip(B.tracked, sig))
            if any(truths.get(c, b) != b for c, b in B.dnf[t][di]):
                return None
            rows = [_nonneg_row(x) for x in st.V]
            for c in B.tracked:
                rows.append(_lit_row(_dot(comps[c][0], st.V), comps[c], truths[c]))
            for c, b in B.dnf[t][di]:
                if c not in truths:
                    rows.append(_lit_row(_dot(comps[c][0], st.V), comps[c], b))
            if not _add_rows(st, rows):
                return None
            st.cur.append(B.letter(sys.transitions[t].src, truths))
            st.seg_choices[i].append((sig, di))
            st.V = _add(st.V, sys.transitions[t].update)
        loop = P.loops[i]
        eff = partials[i][-1]
        E = st.V
        T = Lin()
        phases = phased.loop_phases[i]
        if not phases:
            return None
        if not _phase_sequence_ok(B, loop, eff, phases, final=i == P.k - 1):
            return None
        for ph in phases:
            if ph.omega:
                rows = _phase_rows(B, loop, E, partials[i], T, None, ph)
                y = None
            else:
                y = Lin.var(f"x{st.nvars + 1}")
                rows = _phase_rows(B, loop, E, partials[i], T, y, ph)
            if rows is None:
                return None
            if y is not None:
                st.nvars += 1
                rows = [({f"x{st.nvars}": -1}, "le", -1)] + rows
                T = T + y
            if not _add_rows(st, rows):
                return None
            st.segs.append(tuple(st.cur))
            st.cur = []
            st.loops.append(tuple(B.letter(sys.transitions[t].src, dict(zip(B.tracked, ph.sig[o]))) for o, t in enumerate(loop)))
            st.owner.append(i)
            st.loop_phases[i].append(ph)
        if i < P.k - 1:
            st.V = [E[j] + T * eff[j] for j in range(len(E))]
    return _make_cps(B, st, phased)


def _phase_sequence_ok(B: _Builder, loop, eff, phases, final: bool) -> bool:
    comps = B.table.comps
    if any(ph.omega for ph in phases[:-1]) or phases[-1].omega != final:
        return False
    used = [set() for _ in loop]
    prev = None
    for ph in phases:
        if len(ph.sig) != len(loop) or len(ph.disj) != len(loop):
            return False
        if prev is not None:
            if ph.sig == prev.sig and ph.disj == prev.disj:
                return False
            for o in range(len(loop)):
                for k, c in enumerate(B.tracked):
                    if ph.sig[o][k] not in _allowed_truths(B, comps[c], eff, prev.sig[o][k]):
                        return False
                if ph.disj[o] != prev.disj[o]:
                    if ph.disj[o] in used[o]:
                        return False
                    used[o].add(prev.disj[o])
        prev = ph
    return True


def build_constrained_schemas(sys: CounterSystem, init, extra_atoms: Iterable[LinearAtom] = (), node_cap: int = 4000) -> Iterator[ConstrainedPathSchema]:
    """Lazily enumerate the set X of constrained path schemas.

    ``init`` is a :class:`Configuration`, or a state name for symbolic initial
    counters ``z1..zn``.  Letters record the state labels and the truth of
    ``extra_atoms``; guards of the system constrain counts but are not
    recorded.  Schemas whose constraint is proved unsatisfiable are skipped.
    """
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    extra_atoms = list(extra_atoms)
    q0 = init.state if isinstance(init, Configuration) else init
    B = _Builder(sys, init, extra_atoms)
    for P in enumerate_minimal_schemas(sys, q0):
        # distinct search branches can settle on the same phase sequence
        seen: set = set()
        for st, phased in _Search(B, P, node_cap=node_cap).run():
            if phased in seen:
                continue
            seen.add(phased)
            yield _make_cps(B, st, phased)


def in_X(cps: ConstrainedPathSchema, sys: CounterSystem, init, extra_atoms: Iterable[LinearAtom] = ()) -> bool:
    """Membership of a candidate in X, checked by replaying its provenance."""
    P = cps.provenance.schema
    q0 = init.state if isinstance(init, Configuration) else init
    try:
        check_minimal(sys, P)
    except AssertionError:
        return False
    if P.segments[0] and sys.transitions[P.segments[0][0]].src != q0:
        return False
    if not P.segments[0] and sys.transitions[P.loops[0][0]].src != q0:
        return False
    again = derive_cps(sys, init, extra_atoms, cps.provenance)
    return again is not None and again == cps


# ---------------------------------------------------------------------------
# replay


def replay(sys: CounterSystem, c0: Configuration, cps: ConstrainedPathSchema, counts: Sequence[int], extra_atoms: Iterable[LinearAtom] = (), tail_periods: int = 2):
    """Run the transitions of ``cps`` for ``counts`` and return ``(configs, letters)``.

    The final loop is unrolled through its non-final phases and then
    ``tail_periods`` more times.  Raises a core error if the run is invalid.
    """
    from .core_system import step

    P = cps.provenance.schema
    n_schema = cps.schema_counts(counts)
    skip = cps.final_offset(counts)
    word = P.transition_word(n_schema, tail=skip + tail_periods)
    atoms = [a.with_dim(sys.dim) for a in extra_atoms]
    c = c0
    configs = [c]
    letters = []
    for t in word:
        toks = set(sys.label(c.state)) | {a.token() for a in atoms if a.holds(c.counters)}
        letters.append(frozenset(toks))
        c = step(sys, c, t)
        configs.append(c)
    return configs, letters
