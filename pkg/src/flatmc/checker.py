"""Decision procedures: cps intersection with Büchi and FO specifications,
the end-to-end model checker, global model checking and the SAT generator.

The default Büchi route uses that the powers ``M^n`` of the Boolean state
relation ``M`` of a loop word are ultimately periodic: ``M^(a+p) = M^a``.
Whether ``s' in M^n(s)`` therefore holds on a finite set of small ``n`` plus
residue classes ``n = r + p*m``.  A depth-first search over the automaton
states met at loop boundaries turns this into linear constraints on the loop
counts, pruned by the rational relaxation and closed by an exact integer
check.  The final loop is decided by a lasso search in the product with the
period.  Two other routes (a Parikh flow encoding and plain enumeration)
exist to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import _lp
from . import presburger as pb
from .core_system import (
    And,
    Atom,
    Configuration,
    CounterSystem,
    LinearAtom,
    Transition,
    TRUE,
    Prop,
    is_flat,
    parse_atom,
)
from .errors import FlatMcError, NotFlat
from .presburger import Lin, Nfa
from .schema import (
    ConstrainedPathSchema,
    build_constrained_schemas,
    instantiate_word,
    word_blocks,
)
from .spec_automata import (
    AbaSpec,
    BuchiAutomaton,
    BuchiSpec,
    _lasso_accepts,
    dealternate,
    expand,
    membership,
    membership_compressed,
)
from .spec_fo import Fo, StutterParams, fo_eval, fo_translate_to_alphabet, qheight, tokens as fo_tokens

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"


@dataclass
class Verdict:
    answer: str
    witness: dict | None = None
    reason: str = ""
    explored: int = 0

    def __bool__(self):
        return self.answer == SAT


@dataclass(frozen=True)
class LoopBound:
    value: int
    origin: str
    params: tuple = ()


def _log2_pstar(n: int) -> int:
    return 2 * n * (n + 2)


def ba_loop_bound(nstates: int, cps_size: int) -> LoopBound:
    """``2^pol1 + 2 |Q|^|cps| 2^(pol1+pol2)`` with ``pol1 = pol2 = log2 p*(|cps|)``."""
    lg = _log2_pstar(cps_size)
    value = (1 << lg) + 2 * nstates ** cps_size * (1 << (2 * lg))
    return LoopBound(value, "BA", (nstates, cps_size))


def fo_bound(phi: Fo, cps_size: int) -> LoopBound:
    from .spec_fo import fo_loop_bound

    return LoopBound(fo_loop_bound(phi, cps_size), "FO", (qheight(phi), cps_size))


# ---------------------------------------------------------------------------
# Boolean relations


def _rel_of_word(B: BuchiAutomaton, letters) -> dict:
    r = {s: frozenset((s,)) for s in B.states}
    for a in letters:
        nxt = {}
        for s, mids in r.items():
            acc = set()
            for m in mids:
                acc.update(B.successors(m, a))
            nxt[s] = frozenset(acc)
        r = nxt
    return r


def _compose(r1: dict, r2: dict) -> dict:
    out = {}
    for s, mids in r1.items():
        acc = set()
        for m in mids:
            acc |= r2[m]
        out[s] = frozenset(acc)
    return out


def _freeze(r: dict):
    return tuple(sorted((repr(s), tuple(sorted(map(repr, v)))) for s, v in r.items()))


def power_profile(M: dict, limit: int = 100000):
    """Index ``a >= 1``, period ``p`` and ``[M^1, ..., M^(a+p-1)]`` with ``M^(a+p) = M^a``."""
    seen = {}
    powers = []
    cur = M
    n = 1
    while n <= limit:
        key = _freeze(cur)
        if key in seen:
            a = seen[key]
            return a, n - a, powers
        seen[key] = n
        powers.append(cur)
        cur = _compose(cur, M)
        n += 1
    raise FlatMcError("relation powers did not become periodic within the limit")


def count_options(a: int, p: int, powers: list, s, t) -> list:
    """``("eq", c)`` and ``("mod", r, p)`` options describing ``{n >= 1 : t in M^n(s)}``."""
    out = []
    for n in range(1, a):
        if t in powers[n - 1][s]:
            out.append(("eq", n))
    for r in range(a, a + p):
        if t in powers[r - 1][s]:
            out.append(("mod", r, p))
    return out


# ---------------------------------------------------------------------------
# BA intersection


def _cps_rows(cps: ConstrainedPathSchema):
    """Constraint rows of a cps (its constraint is a conjunction of atoms)."""
    rows = []
    f = cps.constraint
    parts = f.args if isinstance(f, pb.PAnd) else (f,)
    for a in parts:
        if isinstance(a, pb.PTrue):
            continue
        if isinstance(a, pb.PFalse):
            return None
        if not isinstance(a, pb.PAtom):
            raise FlatMcError("cps constraint is not a conjunction of atoms")
        cs = dict(a.terms)
        if a.op in ("le", "eq"):
            rows.append((cs, a.op, a.rhs))
        elif a.op == "lt":
            rows.append((cs, "le", a.rhs - 1))
        else:
            # ge/gt flip to le over the negated terms
            neg = {v: -c for v, c in cs.items()}
            rows.append((neg, "le", -a.rhs if a.op == "ge" else -a.rhs - 1))
    return rows


def accepting_lasso_states(B: BuchiAutomaton, period) -> set:
    """States from which ``period^omega`` is accepted."""
    return {s for s in B.states if _lasso_accepts([s], lambda q: q in B.accepting, B.successors, tuple(period))}


def _post_set(B, S, letters):
    for a in letters:
        nxt = set()
        for s in S:
            nxt.update(B.successors(s, a))
        S = nxt
        if not S:
            break
    return S


def _periodic_paths(cps: ConstrainedPathSchema, B: BuchiAutomaton, rows, prune, fresh: str = "m"):
    """Yield row lists (cps rows plus count conditions) for every feasible state path."""
    K = cps.k
    if K == 0:
        return
    G = accepting_lasso_states(B, cps.loops[-1])
    if not G:
        return
    profiles = []
    for i in range(K - 1):
        M = _rel_of_word(B, cps.loops[i])
        profiles.append(power_profile(M))
    seg_rel = [_rel_of_word(B, cps.segments[i]) for i in range(K)]

    def dfs(i, s, acc):
        # s is the state before segment i
        targets = seg_rel[i][s]
        if i == K - 1:
            if targets & G:
                yield acc
            return
        a, p, powers = profiles[i]
        var = cps.variables[i]
        for s1 in sorted(targets, key=repr):
            reach = set()
            for pw in powers:
                reach |= pw[s1]
            for s2 in sorted(reach, key=repr):
                for opt in count_options(a, p, powers, s1, s2):
                    if opt[0] == "eq":
                        extra = [({var: 1}, "eq", opt[1])]
                    elif opt[2] == 1:
                        extra = [({var: -1}, "le", -opt[1])]
                    else:
                        m = f"{fresh}{i + 1}"
                        extra = [({var: 1, m: -opt[2]}, "eq", opt[1])]
                    nacc = acc + extra
                    if prune(nacc):
                        yield from dfs(i + 1, s2, nacc)

    yield from dfs(0, B.initial, list(rows))


def _witness(cps, model, extra=None):
    counts = tuple(model.get(v, 0) for v in cps.variables)
    w = {
        "schema": cps.provenance.schema.to_text(),
        "counts": counts,
        "schema_counts": cps.schema_counts(counts),
        "word": instantiate_word(cps, counts),
        "cps": cps,
    }
    if extra:
        w.update(extra)
    return w


def intersect_ba_explicit(cps: ConstrainedPathSchema, B: BuchiAutomaton, method: str = "periodic", node_cap: int = 4000, enum_cap: int = 64) -> Verdict:
    rows = _cps_rows(cps)
    if rows is None:
        return Verdict(UNSAT)
    if rows and not _lp.lp_feasible(rows):
        return Verdict(UNSAT)
    if method == "periodic":
        return _intersect_periodic(cps, B, rows, node_cap)
    if method == "parikh":
        return _intersect_parikh(cps, B, node_cap)
    if method == "enum":
        return _intersect_enum(cps, B, enum_cap)
    raise ValueError(f"unknown method {method!r}")


def intersect_ba(cps: ConstrainedPathSchema, spec: BuchiSpec | BuchiAutomaton | AbaSpec, method: str = "periodic", node_cap: int = 4000) -> Verdict:
    """Non-emptiness of ``L(cps)`` intersected with the automaton restricted to the cps letters."""
    B = spec_automaton(spec, cps.letters())
    return intersect_ba_explicit(cps, B, method=method, node_cap=node_cap)


def spec_automaton(spec, letters) -> BuchiAutomaton:
    if isinstance(spec, BuchiAutomaton):
        return spec
    if isinstance(spec, BuchiSpec):
        return expand(spec, letters)
    if isinstance(spec, AbaSpec):
        return dealternate(spec).materialize(letters)
    raise TypeError(spec)


def _intersect_periodic(cps, B, rows, node_cap) -> Verdict:
    unknown = False
    nodes = 0

    def prune(r):
        return _lp.lp_feasible(r)

    for path_rows in _periodic_paths(cps, B, rows, prune):
        nodes += 1
        status, model = _lp.ilp_solve(path_rows, cps.variables, node_cap=node_cap)
        if status == _lp.SAT:
            return Verdict(SAT, _witness(cps, model), explored=nodes)
        if status == _lp.UNKNOWN:
            unknown = True
    if unknown:
        return Verdict(UNKNOWN, reason="integer search cap", explored=nodes)
    return Verdict(UNSAT, explored=nodes)


def _intersect_enum(cps, B, cap) -> Verdict:
    """Try every count vector in ``[1, cap]^(K-1)`` (cross-validation only)."""
    from itertools import product

    K = cps.k
    params = {}
    for counts in product(range(1, cap + 1), repeat=K - 1):
        asg = dict(zip(cps.variables, counts))
        asg.update(params)
        try:
            ok = pb.evaluate(cps.constraint, asg)
        except Exception:
            ok = False
        if not ok:
            continue
        blocks, period = word_blocks(cps, counts)
        if membership_compressed(blocks, period, B):
            return Verdict(SAT, _witness(cps, asg))
    return Verdict(UNKNOWN, reason=f"no witness with counts <= {cap}")


def parikh_acceptance(cps: ConstrainedPathSchema, B: BuchiAutomaton, prefix: str = "pk") -> pb.Formula:
    """Parikh image of (cps skeleton x B) ending in a state accepting the period.

    Each completed iteration of loop ``i`` emits the letter ``L<i>``; the
    formula ties these counts to the loop variables.
    """
    K = cps.k
    G = accepting_lasso_states(B, cps.loops[-1])
    # skeleton automaton: node ids are ("w", i, j) / ("u", i, j) / ("end",)
    trans = []
    nodes = []

    def node(x):
        if x not in nodes:
            nodes.append(x)
        return x

    cur = node(("start",))
    for i in range(K):
        for j, a in enumerate(cps.segments[i]):
            nxt = node(("w", i, j + 1))
            trans.append((cur, a, None, nxt))
            cur = nxt
        if i == K - 1:
            break
        entry = node(("entry", i))
        trans.append((cur, None, None, entry))
        loop = cps.loops[i]
        prev = entry
        for j, a in enumerate(loop):
            nxt = entry if j == len(loop) - 1 else node(("u", i, j + 1))
            trans.append((prev, a, f"L{i + 1}" if j == len(loop) - 1 else None, nxt))
            prev = nxt
        cur = node(("exit", i))
        trans.append((entry, None, None, cur))
    end = cur
    # product with B
    states = []
    ptrans = []
    init = (nodes[0], B.initial)
    seen = {init}
    todo = [init]
    while todo:
        x = todo.pop()
        states.append(x)
        n, s = x
        for src, a, lab, dst in trans:
            if src != n:
                continue
            succ = [s] if a is None else list(B.successors(s, a))
            for t in succ:
                y = (dst, t)
                ptrans.append((x, lab, y))
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
    finals = frozenset(x for x in states if x[0] == end and x[1] in G)
    order = sorted(states, key=repr)
    nfa = Nfa(tuple(order), init, finals, tuple(sorted(set(ptrans), key=repr)))
    f = pb.parikh_formula(nfa, letter_var=lambda a: f"{prefix}_{a}", prefix=prefix)
    ties = [pb.eq(Lin.var(cps.variables[i]), Lin.var(f"{prefix}_L{i + 1}")) for i in range(K - 1)]
    # letters that never occur in the product have no flow variable: force zero
    present = {lab for _, lab, _ in nfa.transitions if lab is not None}
    for i in range(K - 1):
        if f"L{i + 1}" not in present:
            ties.append(pb.eq(Lin.var(f"{prefix}_L{i + 1}"), 0))
    return pb.conj([f] + ties)


def _intersect_parikh(cps, B, node_cap) -> Verdict:
    f = pb.conj([cps.constraint, parikh_acceptance(cps, B)])
    res = pb.check(f, node_cap=node_cap, extra_vars=cps.variables)
    if res.status == _lp.SAT:
        return Verdict(SAT, _witness(cps, res.model))
    if res.status == _lp.UNKNOWN:
        return Verdict(UNKNOWN, reason=res.reason)
    return Verdict(UNSAT)


# ---------------------------------------------------------------------------
# FO intersection


def intersect_fo(cps: ConstrainedPathSchema, phi: Fo, node_cap: int = 4000, translated: bool = False) -> Verdict:
    """Search count classes ``c in [1, M]^(K-1)`` with ``M = 2^(qh+1)+1``.

    A count ``n >= M`` is interchangeable with ``M`` for sentences of height
    ``qh``, so class ``c < M`` means ``n = c`` and class ``M`` means ``n >= M``.
    Each class vector is checked for consistency with the constraint and the
    word with counts ``c`` is evaluated.
    """
    rows = _cps_rows(cps)
    if rows is None:
        return Verdict(UNSAT)
    if rows and not _lp.lp_feasible(rows):
        return Verdict(UNSAT)
    psi = phi if translated else fo_translate_to_alphabet(phi, cps.letters())
    M = StutterParams(qheight(psi)).collapse
    K = cps.k
    unknown = [False]
    nodes = [0]

    def dfs(i, acc, counts):
        if i == K - 1:
            nodes[0] += 1
            if not fo_eval(instantiate_word(cps, counts), psi):
                return None
            status, model = _lp.ilp_solve(acc, cps.variables, node_cap=node_cap)
            if status == _lp.SAT:
                return model
            if status == _lp.UNKNOWN:
                unknown[0] = True
            return None
        var = cps.variables[i]
        for c in range(1, M + 1):
            extra = ({var: 1}, "eq", c) if c < M else ({var: -1}, "le", -M)
            nacc = acc + [extra]
            if not _lp.lp_feasible(nacc):
                continue
            m = dfs(i + 1, nacc, counts + [c])
            if m is not None:
                return m
        return None

    model = dfs(0, list(rows), [])
    if model is not None:
        return Verdict(SAT, _witness(cps, model), explored=nodes[0])
    if unknown[0]:
        return Verdict(UNKNOWN, reason="integer search cap", explored=nodes[0])
    return Verdict(UNSAT, explored=nodes[0])


# ---------------------------------------------------------------------------
# model checking


def spec_atoms(spec) -> list[LinearAtom]:
    if isinstance(spec, (BuchiSpec, AbaSpec)):
        return spec.atoms()
    if isinstance(spec, Fo):
        out = []
        for tok in sorted(_fo_all_tokens(spec)):
            if any(c in tok for c in "<>="):
                out.append(parse_atom(tok))
        return out
    raise TypeError(spec)


def _fo_all_tokens(phi: Fo) -> set:
    from .spec_fo import FAnd, FExists, FLetter, FNot, FOr

    if isinstance(phi, FLetter):
        return set(phi.letter)
    if isinstance(phi, FNot):
        return _fo_all_tokens(phi.arg)
    if isinstance(phi, (FAnd, FOr)):
        return set().union(*(_fo_all_tokens(a) for a in phi.args))
    if isinstance(phi, FExists):
        return _fo_all_tokens(phi.body)
    return fo_tokens(phi)


def _check_one(args):
    cps, spec, method, node_cap = args
    if isinstance(spec, Fo):
        return intersect_fo(cps, spec, node_cap=node_cap)
    return intersect_ba(cps, spec, method=method, node_cap=node_cap)


def model_check(sys: CounterSystem, c0: Configuration, spec, method: str = "periodic", node_cap: int = 4000, parallel: int = 0) -> Verdict:
    """Is there an infinite run from ``c0`` satisfying some word of ``spec``?

    The cps are tried in enumeration order and the first SAT is returned.
    With ``parallel > 1`` all cps are checked in worker processes and the
    SAT verdict of the least cps index wins, so the result is the same.
    """
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    atoms = spec_atoms(spec)
    schemas = build_constrained_schemas(sys, c0, atoms, node_cap=node_cap)
    if parallel and parallel > 1:
        from concurrent.futures import ProcessPoolExecutor

        todo = list(schemas)
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            verdicts = list(ex.map(_check_one, [(c, spec, method, node_cap) for c in todo]))
        pairs = list(enumerate(verdicts))
    else:
        pairs = ((i, _check_one((c, spec, method, node_cap))) for i, c in enumerate(schemas))
    unknown = None
    explored = 0
    for idx, v in pairs:
        explored += 1
        if v.answer == SAT:
            v.witness["cps_index"] = idx
            v.explored = explored
            return v
        if v.answer == UNKNOWN and unknown is None:
            unknown = v
    if unknown is not None:
        return Verdict(UNKNOWN, reason=unknown.reason, explored=explored)
    return Verdict(UNSAT, explored=explored)


def check_witness(sys: CounterSystem, c0: Configuration, spec, verdict: Verdict) -> bool:
    """Replay a SAT witness: constraint, run validity, letters and acceptance."""
    from .schema import replay

    cps = verdict.witness["cps"]
    counts = verdict.witness["counts"]
    asg = dict(zip(cps.variables, counts))
    if not pb.evaluate(cps.constraint, asg):
        return False
    w = instantiate_word(cps, counts)
    atoms = spec_atoms(spec)
    _, letters = replay(sys, c0, cps, counts, atoms, tail_periods=2)
    for i, a in enumerate(letters):
        if w.letter_at(i) != a:
            return False
    if isinstance(spec, Fo):
        return fo_eval(w, fo_translate_to_alphabet(spec, cps.letters()))
    return membership(w, spec_automaton(spec, cps.letters()))


# ---------------------------------------------------------------------------
# global model checking


def _rows_conj(rows, rename) -> pb.Formula:
    parts = []
    for cs, kind, rhs in rows:
        e = Lin({rename(v): c for v, c in cs.items()})
        parts.append(pb.le(e, rhs) if kind == "le" else pb.eq(e, rhs))
    return pb.conj(parts)


def global_model_check(sys: CounterSystem, q: str, spec: BuchiSpec, node_cap: int = 4000) -> pb.Formula:
    """Formula over ``z1..zn`` true exactly at the initial counters admitting a run.

    One disjunct per parameterised cps and feasible automaton state path;
    loop counts and residue multipliers are existentially bound.
    """
    if not is_flat(sys):
        raise NotFlat("control graph is not flat")
    atoms = spec_atoms(spec)
    disjuncts = []
    for ci, cps in enumerate(build_constrained_schemas(sys, q, atoms, node_cap=node_cap)):
        rows = _cps_rows(cps)
        if rows is None:
            continue
        B = spec_automaton(spec, cps.letters())
        params = set(cps.params)

        def rename(v, ci=ci):
            return v if v in params else f"c{ci}_{v}"

        for path_rows in _periodic_paths(cps, B, rows, _lp.lp_feasible):
            body = _rows_conj(path_rows, rename)
            aux = sorted(pb.free_vars(body) - params)
            disjuncts.append(pb.exists(aux, body))
    disjuncts = list(dict.fromkeys(disjuncts))
    return pb.disj(disjuncts)


def global_formula_text(F: pb.Formula) -> str:
    return pb.to_text(F)


def global_holds(F: pb.Formula, v: Sequence[int], node_cap: int = 4000) -> str:
    """SAT/UNSAT/UNKNOWN for ``F`` at ``z = v``."""
    sub = pb.substitute(F, {f"z{j + 1}": x for j, x in enumerate(v)})
    return pb.check(sub, node_cap=node_cap).status


# ---------------------------------------------------------------------------
# SAT benchmark generator


def gen_sat_instance(cnf: Sequence[Sequence[int]], nvars: int | None = None):
    """Flat system, initial configuration and Büchi spec reducing CNF-SAT.

    Counters ``x_i`` and ``x_{n+i}`` stand for literals ``p_i`` and ``!p_i``.
    A chain of states, each with a self-loop incrementing one counter, ends in
    a transition guarded by ``1 <= x <= 2``, ``x_i + x_{n+i} = 3`` and, per
    clause, literal sum ``> 3``; it reaches a sink labelled ``f``.
    """
    if nvars is None:
        nvars = max((abs(l) for c in cnf for l in c), default=0)
    clauses = [tuple(c) + (c[-1],) * (3 - len(c)) if 0 < len(c) < 3 else tuple(c) for c in cnf]
    for c in clauses:
        if not c or any(l == 0 or abs(l) > nvars for l in c):
            raise ValueError(f"bad clause {c}")
    dim = 2 * nvars
    states = [f"r{j + 1}" for j in range(dim)] + ["sink"]
    labels = [()] * dim + [("f",)]
    trans = []
    for j in range(dim):
        upd = tuple(1 if k == j else 0 for k in range(dim))
        trans.append(Transition(states[j], states[j], TRUE, upd))
        if j + 1 < dim:
            trans.append(Transition(states[j], states[j + 1], TRUE, (0,) * dim))
    lits = []

    def atom(coeffs, cmp, rhs):
        return Atom(LinearAtom(tuple(coeffs), cmp, rhs))

    for j in range(dim):
        e = [1 if k == j else 0 for k in range(dim)]
        lits.append(atom(e, ">=", 1))
        lits.append(atom(e, "<=", 2))
    for i in range(nvars):
        e = [0] * dim
        e[i] = 1
        e[nvars + i] = 1
        lits.append(atom(e, "=", 3))
    for c in clauses:
        e = [0] * dim
        for l in c:
            e[l - 1 if l > 0 else nvars - l - 1] += 1
        lits.append(atom(e, ">", 3))
    g = And(tuple(lits)) if len(lits) > 1 else (lits[0] if lits else TRUE)
    if dim == 0:
        states = ["r0", "sink"]
        labels = [(), ("f",)]
        trans.append(Transition("r0", "sink", g, ()))
    else:
        trans.append(Transition(states[dim - 1], "sink", g, (0,) * dim))
    trans.append(Transition("sink", "sink", TRUE, (0,) * dim))
    sys = CounterSystem(dim, tuple(states), tuple(frozenset(l) for l in labels), tuple(trans))
    c0 = Configuration(states[0], (0,) * dim)
    spec = BuchiSpec(
        ("s0", "s1"),
        "s0",
        frozenset({"s1"}),
        (("s0", TRUE, "s0"), ("s0", Prop("f"), "s1"), ("s1", TRUE, "s1")),
    )
    return sys, c0, spec


def parse_dimacs(text: str) -> tuple[int, list]:
    from .errors import ParseError

    nvars = None
    clauses = []
    cur: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("expected 'p cnf <vars> <clauses>'", line=lineno, col=1)
            nvars = int(parts[2])
            continue
        for tok in line.split():
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", line=lineno, col=raw.find(tok) + 1) from None
            if v == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(v)
    if cur:
        clauses.append(tuple(cur))
    if nvars is None:
        nvars = max((abs(l) for c in clauses for l in c), default=0)
    return nvars, clauses
