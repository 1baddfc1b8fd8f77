"""The ten acceptance criteria as seeded, self-contained checks.

Each ``criterion_<n>(seed)`` returns a :class:`CriterionResult`.  Reports
contain counts and verdicts only (no timings), so that a fixed seed always
produces the same bytes.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field
from importlib import resources

from . import checker, gen, oracle
from . import presburger as pb
from .core_system import Configuration, CounterSystem, Transition, TRUE, parse_system, system_to_text
from .schema import (
    build_constrained_schemas,
    enumerate_minimal_schemas,
    instantiate_word,
    replay,
    schema_regex_match,
)
from .spec_automata import (
    BuchiAutomaton,
    UpWord,
    aba_conjunction,
    ba_to_text,
    all_letters,
    dealternate,
    membership,
    membership_onthefly,
    parse_ba,
    word_to_text,
)
from .spec_fo import StutterParams, fo_eval

PASS, FAIL, XFAIL, XPASS = "PASS", "FAIL", "XFAIL", "XPASS"


@dataclass
class CriterionResult:
    number: str
    title: str
    passed: bool
    detail: str
    expected_failure: bool = False
    failures: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.expected_failure:
            return XPASS if self.passed else XFAIL
        return PASS if self.passed else FAIL

    def line(self) -> str:
        return f"C{self.number} {self.status} {self.title}: {self.detail}"


def _rng(seed: int, tag: str, i: int) -> random.Random:
    return random.Random(f"{seed}:{tag}:{i}")


def _example(name: str) -> str:
    return resources.files("flatmc").joinpath("data").joinpath(name).read_text()


# ---------------------------------------------------------------------------


def criterion_1(seed: int = 42, n: int = 100, cap: int = 6) -> CriterionResult:
    """Lasso runs are covered by minimal schemas; solutions replay as runs."""
    fails = []
    runs = vectors = 0
    for i in range(n):
        rng = _rng(seed, "c1", i)
        sys = gen.random_flat_system(rng)
        c0 = gen.random_config(rng, sys)
        schemas = enumerate_minimal_schemas(sys, c0.state)
        for prefix, cycle in oracle.lasso_runs(sys, c0, count_cap=cap):
            runs += 1
            if not any(schema_regex_match(sys, P, prefix, cycle) for P in schemas):
                fails.append((i, "uncovered", prefix, cycle))
        for cps in build_constrained_schemas(sys, c0):
            for counts in itertools.product(range(1, cap + 1), repeat=cps.k - 1):
                if not pb.evaluate(cps.constraint, dict(zip(cps.variables, counts))):
                    continue
                vectors += 1
                try:
                    _, letters = replay(sys, c0, cps, counts)
                except Exception as exc:  # any core error is a failure
                    fails.append((i, "replay", counts, type(exc).__name__))
                    continue
                w = instantiate_word(cps, counts)
                if any(w.letter_at(j) != a for j, a in enumerate(letters)):
                    fails.append((i, "letters", counts))
    detail = f"{n} systems, {runs} lasso runs, {vectors} count vectors, {len(fails)} failures"
    return CriterionResult("1", "schema soundness/completeness", not fails, detail, failures=fails)


def _single_loop_system(upd: tuple, guard, exit_guard) -> CounterSystem:
    dim = len(upd)
    zero = (0,) * dim
    return CounterSystem(
        dim,
        ("q1", "q2", "q3"),
        (frozenset(), frozenset(), frozenset()),
        (
            Transition("q1", "q2", TRUE, zero),
            Transition("q2", "q2", guard, upd),
            Transition("q2", "q3", exit_guard, zero),
            Transition("q3", "q3", TRUE, zero),
        ),
    )


def loop_solutions(sys: CounterSystem, c0: Configuration, hi: int = 6) -> set:
    """Counts ``n in [1, hi]`` of the q2 loop allowed by the cps constraints."""
    out = set()
    for cps in build_constrained_schemas(sys, c0):
        P = cps.provenance.schema
        li = next((j for j, l in enumerate(P.loops) if 1 in l), None)
        if li is None or li == P.k - 1:
            continue
        for counts in itertools.product(range(1, hi + 1), repeat=cps.k - 1):
            if pb.evaluate(cps.constraint, dict(zip(cps.variables, counts))):
                n = cps.schema_counts(counts)[li]
                if n <= hi:
                    out.add(n)
    return out


def run_solutions(sys: CounterSystem, c0: Configuration, hi: int = 6) -> set:
    """Same set computed by direct simulation of ``d1 d2^n d3 d4^omega``."""
    from .core_system import can_step, step

    out = set()
    for n in range(1, hi + 1):
        c = c0
        ok = True
        for t in [0] + [1] * n + [2]:
            if not can_step(sys, c, t):
                ok = False
                break
            c = step(sys, c, t)
        if ok:
            out.add(n)
    return out


def criterion_2(seed: int = 42, n: int = 100) -> CriterionResult:
    """Loop-count solution sets match the runs exactly."""
    sys = _single_loop_system((-3, 0), TRUE, TRUE)
    base = loop_solutions(sys, Configuration("q1", (7, 0)))
    fails = [] if base == {1, 2} else [("example", sorted(base))]
    for i in range(n):
        rng = _rng(seed, "c2", i)
        dim = rng.randint(1, 2)
        upd = tuple(rng.randint(-2, 2) for _ in range(dim))
        sys = _single_loop_system(upd, gen.random_guard(rng, dim, 0.5), gen.random_guard(rng, dim, 0.5))
        c0 = Configuration("q1", tuple(rng.randint(0, 8) for _ in range(dim)))
        a, b = loop_solutions(sys, c0), run_solutions(sys, c0)
        if a != b:
            fails.append((i, sorted(a), sorted(b)))
    detail = f"(7,0) example gives {sorted(base)}; {n} random loops, {len(fails)} failures"
    return CriterionResult("2", "constraint-system exactness", not fails, detail, failures=fails)


def criterion_3(seed: int = 42, n_words: int = 50, n_sentences: int = 50) -> CriterionResult:
    """Stuttering: ``w1 s^M w2`` and ``w1 s^(M+k) w2`` agree on height-N sentences."""
    fails = []
    checks = 0
    sigma = all_letters(gen.PROPS)
    for N in (1, 2, 3):
        M = StutterParams(N).collapse
        rng = _rng(seed, f"c3-{N}", 0)
        sentences = [gen.random_fo(rng, N) for _ in range(n_sentences)]
        for i in range(n_words):
            w1 = [rng.choice(sigma) for _ in range(rng.randint(0, 3))]
            s = [rng.choice(sigma) for _ in range(rng.randint(1, 2))]
            w2 = gen.random_word(rng, sigma, 2, 2)
            k = rng.randint(1, 3)
            a = UpWord(tuple(w1 + s * M) + w2.prefix, w2.period)
            b = UpWord(tuple(w1 + s * (M + k)) + w2.prefix, w2.period)
            for j, phi in enumerate(sentences):
                checks += 1
                if fo_eval(a, phi) != fo_eval(b, phi):
                    fails.append((N, i, j))
    detail = f"{checks} (word, sentence) pairs over N in 1..3, {len(fails)} disagreements"
    return CriterionResult("3", "stuttering theorem", not fails, detail, failures=fails)


def random_explicit_ba(rng: random.Random, sigma, max_states: int = 3) -> BuchiAutomaton:
    n = rng.randint(1, max_states)
    states = tuple(range(n))
    trans = set()
    for s in states:
        for a in sigma:
            for t in states:
                if rng.random() < 0.45:
                    trans.add((s, a, t))
    acc = frozenset(s for s in states if rng.random() < 0.5) or frozenset([rng.randrange(n)])
    return BuchiAutomaton(states, 0, acc, tuple(sorted(trans, key=repr)))


def criterion_4(seed: int = 42, n: int = 100) -> CriterionResult:
    """Pumping: some ``K in [1, |Q|]`` copies of ``u`` can be removed."""
    sigma = [frozenset(), frozenset({"p"})]
    fails = []
    done = tries = 0
    i = 0
    while done < n:
        rng = _rng(seed, "c4", i)
        i += 1
        B = random_explicit_ba(rng, sigma)
        Q = len(B.states)
        word = lambda lo, hi: [rng.choice(sigma) for _ in range(rng.randint(lo, hi))]
        w1, u, w2, loop = word(0, 3), word(1, 3), word(0, 3), word(1, 3)
        tries += 1
        if not membership(UpWord(tuple(w1 + u * (2 * Q * Q) + w2), tuple(loop)), B):
            continue
        done += 1
        if not any(
            membership(UpWord(tuple(w1 + u * (2 * Q * Q - K) + w2), tuple(loop)), B) for K in range(1, Q + 1)
        ):
            fails.append(i - 1)
    detail = f"{n} accepted pumped words ({tries} samples), {len(fails)} failures"
    return CriterionResult("4", "Büchi pumping", not fails, detail, failures=fails)


def criterion_5(seed: int = 42, n: int = 100) -> CriterionResult:
    """gen_sat_instance + model_check agrees with truth tables."""
    fails = []
    sat = 0
    for i in range(n):
        rng = _rng(seed, "c5", i)
        nv, cnf = gen.random_cnf(rng)
        sys, c0, spec = checker.gen_sat_instance(cnf, nv)
        v = checker.model_check(sys, c0, spec)
        truth = oracle.oracle_sat(cnf, nv)
        sat += truth
        if v.answer != (checker.SAT if truth else checker.UNSAT):
            fails.append((i, v.answer, truth))
    detail = f"{n} CNFs ({sat} satisfiable), {len(fails)} disagreements"
    return CriterionResult("5", "SAT reduction round-trip", not fails, detail, failures=fails)


def fig1():
    return parse_system(_example("fig1.sys")), parse_ba(_example("fig1.ba"))


FIG1_EXPECTED = {(0, 0): checker.SAT, (3, 0): checker.SAT, (1, 0): checker.UNSAT}


def displayed_characterization(v) -> bool:
    """``exists y ((x1 = 3y + x2) or (x2 = 2y + x1))``."""
    x1, x2 = v
    return (x1 >= x2 and (x1 - x2) % 3 == 0) or (x2 >= x1 and (x2 - x1) % 2 == 0)


def criterion_6a(seed: int = 42) -> CriterionResult:
    sys, spec = fig1()
    got = {v: checker.model_check(sys, Configuration("q1", v), spec).answer for v in FIG1_EXPECTED}
    ok = got == FIG1_EXPECTED
    detail = ", ".join(f"{v}->{a}" for v, a in got.items())
    return CriterionResult("6a", "worked example verdicts", ok, detail)


def criterion_6b(seed: int = 42, box: int = 30) -> CriterionResult:
    """Global formula versus the displayed characterization on ``[0, box]^2``."""
    sys, spec = fig1()
    F = checker.global_model_check(sys, "q1", spec)
    diff = []
    for v in itertools.product(range(box + 1), repeat=2):
        got = checker.global_holds(F, v) == pb.SAT
        if got != displayed_characterization(v):
            diff.append(v)
    detail = f"{(box + 1) ** 2} points, {len(diff)} disagreements"
    if diff:
        detail += f" (first {diff[0]}: formula true, characterization false)"
    return CriterionResult("6b", "worked example global formula", not diff, detail, expected_failure=True, failures=diff)


def random_nfa(rng: random.Random):
    n = rng.randint(1, 4)
    letters = "abc"[: rng.randint(1, 3)]
    trans = sorted({(rng.randrange(n), rng.choice(letters), rng.randrange(n)) for _ in range(rng.randint(1, 8))})
    fin = frozenset(q for q in range(n) if rng.random() < 0.4) or frozenset([rng.randrange(n)])
    return pb.Nfa(tuple(range(n)), 0, fin, tuple(trans)), letters


def brute_parikh(nfa, letters, L: int) -> set:
    out = set()
    for length in range(L + 1):
        for w in itertools.product(letters, repeat=length):
            S = {nfa.initial}
            for a in w:
                S = {d for (s, b, d) in nfa.transitions if s in S and b == a}
            if S & nfa.finals:
                out.add(tuple(w.count(a) for a in letters))
    return out


def criterion_7(seed: int = 42, n: int = 50, L: int = 8) -> CriterionResult:
    fails = []
    for i in range(n):
        nfa, letters = random_nfa(_rng(seed, "c7", i))
        f = pb.parikh_formula(nfa)
        present = set(nfa.alphabet())
        got = set()
        for vec in itertools.product(range(L + 1), repeat=len(letters)):
            if sum(vec) > L or any(x and a not in present for a, x in zip(letters, vec)):
                continue
            g = pb.substitute(f, {f"n_{a}": x for a, x in zip(letters, vec) if a in present})
            if pb.check(g).status == pb.SAT:
                got.add(vec)
        if got != brute_parikh(nfa, letters, L):
            fails.append(i)
    detail = f"{n} NFAs, vectors with sum <= {L}, {len(fails)} mismatches"
    return CriterionResult("7", "Parikh formula bounded equivalence", not fails, detail, failures=fails)


def criterion_8(seed: int = 42, n: int = 50, words: int = 20) -> CriterionResult:
    fails = []
    sigma = all_letters(gen.PROPS)
    for i in range(n):
        rng = _rng(seed, "c8", i)
        b1, b2 = gen.random_ba(rng), gen.random_ba(rng)
        aba = aba_conjunction([b1, b2])
        D = dealternate(aba)
        P = oracle.product_ba(b1, b2, sigma)
        for j in range(words):
            w = gen.random_word(rng, sigma)
            if membership_onthefly(w, D) != oracle.explicit_membership(w.prefix, w.period, P):
                fails.append((i, j))
    detail = f"{n} ABAs x {words} words, {len(fails)} disagreements"
    return CriterionResult("8", "dealternation", not fails, detail, failures=fails)


def criterion_9(seed: int = 42, n_ba: int = 200, n_fo: int = 100) -> CriterionResult:
    fails = []
    unknown = decisive = 0
    for i in range(n_ba + n_fo):
        rng = _rng(seed, "c9", i)
        sys = gen.random_flat_system(rng)
        c0 = gen.random_config(rng, sys)
        if i < n_ba:
            atoms = [gen.random_atom(rng, sys.dim)] if rng.random() < 0.5 else []
            spec = gen.random_ba(rng, atoms=atoms)
            ref = oracle.oracle_mc_ba(sys, c0, spec)
        else:
            toks = list(gen.PROPS)
            if rng.random() < 0.5:
                toks.append(gen.random_atom(rng, sys.dim).token())
            spec = gen.random_fo(rng, rng.randint(1, 2), toks)
            ref = oracle.oracle_mc_fo(sys, c0, spec)
        v = checker.model_check(sys, c0, spec)
        if v.answer == checker.UNKNOWN:
            unknown += 1
        if ref.decisive:
            decisive += 1
        if (v.answer, ref.answer) in ((checker.SAT, oracle.FALSE), (checker.UNSAT, oracle.TRUE)):
            fails.append((i, v.answer, ref.answer))
        if v.answer == checker.SAT and not checker.check_witness(sys, c0, spec, v):
            fails.append((i, "witness"))
    total = n_ba + n_fo
    rate = unknown / total
    ok = not fails and rate < 0.10
    detail = f"{total} instances, {decisive} decisive oracle verdicts, {len(fails)} contradictions, UNKNOWN rate {unknown}/{total}"
    return CriterionResult("9", "differential end-to-end", ok, detail, failures=fails)


def criterion_10(seed: int = 42) -> CriterionResult:
    """In-process determinism: instance generation and verdicts repeat exactly."""

    def digest():
        h = hashlib.sha256()
        for i in range(20):
            rng = _rng(seed, "c10", i)
            sys = gen.random_flat_system(rng)
            c0 = gen.random_config(rng, sys)
            spec = gen.random_ba(rng)
            v = checker.model_check(sys, c0, spec)
            # canonical text, not repr: frozenset order varies between processes
            word = word_to_text(v.witness["word"]) if v.witness else ""
            h.update("\n".join((system_to_text(sys), str(c0.counters), ba_to_text(spec), v.answer, word)).encode())
        return h.hexdigest()

    a, b = digest(), digest()
    return CriterionResult("10", "determinism", a == b, f"digest {a[:16]}")


CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "6a": criterion_6a,
    "6b": criterion_6b,
    "7": criterion_7,
    "8": criterion_8,
    "9": criterion_9,
    "10": criterion_10,
}


def _run_one(args):
    key, seed = args
    return CRITERIA[key](seed)


def run_all(seed: int = 42, only=None, parallel: int = 0) -> list[CriterionResult]:
    keys = [k for k in CRITERIA if only is None or k in only]
    jobs = [(k, seed) for k in keys]
    if parallel and parallel > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=parallel) as ex:
            return list(ex.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def report(results: list[CriterionResult], seed: int) -> str:
    lines = [f"flatmc selftest seed={seed}"]
    lines += [r.line() for r in results]
    bad = sum(r.status in (FAIL, XPASS) for r in results)
    lines.append(f"summary: {len(results) - bad}/{len(results)} as expected")
    return "\n".join(lines) + "\n"
