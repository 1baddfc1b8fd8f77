"""``flatmc`` command line.

Exit codes: 0 SAT/TRUE/ACCEPT/FLAT, 1 the negative answer, 2 UNKNOWN,
3 other errors (e.g. a non-flat system), 64 usage, 65 input syntax,
66 unreadable input file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import acceptance, checker, oracle
from . import presburger as pb
from .core_system import is_flat, parse_configuration, parse_system, system_to_text
from .errors import FlatMcError, ParseError
from .schema import build_constrained_schemas, enumerate_minimal_schemas
from .spec_automata import (
    ba_to_text,
    dealternate,
    membership,
    membership_onthefly,
    parse_aba,
    parse_ba,
    parse_word,
    word_to_text,
    expand,
)
from .spec_fo import fo_eval, parse_fo

EX_USAGE, EX_DATAERR, EX_NOINPUT = 64, 65, 66
EXIT = {"SAT": 0, "UNSAT": 1, "UNKNOWN": 2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _InputMissing(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _InputMissing(f"cannot read {path}: {exc.strerror}") from None


def _where(path: str, exc: ParseError) -> ParseError:
    """Same error with the file name in front of its location."""
    return ParseError(f"{path}: {exc.msg}" if str(exc) == exc.msg else f"{path}, {exc}")


def _load(path: str, parse):
    text = _read(path)
    try:
        return parse(text)
    except ParseError as exc:
        raise _where(path, exc) from None


def _spec(arg: str):
    kind, sep, path = arg.partition(":")
    if not sep or kind not in ("ba", "aba", "fo"):
        raise UsageError(f"--spec expects ba:<file>, aba:<file> or fo:<file>, got {arg!r}")
    parse = {"ba": parse_ba, "aba": parse_aba, "fo": parse_fo}[kind]
    return kind, _load(path, parse)


class Out:
    """Collects text lines and a JSON record; prints one of them at the end."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: list[str] = []
        self.data: dict = {}

    def line(self, s: str = ""):
        self.lines.append(s)

    def emit(self):
        if self.as_json:
            sys.stdout.write(json.dumps(self.data, sort_keys=True, indent=2) + "\n")
        elif self.lines:
            sys.stdout.write("\n".join(self.lines) + "\n")


# ---------------------------------------------------------------------------
# verbs


def cmd_check_flat(a, out: Out) -> int:
    s = _load(a.system, parse_system)
    flat = is_flat(s)
    out.line("FLAT" if flat else "NOT FLAT")
    out.data = {"flat": flat}
    return 0 if flat else 1


def cmd_schemas(a, out: Out) -> int:
    s = _load(a.system, parse_system)
    q = a.state or s.states[0]
    texts = [P.to_text() for P in enumerate_minimal_schemas(s, q)]
    for t in texts:
        out.line(t)
    out.data = {"state": q, "schemas": texts}
    return 0


def _init_or_state(a, s):
    if a.init:
        try:
            return parse_configuration(s, a.init)
        except ParseError as exc:
            raise ParseError(f"--init: {exc}") from None
    return a.state or s.states[0]


def cmd_cps(a, out: Out) -> int:
    s = _load(a.system, parse_system)
    init = _init_or_state(a, s)
    atoms = checker.spec_atoms(_spec(a.spec)[1]) if a.spec else []
    blocks = []
    for i, cps in enumerate(build_constrained_schemas(s, init, atoms, node_cap=a.cap)):
        if a.limit is not None and i >= a.limit:
            break
        blocks.append(cps.to_text())
    out.line("\n\n".join(blocks) if blocks else "(none)")
    out.data = {"cps": blocks}
    return 0


def cmd_solve(a, out: Out) -> int:
    f = _load(a.formula, pb.parse)
    res = pb.check(f, node_cap=a.cap)
    out.line(res.status)
    model = {}
    if res.status == pb.SAT:
        model = {v: res.model[v] for v in sorted(pb.free_vars(f))}
        for v, x in model.items():
            out.line(f"{v} = {x}")
    if res.status == pb.UNKNOWN and res.reason:
        out.line(f"reason: {res.reason}")
    out.data = {"status": res.status, "model": model}
    return EXIT[res.status]


def cmd_member(a, out: Out) -> int:
    w = _load(a.word, parse_word)
    kind, spec = _spec(a.spec)
    if kind == "ba":
        ok = membership(w, expand(spec, w.letters()))
    elif kind == "aba":
        ok = membership_onthefly(w, dealternate(spec, w.letters()))
    else:
        raise UsageError("member takes a ba or aba spec; use fo-eval for FO")
    out.line("ACCEPT" if ok else "REJECT")
    out.data = {"accepted": ok}
    return 0 if ok else 1


def cmd_fo_eval(a, out: Out) -> int:
    w = _load(a.word, parse_word)
    phi = _load(a.formula, parse_fo)
    ok = fo_eval(w, phi)
    out.line("TRUE" if ok else "FALSE")
    out.data = {"value": ok}
    return 0 if ok else 1


def cmd_mc(a, out: Out) -> int:
    s = _load(a.system, parse_system)
    c0 = parse_configuration(s, a.init)
    _, spec = _spec(a.spec)
    v = checker.model_check(s, c0, spec, method=a.method, node_cap=a.cap, parallel=a.parallel)
    out.line(v.answer)
    out.data = {"answer": v.answer, "explored": v.explored}
    if v.answer == checker.UNKNOWN and v.reason:
        out.line(f"reason: {v.reason}")
        out.data["reason"] = v.reason
    if v.answer == checker.SAT and a.witness:
        w = v.witness
        word = word_to_text(w["word"]).rstrip("\n")
        out.line(f"schema: {w['schema']}")
        out.line(f"counts: {' '.join(map(str, w['schema_counts']))}")
        out.line("word:")
        out.line(word)
        out.data["witness"] = {"schema": w["schema"], "counts": list(w["schema_counts"]), "word": word}
    return EXIT[v.answer]


def cmd_global(a, out: Out) -> int:
    s = _load(a.system, parse_system)
    kind, spec = _spec(a.spec)
    if kind != "ba":
        raise UsageError("global takes a ba spec")
    F = checker.global_model_check(s, a.state or s.states[0], spec, node_cap=a.cap)
    text = pb.to_text(F)
    if a.out:
        Path(a.out).write_text(text + "\n")
        out.line(f"wrote {a.out}")
    else:
        out.line(text)
    out.data = {"formula": text}
    return 0


def cmd_gen_sat(a, out: Out) -> int:
    nvars, cnf = _load(a.dimacs, checker.parse_dimacs)
    s, c0, spec = checker.gen_sat_instance(cnf, nvars)
    d = Path(a.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    stem = a.name or Path(a.dimacs).stem
    files = {
        f"{stem}.sys": system_to_text(s),
        f"{stem}.ba": ba_to_text(spec),
        f"{stem}.init": " ".join([c0.state, *map(str, c0.counters)]) + "\n",
    }
    for name, text in files.items():
        (d / name).write_text(text if text.endswith("\n") else text + "\n")
        out.line(str(d / name))
    out.data = {"files": [str(d / n) for n in files]}
    return 0


def cmd_oracle(a, out: Out) -> int:
    if a.what == "sat":
        nvars, cnf = _load(a.args[0], checker.parse_dimacs)
        ok = oracle.oracle_sat(cnf, nvars)
        out.line("TRUE" if ok else "FALSE")
        out.data = {"answer": "TRUE" if ok else "FALSE"}
        return 0 if ok else 1
    if a.what == "fo-eval":
        if len(a.args) != 2:
            raise UsageError("oracle fo-eval <word-file> <fo-file>")
        w = _load(a.args[0], parse_word)
        phi = _load(a.args[1], parse_fo)
        ok = oracle.oracle_fo_eval(w.prefix, w.period, phi)
        out.line("TRUE" if ok else "FALSE")
        out.data = {"answer": "TRUE" if ok else "FALSE"}
        return 0 if ok else 1
    if len(a.args) != 1 or not a.init or not a.spec:
        raise UsageError(f"oracle {a.what} <sys-file> --init '<state> <v1> ...' --spec <kind>:<file>")
    s = _load(a.args[0], parse_system)
    c0 = parse_configuration(s, a.init)
    kind, spec = _spec(a.spec)
    if a.what == "mc-ba":
        if kind != "ba":
            raise UsageError("oracle mc-ba takes a ba spec")
        r = oracle.oracle_mc_ba(s, c0, spec, count_cap=a.count_cap)
    else:
        if kind != "fo":
            raise UsageError("oracle mc-fo takes an fo spec")
        r = oracle.oracle_mc_fo(s, c0, spec, count_cap=a.count_cap)
    out.line(r.answer)
    out.line(f"justification: {r.justification}")
    out.data = {"answer": r.answer, "explored": r.explored, "justification": r.justification}
    if r.run:
        _, prefix, loop = r.run
        run = " ".join(f"d{t + 1}" for t in prefix) + " (" + " ".join(f"d{t + 1}" for t in loop) + ")^w"
        out.line(f"run: {run.strip()}")
        out.data["run"] = run.strip()
    return {"TRUE": 0, "FALSE": 1, "INCONCLUSIVE": 2}[r.answer]


def cmd_selftest(a, out: Out) -> int:
    only = set(a.only.split(",")) if a.only else None
    if only:
        unknown = only - set(acceptance.CRITERIA)
        if unknown:
            raise UsageError(f"unknown criteria {sorted(unknown)}")
    results = acceptance.run_all(a.seed, only, parallel=a.parallel)
    text = acceptance.report(results, a.seed)
    out.lines = text.rstrip("\n").split("\n")
    out.data = {
        "seed": a.seed,
        "criteria": [{"id": r.number, "status": r.status, "title": r.title, "detail": r.detail} for r in results],
    }
    bad = any(r.status in (acceptance.FAIL, acceptance.XPASS) for r in results)
    return 1 if bad else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=42, help="seed for randomized generation")
    common.add_argument("--parallel", type=int, default=0, metavar="N", help="worker processes (0 = serial)")

    p = _Parser(prog="flatmc", description="Model checking for flat counter systems.")
    sub = p.add_subparsers(dest="verb", metavar="<verb>", parser_class=_Parser)
    sub.required = True

    def verb(name, fn, help):
        sp = sub.add_parser(name, help=help, parents=[common])
        sp.set_defaults(fn=fn)
        return sp

    sp = verb("check-flat", cmd_check_flat, "is the control graph flat?")
    sp.add_argument("system")

    sp = verb("schemas", cmd_schemas, "list minimal path schemas")
    sp.add_argument("system")
    sp.add_argument("--state")

    sp = verb("cps", cmd_cps, "list constrained path schemas")
    sp.add_argument("system")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--init", help='"<state> <v1> ... <vn>"')
    g.add_argument("--state", help="symbolic initial counters z1..zn")
    sp.add_argument("--spec", help="collect tracked atoms from <kind>:<file>")
    sp.add_argument("--limit", type=int)
    sp.add_argument("--cap", type=int, default=4000)

    sp = verb("solve", cmd_solve, "decide a Presburger formula")
    sp.add_argument("formula", help="file, or - for stdin")
    sp.add_argument("--cap", type=int, default=4000)

    sp = verb("member", cmd_member, "ultimately periodic word membership")
    sp.add_argument("word")
    sp.add_argument("--spec", required=True)

    sp = verb("fo-eval", cmd_fo_eval, "evaluate an FO sentence on a word")
    sp.add_argument("word")
    sp.add_argument("formula")

    sp = verb("mc", cmd_mc, "model check from an initial configuration")
    sp.add_argument("system")
    sp.add_argument("--init", required=True)
    sp.add_argument("--spec", required=True)
    sp.add_argument("--cap", type=int, default=4000, help="integer search node cap")
    sp.add_argument("--method", choices=("periodic", "parikh"), default="periodic")
    sp.add_argument("--witness", action="store_true")

    sp = verb("global", cmd_global, "Presburger formula of good initial counters")
    sp.add_argument("system")
    sp.add_argument("--state")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out")
    sp.add_argument("--cap", type=int, default=4000)

    sp = verb("gen-sat", cmd_gen_sat, "SAT benchmark instance from DIMACS")
    sp.add_argument("dimacs")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--name")

    sp = verb("oracle", cmd_oracle, "brute-force reference procedures")
    sp.add_argument("what", choices=("mc-ba", "mc-fo", "fo-eval", "sat"))
    sp.add_argument("args", nargs="+")
    sp.add_argument("--init")
    sp.add_argument("--spec")
    sp.add_argument("--count-cap", type=int, default=6)

    sp = verb("selftest", cmd_selftest, "run the acceptance suite")
    sp.add_argument("--only", help="comma separated criterion ids, e.g. 1,6a")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        out = Out(a.json)
        code = a.fn(a, out)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EX_USAGE
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EX_DATAERR
    except _InputMissing as exc:
        sys.stderr.write(f"{exc}\n")
        return EX_NOINPUT
    except FlatMcError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
