"""Compare the compiled and pure-Python FO evaluators on stuttering checks.

Usage: python3 benchmarks/bench_fo_backends.py [--pairs 300] [--seed 1]

Both backends evaluate the same sentences on the same words; the script
fails if they ever disagree.
"""

from __future__ import annotations

import argparse
import random
import time

from flatmc import gen
from flatmc.spec_automata import UpWord, all_letters
from flatmc.spec_fo import BACKEND, StutterParams, fo_eval


def workload(seed: int, pairs: int):
    rng = random.Random(seed)
    sigma = all_letters(gen.PROPS)
    out = []
    for i in range(pairs):
        N = 1 + i % 3
        M = StutterParams(N).collapse
        w1 = [rng.choice(sigma) for _ in range(rng.randint(0, 3))]
        s = [rng.choice(sigma) for _ in range(rng.randint(1, 2))]
        tail = gen.random_word(rng, sigma, 2, 2)
        phi = gen.random_fo(rng, N)
        for k in (M, M + 1):
            out.append((UpWord(tuple(w1 + s * k) + tail.prefix, tail.period), phi))
    return out


def run(backend: str, jobs) -> tuple[float, list]:
    t = time.perf_counter()
    res = [fo_eval(w, phi, backend=backend) for w, phi in jobs]
    return time.perf_counter() - t, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=300)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()
    jobs = workload(a.seed, a.pairs)
    if BACKEND != "cython":
        print("compiled kernel not built; timing the Python evaluator only")
        dt, _ = run("python", jobs)
        print(f"python  {dt:8.3f} s  ({len(jobs)} evaluations)")
        return
    dc, rc = run("cython", jobs)
    dp, rp = run("python", jobs)
    if rc != rp:
        raise SystemExit("backends disagree")
    print(f"cython  {dc:8.3f} s  ({len(jobs)} evaluations)")
    print(f"python  {dp:8.3f} s")
    print(f"speedup {dp / dc:8.1f}x")


if __name__ == "__main__":
    main()
