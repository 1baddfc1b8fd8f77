"""Pure-Python evaluator for compiled FO programs (fallback for ``_fokernel``).

A program is a set of parallel integer arrays indexed by node:

* ``op``: 0 true, 1 false, 2 predicate, 3 successor, 4 less-than,
  5 equality, 6 not, 7 and, 8 or, 9 exists;
* ``a``/``b``: operands (predicate id and slot, two slots, or child nodes;
  for exists the bound slot and the body);
* ``c``: for exists, the number of periods scanned past the base position;
* ``fmask``: for exists, the bitmask of slots free in that subformula.

Positions past the prefix read the period cyclically.  An existential scans
``[0, base + P * c)`` where ``base`` is the least position at or after both
the prefix end and every free position, congruent to the prefix end mod P.
"""

from __future__ import annotations


def eval_program(op, a, b, c, fmask, pred_tab, nletters, pre_ids, per_ids, root, nslots):
    U = len(pre_ids)
    P = len(per_ids)
    env = [0] * max(1, nslots)

    def letter(i):
        if i < U:
            return pre_ids[i]
        return per_ids[(i - U) % P]

    def ev(k):
        o = op[k]
        if o == 2:
            return pred_tab[a[k] * nletters + letter(env[b[k]])]
        if o == 7:
            return ev(a[k]) and ev(b[k])
        if o == 6:
            return not ev(a[k])
        if o == 9:
            slot = a[k]
            mask = fmask[k]
            top = -1
            s = 0
            while mask:
                if mask & 1 and env[s] > top:
                    top = env[s]
                mask >>= 1
                s += 1
            lo = U if top + 1 < U else top + 1
            base = lo + (U - lo) % P
            end = base + P * c[k]
            body = b[k]
            saved = env[slot]
            for i in range(end):
                env[slot] = i
                if ev(body):
                    env[slot] = saved
                    return True
            env[slot] = saved
            return False
        if o == 8:
            return ev(a[k]) or ev(b[k])
        if o == 4:
            return env[a[k]] < env[b[k]]
        if o == 3:
            return env[b[k]] == env[a[k]] + 1
        if o == 5:
            return env[a[k]] == env[b[k]]
        if o == 0:
            return True
        return False

    return bool(ev(root))
