"""Exact linear and integer-linear feasibility.

Constraints are ``(coeffs, kind, rhs)`` with ``coeffs`` a dict from variable
name to int and ``kind`` in ``{"le", "eq"}``.  Variables are natural numbers
unless listed as free (ranging over all integers; only created internally by
equality elimination).  Arithmetic is exact: gmpy2 rationals when available,
otherwise ``fractions.Fraction``.
"""

from __future__ import annotations

from itertools import count
from math import floor, gcd

try:  # pragma: no cover - depends on environment
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"

_fresh = count()


class NodeCap(Exception):
    """Branch-and-bound ran out of its node budget."""


def ceil_div(a: int, b: int) -> int:
    """Exact ceil(a / b) for integers."""
    return -((-a) // b)


# ---------------------------------------------------------------------------
# normalisation


def normalise(cons):
    """Divide by the coefficient gcd, rounding ``le`` right-hand sides down.

    Returns ``None`` when some constraint is trivially infeasible, else the
    list without trivially true constraints and duplicates.  The rounding is
    the integer tightening ``sum a x <= b  ->  sum (a/g) x <= floor(b/g)``.
    """
    out = []
    seen = set()
    for coeffs, kind, rhs in cons:
        cs = {v: c for v, c in coeffs.items() if c != 0}
        if not cs:
            if (rhs < 0) if kind == "le" else (rhs != 0):
                return None
            continue
        g = 0
        for c in cs.values():
            g = gcd(g, c)
        if kind == "eq":
            if rhs % g:
                return None
            cs = {v: c // g for v, c in cs.items()}
            rhs //= g
            first = min(cs)
            if cs[first] < 0:
                cs = {v: -c for v, c in cs.items()}
                rhs = -rhs
        else:
            cs = {v: c // g for v, c in cs.items()}
            rhs = rhs // g
        key = (tuple(sorted(cs.items())), kind, rhs)
        if key in seen:
            continue
        seen.add(key)
        out.append((cs, kind, rhs))
    return out


# ---------------------------------------------------------------------------
# equality elimination


def _subst(cons, v, expr, const):
    """Replace ``v`` by ``sum expr + const`` in every constraint."""
    out = []
    for cs, kind, rhs in cons:
        c = cs.get(v)
        if not c:
            out.append((cs, kind, rhs))
            continue
        new = dict(cs)
        del new[v]
        for w, a in expr.items():
            new[w] = new.get(w, 0) + c * a
            if new[w] == 0:
                del new[w]
        out.append((new, kind, rhs - c * const))
    return out


def _mod_hat(a: int, m: int) -> int:
    """Symmetric residue ``a - m*floor(a/m + 1/2)``."""
    return a - m * ((2 * a + m) // (2 * m))


def eliminate_equalities(cons, free: set):
    """Remove every equality by integer substitution.

    Unit coefficients are solved for directly; otherwise the symmetric-modulus
    step introduces a fresh free variable and shrinks coefficients until a
    unit appears.  Returns ``(inequalities, substitutions, free)`` or
    ``None`` if a gcd test fails.  ``substitutions`` is a list of
    ``(var, expr, const)`` to be replayed in reverse for model recovery.
    A nonnegative variable that gets eliminated leaves the constraint
    ``expr + const >= 0`` behind.
    """
    free = set(free)
    subs = []
    cons = list(cons)
    guard = 0
    while True:
        cons = normalise(cons)
        if cons is None:
            return None
        eq = next((c for c in cons if c[1] == "eq"), None)
        if eq is None:
            return cons, subs, free
        guard += 1
        if guard > 10000:  # pragma: no cover - defensive
            raise NodeCap()
        cs, _, rhs = eq
        unit = [v for v, a in sorted(cs.items()) if abs(a) == 1]
        rest_cons = [c for c in cons if c is not eq]
        if unit:
            # prefer eliminating free variables (no residual sign constraint)
            unit.sort(key=lambda v: (v not in free, v))
            v = unit[0]
            a = cs[v]
            expr = {w: -b * a for w, b in cs.items() if w != v}
            const = rhs * a
            cons = _subst(rest_cons, v, expr, const)
            if v not in free:
                neg = {w: -b for w, b in expr.items()}
                cons.append((neg, "le", const))
            subs.append((v, expr, const))
            continue
        k = min(sorted(cs), key=lambda v: abs(cs[v]))
        ak = cs[k]
        m = abs(ak) + 1
        sigma = f"_s{next(_fresh)}"
        free.add(sigma)
        sgn = 1 if ak > 0 else -1
        # x_k = -sgn*m*sigma + sum_{i != k} sgn*(a_i mod^ m) x_i  - sgn*(b mod^ m)
        expr = {sigma: -sgn * m}
        for w, b in cs.items():
            if w != k:
                r = _mod_hat(b, m)
                if r:
                    expr[w] = sgn * r
        const = -sgn * _mod_hat(rhs, m)
        cons = _subst(cons, k, expr, const)
        if k not in free:
            neg = {w: -b for w, b in expr.items()}
            cons.append((neg, "le", const))
        subs.append((k, expr, const))


def recover(model: dict, subs) -> dict:
    model = dict(model)
    for v, expr, const in reversed(subs):
        model[v] = const + sum(a * model.get(w, 0) for w, a in expr.items())
    return model


# ---------------------------------------------------------------------------
# bound propagation


def propagate(cons, lb: dict, ub: dict, rounds: int = 30) -> bool:
    """Integer interval propagation on ``le`` rows; False on conflict.

    ``lb``/``ub`` map variables to ints or ``None`` (unbounded) and are
    updated in place.
    """
    for _ in range(rounds):
        changed = False
        for cs, _, rhs in cons:
            minact = 0
            inf_count = 0
            inf_var = None
            for v, c in cs.items():
                b = lb[v] if c > 0 else ub[v]
                if b is None:
                    inf_count += 1
                    inf_var = v
                    if inf_count > 1:
                        break
                else:
                    minact += c * b
            if inf_count > 1:
                continue
            if inf_count == 0 and minact > rhs:
                return False
            for v, c in cs.items():
                if inf_count == 1:
                    if v != inf_var:
                        continue
                    rest = minact
                else:
                    rest = minact - c * (lb[v] if c > 0 else ub[v])
                slack = rhs - rest
                if c > 0:
                    nb = slack // c
                    if ub[v] is None or nb < ub[v]:
                        ub[v] = nb
                        changed = True
                        if lb[v] is not None and nb < lb[v]:
                            return False
                else:
                    nb = ceil_div(slack, c)
                    if lb[v] is None or nb > lb[v]:
                        lb[v] = nb
                        changed = True
                        if ub[v] is not None and nb > ub[v]:
                            return False
        if not changed:
            return True
    return True


# ---------------------------------------------------------------------------
# exact simplex


def _pivot(T, r, c):
    row = T[r]
    p = row[c]
    if p != 1:
        inv = 1 / p
        row[:] = [x * inv for x in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f != 0:
                other[:] = [a - f * b for a, b in zip(other, row)]


def _simplex(T, basis, obj, ncols, allowed) -> bool:
    """Minimise in place with Bland's rule; False when unbounded."""
    while True:
        enter = -1
        for j in range(ncols):
            if allowed[j] and obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return True
        best = None
        leave = -1
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return False
        _pivot(T, leave, enter)
        f = obj[enter]
        if f != 0:
            row = T[leave]
            obj[:] = [a - f * b for a, b in zip(obj, row)]
        basis[leave] = enter


def lp_solve(cons, variables, lb=None, ub=None, minimise_sum=True):
    """Rational relaxation of ``le`` rows under the given bounds.

    Returns ``None`` if infeasible, else a dict of rational values.  Each
    variable is mapped to nonnegative columns: shifted by its lower bound,
    mirrored at its upper bound, or split in two when free.  Minimising the
    sum of columns keeps the problem bounded.
    """
    lb = lb or {}
    ub = ub or {}
    cols = []  # per variable: list of (column, sign); value = offset + sum sign*col
    offset = {}
    ncol = 0
    extra_rows = []
    for v in variables:
        l, u = lb.get(v, 0), ub.get(v)
        if l is not None:
            cols.append([(ncol, 1)])
            offset[v] = l
            if u is not None:
                if u < l:
                    return None
                extra_rows.append(({ncol: 1}, u - l))
            ncol += 1
        elif u is not None:
            cols.append([(ncol, -1)])
            offset[v] = u
            ncol += 1
        else:
            cols.append([(ncol, 1), (ncol + 1, -1)])
            offset[v] = 0
            ncol += 2
    vidx = {v: i for i, v in enumerate(variables)}
    rows = []
    for cs, _, rhs in cons:
        r = {}
        shift = 0
        for v, c in cs.items():
            i = vidx[v]
            shift += c * offset[v]
            for col, sgn in cols[i]:
                r[col] = r.get(col, 0) + c * sgn
        rows.append((r, rhs - shift))
    rows.extend(extra_rows)
    m = len(rows)
    n = ncol
    # layout: structural | slack (one per row) | artificial
    nbase = n + m
    T, basis, art = [], [], []
    zero = Q(0)
    for i, (r, rhs) in enumerate(rows):
        line = [zero] * nbase
        for j, c in r.items():
            if c:
                line[j] = Q(c)
        line[n + i] = Q(1)
        rq = Q(rhs)
        if rq < 0:
            line = [-x for x in line]
            rq = -rq
            art.append(i)
            basis.append(None)
        else:
            basis.append(n + i)
        line.append(rq)
        T.append(line)
    na = len(art)
    ncols = nbase + na
    if na:
        for row in T:
            rhs = row.pop()
            row.extend([zero] * na)
            row.append(rhs)
        for k, i in enumerate(art):
            T[i][nbase + k] = Q(1)
            basis[i] = nbase + k
        obj = [zero] * (ncols + 1)
        for i in art:
            obj = [a - b for a, b in zip(obj, T[i])]
        for k in range(na):
            obj[nbase + k] = zero
        allowed = [True] * ncols
        _simplex(T, basis, obj, ncols, allowed)
        if obj[-1] != 0:
            return None
        for i in range(len(T)):
            if basis[i] >= nbase:
                row = T[i]
                for j in range(nbase):
                    if row[j] != 0:
                        _pivot(T, i, j)
                        basis[i] = j
                        break
        keep = [i for i in range(len(T)) if basis[i] < nbase]
        T = [T[i] for i in keep]
        basis = [basis[i] for i in keep]
        allowed = [j < nbase for j in range(ncols)]
    else:
        allowed = [True] * ncols
    if minimise_sum and n:
        obj = [zero] * (ncols + 1)
        for j in range(n):
            obj[j] = Q(1)
        for i, b in enumerate(basis):
            f = obj[b]
            if f != 0:
                obj = [a - f * x for a, x in zip(obj, T[i])]
        _simplex(T, basis, obj, ncols, allowed)
    colval = [zero] * ncols
    for i, b in enumerate(basis):
        colval[b] = T[i][-1]
    out = {}
    for v, i in vidx.items():
        out[v] = offset[v] + sum((colval[c] * s for c, s in cols[i]), zero)
    return out


# ---------------------------------------------------------------------------
# branch and bound


def _check(cons, model) -> bool:
    for cs, kind, rhs in cons:
        s = sum(c * model[v] for v, c in cs.items())
        if s > rhs if kind == "le" else s != rhs:
            return False
    return True


def ilp_solve(cons, variables=(), free=(), node_cap: int = 4000, ub_all: int | None = None):
    """Integer feasibility by equality elimination plus branch and bound.

    Returns ``(status, model)``.  ``UNKNOWN`` is reported only when the node
    budget is exhausted.  ``ub_all`` optionally boxes every original variable.
    """
    original = sorted(set(variables) | {v for cs, _, _ in cons for v in cs})
    cons0 = [(dict(cs), k, r) for cs, k, r in cons]
    if ub_all is not None:
        cons0 += [({v: 1}, "le", ub_all) for v in original if v not in free]
    red = eliminate_equalities(cons0, set(free))
    if red is None:
        return UNSAT, None
    ineqs, subs, free_all = red
    live = sorted({v for cs, _, _ in ineqs for v in cs})
    lb = {v: (None if v in free_all else 0) for v in live}
    ub = {v: None for v in live}
    if not propagate(ineqs, lb, ub):
        return UNSAT, None
    budget = [node_cap]
    try:
        model = _bb(ineqs, live, lb, ub, budget)
    except NodeCap:
        return UNKNOWN, None
    if model is None:
        return UNSAT, None
    full = recover(model, subs)
    out = {v: int(full.get(v, 0)) for v in original}
    if not _check(cons0, out):  # pragma: no cover - internal consistency
        raise AssertionError("branch and bound produced an invalid model")
    if any(out[v] < 0 for v in original if v not in free):  # pragma: no cover
        raise AssertionError("negative value for a natural variable")
    return SAT, out


def _bb(cons, variables, lb, ub, budget):
    stack = [(lb, ub)]
    while stack:
        lb, ub = stack.pop()
        budget[0] -= 1
        if budget[0] < 0:
            raise NodeCap()
        lb = dict(lb)
        ub = dict(ub)
        if not propagate(cons, lb, ub):
            continue
        if all(lb[v] is not None and lb[v] == ub[v] for v in variables):
            model = {v: lb[v] for v in variables}
            if _check(cons, model):
                return model
            continue
        sol = lp_solve(cons, variables, lb, ub)
        if sol is None:
            continue
        frac = next((v for v in variables if sol[v].denominator != 1), None)
        if frac is None:
            return {v: int(sol[v]) for v in variables}
        fl = floor(sol[frac])
        hi_lb = dict(lb)
        hi_lb[frac] = fl + 1
        if ub[frac] is None or fl + 1 <= ub[frac]:
            stack.append((hi_lb, ub))
        lo_ub = dict(ub)
        lo_ub[frac] = fl
        if lb[frac] is None or fl >= lb[frac]:
            stack.append((lb, lo_ub))
    return None


def lp_feasible(cons) -> bool:
    """Rational relaxation test over the naturals (sound for pruning)."""
    cons = normalise(cons)
    if cons is None:
        return False
    rows = []
    for cs, kind, rhs in cons:
        rows.append((cs, "le", rhs))
        if kind == "eq":
            rows.append(({v: -c for v, c in cs.items()}, "le", -rhs))
    variables = sorted({v for cs, _, _ in rows for v in cs})
    lb = {v: 0 for v in variables}
    ub = {v: None for v in variables}
    if not propagate(rows, lb, ub):
        return False
    return lp_solve(rows, variables, lb, ub, minimise_sum=False) is not None
