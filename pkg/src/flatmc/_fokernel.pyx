# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled evaluator for FO programs; same contract as ``_fo_py.eval_program``."""

from libc.stdlib cimport malloc, free


cdef struct Prog:
    int *op
    int *a
    int *b
    long long *c
    unsigned long long *fmask
    unsigned char *tab
    int nletters
    int *pre
    int *per
    long long U
    long long P
    long long *env


cdef inline int letter(Prog *p, long long i) nogil:
    if i < p.U:
        return p.pre[i]
    return p.per[(i - p.U) % p.P]


cdef int ev(Prog *p, int k) nogil:
    cdef int o = p.op[k]
    cdef int slot
    cdef unsigned long long mask
    cdef long long top, lo, base, end, i, saved
    cdef int s
    if o == 2:
        return p.tab[p.a[k] * p.nletters + letter(p, p.env[p.b[k]])]
    if o == 7:
        return ev(p, p.a[k]) and ev(p, p.b[k])
    if o == 6:
        return not ev(p, p.a[k])
    if o == 9:
        slot = p.a[k]
        mask = p.fmask[k]
        top = -1
        s = 0
        while mask:
            if (mask & 1) and p.env[s] > top:
                top = p.env[s]
            mask >>= 1
            s += 1
        lo = p.U if top + 1 < p.U else top + 1
        base = lo + ((p.U - lo) % p.P + p.P) % p.P
        end = base + p.P * p.c[k]
        saved = p.env[slot]
        i = 0
        while i < end:
            p.env[slot] = i
            if ev(p, p.b[k]):
                p.env[slot] = saved
                return 1
            i += 1
        p.env[slot] = saved
        return 0
    if o == 8:
        return ev(p, p.a[k]) or ev(p, p.b[k])
    if o == 4:
        return p.env[p.a[k]] < p.env[p.b[k]]
    if o == 3:
        return p.env[p.b[k]] == p.env[p.a[k]] + 1
    if o == 5:
        return p.env[p.a[k]] == p.env[p.b[k]]
    if o == 0:
        return 1
    return 0


def eval_program(op, a, b, c, fmask, pred_tab, int nletters, pre_ids, per_ids, int root, int nslots):
    cdef Py_ssize_t n = len(op)
    cdef Py_ssize_t i
    cdef Prog p
    cdef int res
    p.op = <int *>malloc(max(n, 1) * sizeof(int))
    p.a = <int *>malloc(max(n, 1) * sizeof(int))
    p.b = <int *>malloc(max(n, 1) * sizeof(int))
    p.c = <long long *>malloc(max(n, 1) * sizeof(long long))
    p.fmask = <unsigned long long *>malloc(max(n, 1) * sizeof(unsigned long long))
    p.tab = <unsigned char *>malloc(max(len(pred_tab), 1))
    p.pre = <int *>malloc(max(len(pre_ids), 1) * sizeof(int))
    p.per = <int *>malloc(max(len(per_ids), 1) * sizeof(int))
    p.env = <long long *>malloc(max(nslots, 1) * sizeof(long long))
    try:
        for i in range(n):
            p.op[i] = op[i]
            p.a[i] = a[i]
            p.b[i] = b[i]
            p.c[i] = c[i]
            p.fmask[i] = fmask[i]
        for i in range(len(pred_tab)):
            p.tab[i] = 1 if pred_tab[i] else 0
        for i in range(len(pre_ids)):
            p.pre[i] = pre_ids[i]
        for i in range(len(per_ids)):
            p.per[i] = per_ids[i]
        for i in range(max(nslots, 1)):
            p.env[i] = 0
        p.nletters = nletters
        p.U = len(pre_ids)
        p.P = len(per_ids)
        with nogil:
            res = ev(&p, root)
        return bool(res)
    finally:
        free(p.op)
        free(p.a)
        free(p.b)
        free(p.c)
        free(p.fmask)
        free(p.tab)
        free(p.pre)
        free(p.per)
        free(p.env)
