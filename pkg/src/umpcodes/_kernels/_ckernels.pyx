# cython: language_level=3
"""Compiled trellis and SCL kernels; contracts match ``_pykernels``."""

import numpy as np

from libc.math cimport INFINITY, exp, fabs, log1p
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc, qsort
from libc.string cimport memcpy

NAME = "cython"


cdef inline double _lse(double a, double b) noexcept nogil:
    cdef double t
    if a < b:
        t = a
        a = b
        b = t
    if a == -INFINITY:
        return -INFINITY
    return a + log1p(exp(b - a))


cdef inline void _label_metrics(const double* y, int n_out, double* lm) noexcept nogil:
    cdef int lab, j
    cdef double acc
    for lab in range(1 << n_out):
        acc = 0.0
        for j in range(n_out):
            if (lab >> j) & 1:
                acc -= y[j]
            else:
                acc += y[j]
        lm[lab] = acc


def viterbi(ysec, labels, int k):
    cdef double[:, :, ::1] y = np.ascontiguousarray(ysec, dtype=np.float64)
    cdef int64_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t B = y.shape[0]
    cdef int S = <int>y.shape[1]
    cdef int n_out = <int>y.shape[2]
    cdef int ns = <int>lab.shape[0]
    cdef int nu = ns.bit_length() - 1
    cdef int mask = ns - 1

    bits_arr = np.zeros((B, S * n_out), dtype=np.uint8)
    metric_arr = np.zeros(B, dtype=np.float64)
    msg_arr = np.zeros((B, k), dtype=np.uint8)
    cdef uint8_t[:, ::1] bits = bits_arr
    cdef double[::1] metric = metric_arr
    cdef uint8_t[:, ::1] msg = msg_arr

    cdef double* M = <double*>malloc(ns * sizeof(double))
    cdef double* Mn = <double*>malloc(ns * sizeof(double))
    cdef double* lm = <double*>malloc((1 << n_out) * sizeof(double))
    cdef uint8_t* dec = <uint8_t*>malloc(S * ns * sizeof(uint8_t))
    cdef double* tmp
    cdef Py_ssize_t b
    cdef int t, s, u, p0, p1, prev, lb, j
    cdef double c0, c1
    if M == NULL or Mn == NULL or lm == NULL or dec == NULL:
        free(M); free(Mn); free(lm); free(dec)
        raise MemoryError()
    try:
        with nogil:
            for b in range(B):
                for s in range(ns):
                    M[s] = -INFINITY
                M[0] = 0.0
                for t in range(S):
                    _label_metrics(&y[b, t, 0], n_out, lm)
                    for s in range(ns):
                        u = s >> (nu - 1)
                        p0 = (s << 1) & mask
                        p1 = p0 | 1
                        if t >= k and u:
                            Mn[s] = -INFINITY
                            dec[t * ns + s] = 0
                            continue
                        c0 = M[p0] + lm[lab[p0, u]]
                        c1 = M[p1] + lm[lab[p1, u]]
                        if c1 > c0:
                            Mn[s] = c1
                            dec[t * ns + s] = 1
                        else:
                            Mn[s] = c0
                            dec[t * ns + s] = 0
                    tmp = M
                    M = Mn
                    Mn = tmp
                metric[b] = M[0]
                s = 0
                for t in range(S - 1, -1, -1):
                    u = s >> (nu - 1)
                    prev = ((s << 1) & mask) | dec[t * ns + s]
                    lb = <int>lab[prev, u]
                    for j in range(n_out):
                        bits[b, t * n_out + j] = (lb >> j) & 1
                    if t < k:
                        msg[b, t] = u
                    s = prev
    finally:
        free(M); free(Mn); free(lm); free(dec)
    return bits_arr, metric_arr, msg_arr


def forward(ysec, labels, int k):
    cdef double[:, :, ::1] y = np.ascontiguousarray(ysec, dtype=np.float64)
    cdef int64_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t B = y.shape[0]
    cdef int S = <int>y.shape[1]
    cdef int n_out = <int>y.shape[2]
    cdef int ns = <int>lab.shape[0]
    cdef int nu = ns.bit_length() - 1
    cdef int mask = ns - 1

    out_arr = np.zeros(B, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* M = <double*>malloc(ns * sizeof(double))
    cdef double* Mn = <double*>malloc(ns * sizeof(double))
    cdef double* lm = <double*>malloc((1 << n_out) * sizeof(double))
    cdef double* tmp
    cdef Py_ssize_t b
    cdef int t, s, u, p0, p1
    if M == NULL or Mn == NULL or lm == NULL:
        free(M); free(Mn); free(lm)
        raise MemoryError()
    try:
        with nogil:
            for b in range(B):
                for s in range(ns):
                    M[s] = -INFINITY
                M[0] = 0.0
                for t in range(S):
                    _label_metrics(&y[b, t, 0], n_out, lm)
                    for s in range(ns):
                        u = s >> (nu - 1)
                        if t >= k and u:
                            Mn[s] = -INFINITY
                            continue
                        p0 = (s << 1) & mask
                        p1 = p0 | 1
                        Mn[s] = _lse(M[p0] + lm[lab[p0, u]], M[p1] + lm[lab[p1, u]])
                    tmp = M
                    M = Mn
                    Mn = tmp
                out[b] = M[0]
    finally:
        free(M); free(Mn); free(lm)
    return out_arr


ctypedef struct Cand:
    double m
    int idx


cdef int _cmp_cand(const void* a, const void* b) noexcept nogil:
    cdef const Cand* ca = <const Cand*>a
    cdef const Cand* cb = <const Cand*>b
    if ca.m < cb.m:
        return -1
    if ca.m > cb.m:
        return 1
    return ca.idx - cb.idx


cdef double _leaf_llr(double* a, const uint8_t* beta, const double* chan, int i,
                      int n, int m, const int* off) noexcept nogil:
    cdef int start, d, half, j, tz
    cdef const double* par
    cdef double* child
    cdef const uint8_t* bl
    cdef double x, z, mag
    if i == 0:
        start = 0
    else:
        tz = 0
        while not ((i >> tz) & 1):
            tz += 1
        start = m - 1 - tz
        half = n >> (start + 1)
        par = chan if start == 0 else a + off[start]
        child = a + off[start + 1]
        bl = beta + off[start + 1]
        for j in range(half):
            if bl[j]:
                child[j] = par[j + half] - par[j]
            else:
                child[j] = par[j + half] + par[j]
        start += 1
    for d in range(start, m):
        half = n >> (d + 1)
        par = chan if d == 0 else a + off[d]
        child = a + off[d + 1]
        for j in range(half):
            x = par[j]
            z = par[j + half]
            mag = fabs(x) if fabs(x) < fabs(z) else fabs(z)
            child[j] = -mag if ((x < 0) != (z < 0)) else mag
    return a[off[m]]


cdef void _combine(uint8_t* beta, int i, uint8_t bit, int m, const int* off,
                   uint8_t* xa, uint8_t* xb) noexcept nogil:
    cdef int d = m
    cdef int idx = i
    cdef int ln = 1
    cdef int j
    cdef uint8_t* cur = xa
    cdef uint8_t* nxt = xb
    cdef uint8_t* tmp
    cdef const uint8_t* bl
    cur[0] = bit
    while d > 0 and (idx & 1):
        bl = beta + off[d]
        for j in range(ln):
            nxt[j] = bl[j] ^ cur[j]
            nxt[j + ln] = cur[j]
        tmp = cur
        cur = nxt
        nxt = tmp
        ln *= 2
        d -= 1
        idx >>= 1
    if d > 0:
        memcpy(beta + off[d], cur, ln)


def scl(llr, frozen, synd_mask, int list_size):
    cdef double[:, ::1] ch = np.ascontiguousarray(np.atleast_2d(llr), dtype=np.float64)
    cdef uint8_t[::1] fz = np.ascontiguousarray(frozen, dtype=np.uint8)
    cdef uint64_t[::1] sm = np.ascontiguousarray(synd_mask, dtype=np.uint64)
    cdef Py_ssize_t B = ch.shape[0]
    cdef int n = <int>ch.shape[1]
    cdef int m = n.bit_length() - 1
    cdef int L = list_size
    cdef int A = n - 1
    if (1 << m) != n or n < 2:
        raise ValueError("block length must be a power of two >= 2")
    if L < 1:
        raise ValueError("list size must be positive")

    u_out_arr = np.zeros((B, n), dtype=np.uint8)
    ok_arr = np.zeros(B, dtype=np.uint8)
    cdef uint8_t[:, ::1] u_out = u_out_arr
    cdef uint8_t[::1] ok = ok_arr

    cdef int off[64]
    cdef int d
    off[1] = 0
    for d in range(1, m + 1):
        off[d + 1] = off[d] + (n >> d)

    cdef double* alpha0 = <double*>malloc(L * A * sizeof(double))
    cdef double* alpha1 = <double*>malloc(L * A * sizeof(double))
    cdef uint8_t* beta0 = <uint8_t*>malloc(L * A)
    cdef uint8_t* beta1 = <uint8_t*>malloc(L * A)
    cdef uint8_t* ub0 = <uint8_t*>malloc(L * n)
    cdef uint8_t* ub1 = <uint8_t*>malloc(L * n)
    cdef uint64_t* sy0 = <uint64_t*>malloc(L * sizeof(uint64_t))
    cdef uint64_t* sy1 = <uint64_t*>malloc(L * sizeof(uint64_t))
    cdef double* pm0 = <double*>malloc(L * sizeof(double))
    cdef double* pm1 = <double*>malloc(L * sizeof(double))
    cdef double* leaf = <double*>malloc(L * sizeof(double))
    cdef Cand* cand = <Cand*>malloc(2 * L * sizeof(Cand))
    cdef uint8_t* xa = <uint8_t*>malloc(n)
    cdef uint8_t* xb = <uint8_t*>malloc(n)

    cdef double *a_cur, *a_nxt, *p_cur, *p_nxt, *dtmp
    cdef uint8_t *b_cur, *b_nxt, *u_cur, *u_nxt, *btmp
    cdef uint64_t *s_cur, *s_nxt, *stmp
    cdef Py_ssize_t b
    cdef int i, p, j, np_, nc, newn, pi, bit, h, st, best
    cdef double l, corr, best_corr
    cdef const double* chan

    if (alpha0 == NULL or alpha1 == NULL or beta0 == NULL or beta1 == NULL
            or ub0 == NULL or ub1 == NULL or sy0 == NULL or sy1 == NULL
            or pm0 == NULL or pm1 == NULL or leaf == NULL or cand == NULL
            or xa == NULL or xb == NULL):
        free(alpha0); free(alpha1); free(beta0); free(beta1); free(ub0); free(ub1)
        free(sy0); free(sy1); free(pm0); free(pm1); free(leaf); free(cand); free(xa); free(xb)
        raise MemoryError()
    try:
        with nogil:
            for b in range(B):
                chan = &ch[b, 0]
                a_cur = alpha0; a_nxt = alpha1
                b_cur = beta0; b_nxt = beta1
                u_cur = ub0; u_nxt = ub1
                s_cur = sy0; s_nxt = sy1
                p_cur = pm0; p_nxt = pm1
                np_ = 1
                p_cur[0] = 0.0
                s_cur[0] = 0
                for i in range(n):
                    for p in range(np_):
                        leaf[p] = _leaf_llr(a_cur + p * A, b_cur + p * A, chan, i, n, m, off)
                    if fz[i]:
                        for p in range(np_):
                            if leaf[p] < 0:
                                p_cur[p] += -leaf[p]
                            u_cur[p * n + i] = 0
                            _combine(b_cur + p * A, i, 0, m, off, xa, xb)
                        continue
                    nc = 2 * np_
                    for p in range(np_):
                        l = leaf[p]
                        cand[2 * p].m = p_cur[p] + (-l if l < 0 else 0.0)
                        cand[2 * p].idx = 2 * p
                        cand[2 * p + 1].m = p_cur[p] + (l if l > 0 else 0.0)
                        cand[2 * p + 1].idx = 2 * p + 1
                    qsort(cand, nc, sizeof(Cand), _cmp_cand)
                    newn = nc if nc < L else L
                    for j in range(newn):
                        pi = cand[j].idx >> 1
                        bit = cand[j].idx & 1
                        memcpy(a_nxt + j * A, a_cur + pi * A, A * sizeof(double))
                        memcpy(b_nxt + j * A, b_cur + pi * A, A)
                        memcpy(u_nxt + j * n, u_cur + pi * n, n)
                        s_nxt[j] = s_cur[pi]
                        if bit:
                            s_nxt[j] ^= sm[i]
                        p_nxt[j] = cand[j].m
                        u_nxt[j * n + i] = <uint8_t>bit
                        _combine(b_nxt + j * A, i, <uint8_t>bit, m, off, xa, xb)
                    dtmp = a_cur; a_cur = a_nxt; a_nxt = dtmp
                    btmp = b_cur; b_cur = b_nxt; b_nxt = btmp
                    btmp = u_cur; u_cur = u_nxt; u_nxt = btmp
                    stmp = s_cur; s_cur = s_nxt; s_nxt = stmp
                    dtmp = p_cur; p_cur = p_nxt; p_nxt = dtmp
                    np_ = newn

                best = -1
                best_corr = -INFINITY
                for p in range(np_):
                    if s_cur[p] != 0:
                        continue
                    memcpy(xa, u_cur + p * n, n)
                    h = 1
                    while h < n:
                        st = 0
                        while st < n:
                            for j in range(st, st + h):
                                xa[j] ^= xa[j + h]
                            st += 2 * h
                        h *= 2
                    corr = 0.0
                    for j in range(n):
                        if xa[j]:
                            corr -= chan[j]
                        else:
                            corr += chan[j]
                    if corr > best_corr:
                        best_corr = corr
                        best = p
                if best >= 0:
                    ok[b] = 1
                    memcpy(&u_out[b, 0], u_cur + best * n, n)
    finally:
        free(alpha0); free(alpha1); free(beta0); free(beta1); free(ub0); free(ub1)
        free(sy0); free(sy1); free(pm0); free(pm1); free(leaf); free(cand); free(xa); free(xb)
    return u_out_arr, ok_arr
