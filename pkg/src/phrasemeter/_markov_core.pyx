# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernel for masked Markov-chain marginals.

Walks every completion of the masked positions with an odometer and
accumulates a running log-sum-exp of the chain log-probability.  Only the
terms adjacent to a masked position are recomputed per completion.
"""

from libc.math cimport exp, log, log1p, INFINITY

import numpy as np

BACKEND = "cython"


cdef inline double logaddexp(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        a, b = b, a
    return a + log1p(exp(b - a))


def masked_logmarginal(double[::1] log_init, double[:, ::1] log_trans,
                       long[::1] ids, long[::1] masked):
    """log sum over completions of masked positions of the chain log-prob."""
    cdef Py_ssize_t V = log_init.shape[0]
    cdef Py_ssize_t L = ids.shape[0]
    cdef Py_ssize_t m = masked.shape[0]
    cdef Py_ssize_t i, t, j
    cdef double fixed = 0.0
    cdef double acc = -INFINITY
    cdef double val

    work = np.asarray(ids).copy()
    cdef long[::1] w = work
    is_masked = np.zeros(L, dtype=np.uint8)
    cdef unsigned char[::1] mk = is_masked
    for j in range(m):
        mk[masked[j]] = 1

    # terms untouched by any masked position are constant across completions
    vary = []
    for t in range(L):
        if mk[t] or (t > 0 and mk[t - 1]):
            vary.append(t)
        elif t == 0:
            fixed += log_init[ids[0]]
        else:
            fixed += log_trans[ids[t - 1], ids[t]]
    vary_arr = np.asarray(vary, dtype=np.int64)
    cdef long[::1] vr = vary_arr
    cdef Py_ssize_t nvary = vr.shape[0]

    if m == 0:
        for i in range(nvary):
            t = vr[i]
            if t == 0:
                fixed += log_init[w[0]]
            else:
                fixed += log_trans[w[t - 1], w[t]]
        return fixed

    digits = np.zeros(m, dtype=np.int64)
    cdef long[::1] dg = digits
    for j in range(m):
        w[masked[j]] = 0

    cdef bint done = False
    while not done:
        val = 0.0
        for i in range(nvary):
            t = vr[i]
            if t == 0:
                val += log_init[w[0]]
            else:
                val += log_trans[w[t - 1], w[t]]
        acc = logaddexp(acc, val)
        # odometer increment over the masked positions
        j = m - 1
        while True:
            dg[j] += 1
            if dg[j] < V:
                w[masked[j]] = dg[j]
                break
            dg[j] = 0
            w[masked[j]] = 0
            j -= 1
            if j < 0:
                done = True
                break
    return fixed + acc
