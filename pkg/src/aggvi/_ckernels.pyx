# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Bellman sweep kernels.

Summation order matches ``_pykernels`` term for term so both backends
produce bit-identical doubles.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def bellman_sweep(const cnp.int64_t[::1] state_ptr,
                  const cnp.int64_t[::1] row_ptr,
                  const cnp.int64_t[::1] col,
                  const double[::1] prob,
                  const double[::1] cost,
                  double alpha,
                  const double[::1] J,
                  double[::1] out,
                  cnp.int64_t[::1] best):
    cdef Py_ssize_t n = state_ptr.shape[0] - 1
    cdef Py_ssize_t i, a, e, arg
    cdef double acc, v
    with nogil:
        for i in range(n):
            arg = state_ptr[i]
            v = 0.0
            for a in range(state_ptr[i], state_ptr[i + 1]):
                acc = 0.0
                for e in range(row_ptr[a], row_ptr[a + 1]):
                    acc = acc + prob[e] * (cost[e] + alpha * J[col[e]])
                if a == state_ptr[i] or acc < v:
                    v = acc
                    arg = a
            out[i] = v
            best[i] = arg


def gauss_seidel_sweep(const cnp.int64_t[::1] state_ptr,
                       const cnp.int64_t[::1] row_ptr,
                       const cnp.int64_t[::1] target,
                       const double[::1] prob,
                       const double[::1] cost,
                       double alpha,
                       double[::1] V,
                       const double[::1] r):
    cdef Py_ssize_t n = state_ptr.shape[0] - 1
    cdef Py_ssize_t i, a, e, t
    cdef double acc, v, nxt, delta, worst = 0.0
    with nogil:
        for i in range(n):
            v = 0.0
            for a in range(state_ptr[i], state_ptr[i + 1]):
                acc = 0.0
                for e in range(row_ptr[a], row_ptr[a + 1]):
                    t = target[e]
                    if t >= 0:
                        nxt = V[t]
                    else:
                        nxt = r[-t - 1]
                    acc = acc + prob[e] * (cost[e] + alpha * nxt)
                if a == state_ptr[i] or acc < v:
                    v = acc
            delta = v - V[i]
            if delta < 0:
                delta = -delta
            if delta > worst:
                worst = delta
            V[i] = v
    return worst
