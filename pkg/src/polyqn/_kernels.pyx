# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Typed-loop versions of the hot operations: sparse monomial evaluation,
Jacobian assembly by the product rule, and the O(n^2) matrix/vector
primitives behind the rank-one updates.  Mirrors ``polyqn._kernels_py``;
see that module for the argument conventions.
"""

import numpy as np


def eval_terms(const Py_ssize_t[::1] rows, const Py_ssize_t[:, ::1] varmat,
               const double[::1] coeffs, const double[::1] x):
    cdef Py_ssize_t nk = rows.shape[0]
    cdef Py_ssize_t m = varmat.shape[1]
    out_arr = np.zeros(x.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, s
    cdef double prod
    for k in range(nk):
        prod = coeffs[k]
        for s in range(m):
            prod *= x[varmat[k, s]]
        out[rows[k]] += prod
    return out_arr


def jac_terms(const Py_ssize_t[::1] rows, const Py_ssize_t[:, ::1] varmat,
              const double[::1] coeffs, const double[::1] x,
              double[:, ::1] jac):
    cdef Py_ssize_t nk = rows.shape[0]
    cdef Py_ssize_t m = varmat.shape[1]
    cdef Py_ssize_t k, t, s
    cdef double prod
    for k in range(nk):
        for t in range(m):
            prod = coeffs[k]
            for s in range(m):
                if s != t:
                    prod *= x[varmat[k, s]]
            jac[rows[k], varmat[k, t]] += prod


def matvec(const double[:, ::1] a, const double[::1] v):
    cdef Py_ssize_t nr = a.shape[0], nc = a.shape[1]
    out_arr = np.empty(nr)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(nr):
        acc = 0.0
        for j in range(nc):
            acc += a[i, j] * v[j]
        out[i] = acc
    return out_arr


def vecmat(const double[::1] v, const double[:, ::1] a):
    cdef Py_ssize_t nr = a.shape[0], nc = a.shape[1]
    out_arr = np.zeros(nc)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double vi
    for i in range(nr):
        vi = v[i]
        for j in range(nc):
            out[j] += vi * a[i, j]
    return out_arr


def vdot(const double[::1] u, const double[::1] v):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += u[i] * v[i]
    return acc


def add_scaled_outer(const double[:, ::1] a, double alpha,
                     const double[::1] u, const double[::1] v):
    cdef Py_ssize_t nr = a.shape[0], nc = a.shape[1]
    out_arr = np.empty((nr, nc))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double ui
    for i in range(nr):
        ui = alpha * u[i]
        for j in range(nc):
            out[i, j] = a[i, j] + ui * v[j]
    return out_arr
