# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled second-order jet chain rule.

Rows of ``z`` follow the jet layout: value, ``dim`` first derivatives, then the
upper-triangular Hessian entries ``(0,0), (0,1), ..., (dim-1,dim-1)``.
"""
import numpy as np

cdef int MAXDIM = 3


cdef int _pairs(int dim, int* pi, int* pj):
    cdef int i, j, h = 0
    for i in range(dim):
        for j in range(i, dim):
            pi[h] = i
            pj[h] = j
            h += 1
    return h


def chain_forward(const double[:, ::1] z, const double[::1] h0,
                  const double[::1] h1, const double[::1] h2,
                  int dim, int order):
    cdef Py_ssize_t m, M = z.shape[1]
    cdef Py_ssize_t K = z.shape[0]
    cdef int i, h, nh = 0
    cdef int pi[6]
    cdef int pj[6]
    cdef double a, b
    if dim > MAXDIM:
        raise ValueError("dim > 3 not supported")
    if order >= 2:
        nh = _pairs(dim, pi, pj)
    out_arr = np.empty((K, M), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for m in range(M):
        a = h1[m]
        out[0, m] = h0[m]
        if order >= 1:
            for i in range(dim):
                out[1 + i, m] = a * z[1 + i, m]
        if order >= 2:
            b = h2[m]
            for h in range(nh):
                out[1 + dim + h, m] = (b * z[1 + pi[h], m] * z[1 + pj[h], m]
                                       + a * z[1 + dim + h, m])
    return out_arr


def chain_backward(const double[:, ::1] z, const double[::1] h1,
                   const double[::1] h2, const double[::1] h3,
                   const double[:, ::1] g, int dim, int order):
    cdef Py_ssize_t m, M = z.shape[1]
    cdef Py_ssize_t K = z.shape[0]
    cdef int i, h, p, q, nh = 0
    cdef int pi[6]
    cdef int pj[6]
    cdef double a, b, c, acc, gh, zp, zq
    cdef double gi[3]
    if dim > MAXDIM:
        raise ValueError("dim > 3 not supported")
    if order >= 2:
        nh = _pairs(dim, pi, pj)
    out_arr = np.empty((K, M), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for m in range(M):
        a = h1[m]
        acc = g[0, m] * a
        if order >= 1:
            b = h2[m]
            for i in range(dim):
                acc += g[1 + i, m] * b * z[1 + i, m]
                gi[i] = g[1 + i, m] * a
            if order >= 2:
                c = h3[m]
                for h in range(nh):
                    p = pi[h]
                    q = pj[h]
                    gh = g[1 + dim + h, m]
                    zp = z[1 + p, m]
                    zq = z[1 + q, m]
                    acc += gh * (c * zp * zq + b * z[1 + dim + h, m])
                    gi[p] += gh * b * zq
                    gi[q] += gh * b * zp
                    out[1 + dim + h, m] = gh * a
            for i in range(dim):
                out[1 + i, m] = gi[i]
        out[0, m] = acc
    return out_arr
