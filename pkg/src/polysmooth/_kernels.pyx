# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference implementations."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def wachspress_values(double[:, ::1] normals, double[::1] offsets,
                      long[:, ::1] vertex_facets, double[::1] vertex_const,
                      double[:, ::1] points, double scale):
    cdef Py_ssize_t p = points.shape[0], m = normals.shape[0]
    cdef Py_ssize_t n = vertex_facets.shape[0], k = vertex_facets.shape[1]
    cdef Py_ssize_t d = normals.shape[1]
    cdef Py_ssize_t a, f, v, i, j
    cdef double s, prod, total
    out_arr = np.empty((p, n))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] h = np.empty(m)
    cdef char[:, ::1] away = np.ones((n, m), dtype=np.int8)
    for v in range(n):
        for j in range(k):
            away[v, vertex_facets[v, j]] = 0
    for a in range(p):
        for f in range(m):
            s = offsets[f]
            for i in range(d):
                s -= points[a, i] * normals[f, i]
            h[f] = s / scale
        total = 0.0
        for v in range(n):
            prod = vertex_const[v]
            for f in range(m):
                if away[v, f]:
                    prod *= h[f]
            out[a, v] = prod
            total += prod
        for v in range(n):
            out[a, v] /= total
    return out_arr


def wachspress_derivatives(double[:, ::1] normals, double[::1] offsets,
                           long[:, ::1] vertex_facets, double[::1] vertex_const,
                           double[:, ::1] points):
    cdef Py_ssize_t p = points.shape[0], m = normals.shape[0]
    cdef Py_ssize_t n = vertex_facets.shape[0], k = vertex_facets.shape[1]
    cdef Py_ssize_t d = normals.shape[1]
    cdef Py_ssize_t a, f, v, i, j, l
    cdef double s, hmax, prod, total, c
    phi_arr = np.empty((p, n))
    grad_arr = np.empty((p, n, d))
    hess_arr = np.zeros((p, n, d, d))
    cdef double[:, ::1] phi = phi_arr
    cdef double[:, :, ::1] grad = grad_arr
    cdef double[:, :, :, ::1] hess = hess_arr
    cdef double[::1] h = np.empty(m)
    cdef double[::1] sf = np.empty(m)
    cdef double[::1] tf = np.empty(m)
    cdef double[:, ::1] pf = np.empty((m, d))
    cdef double[:, ::1] D = np.empty((n, d))
    cdef double[:, ::1] M = np.empty((d, d))
    cdef char[:, ::1] on = np.zeros((n, m), dtype=np.int8)
    for v in range(n):
        for l in range(k):
            on[v, vertex_facets[v, l]] = 1
    for a in range(p):
        hmax = 0.0
        for f in range(m):
            s = offsets[f]
            for i in range(d):
                s -= points[a, i] * normals[f, i]
            h[f] = s
            if s > hmax:
                hmax = s
            for i in range(d):
                pf[f, i] = normals[f, i] / s
        total = 0.0
        for v in range(n):
            prod = vertex_const[v]
            for f in range(m):
                if not on[v, f]:
                    prod *= h[f] / hmax
            phi[a, v] = prod
            total += prod
        for v in range(n):
            phi[a, v] /= total
        for f in range(m):
            sf[f] = 0.0
            tf[f] = 0.0
        for v in range(n):
            for f in range(m):
                if on[v, f]:
                    sf[f] += phi[a, v]
                else:
                    tf[f] += phi[a, v]
        for i in range(d):
            for j in range(d):
                M[i, j] = 0.0
        for v in range(n):
            for i in range(d):
                D[v, i] = 0.0
            for f in range(m):
                c = tf[f] if on[v, f] else -sf[f]
                for i in range(d):
                    D[v, i] += c * pf[f, i]
                    for j in range(d):
                        hess[a, v, i, j] += c * pf[f, i] * pf[f, j]
            for i in range(d):
                grad[a, v, i] = phi[a, v] * D[v, i]
                for j in range(d):
                    hess[a, v, i, j] += D[v, i] * D[v, j]
                    M[i, j] += phi[a, v] * D[v, i] * D[v, j]
        for v in range(n):
            for i in range(d):
                for j in range(d):
                    hess[a, v, i, j] = phi[a, v] * (hess[a, v, i, j] - M[i, j])
    return phi_arr, grad_arr, hess_arr
