# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Dykstra projection sweeps, Hungarian LAP, pairwise shrinkage.

Each function has the same signature and results as its twin in
``glag._fallback``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY

cnp.import_array()


def ds_project(double[:, ::1] X0, double[:, ::1] dual, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t p = X0.shape[0]
    cdef Py_ssize_t i, j, it = 0
    cdef double z, shift, residual = INFINITY, inv_p = 1.0 / p
    cdef double[::1] row0 = np.empty(p)
    cdef double[::1] col0 = np.empty(p)
    cdef double[::1] dual_row = np.zeros(p)
    cdef double[::1] dual_col = np.zeros(p)
    cdef double[::1] m_row = np.empty(p)
    cdef double[::1] m_col = np.empty(p)
    cdef double[::1] r = np.empty(p)
    cdef double[::1] s = np.empty(p)
    out = np.empty((p, p))
    cdef double[:, ::1] M = out

    for i in range(p):
        row0[i] = 0.0
        col0[i] = 0.0
    for i in range(p):
        for j in range(p):
            row0[i] += X0[i, j]
            col0[j] += X0[i, j]
            dual_row[i] += dual[i, j]
            dual_col[j] += dual[i, j]

    with nogil:
        while it < max_iter:
            it += 1
            shift = 0.0
            for i in range(p):
                r[i] = 1.0 - (row0[i] - dual_row[i])
                s[i] = 1.0 - (col0[i] - dual_col[i])
                shift += r[i]
            shift *= inv_p
            for i in range(p):
                dual_row[i] = 0.0
                dual_col[i] = 0.0
                m_row[i] = 0.0
                m_col[i] = 0.0
            for i in range(p):
                for j in range(p):
                    z = X0[i, j] + (r[i] + s[j] - shift) * inv_p
                    if z > 0.0:
                        M[i, j] = z
                        dual[i, j] = 0.0
                        m_row[i] += z
                        m_col[j] += z
                    else:
                        M[i, j] = 0.0
                        dual[i, j] = z
                        dual_row[i] += z
                        dual_col[j] += z
            residual = 0.0
            for i in range(p):
                residual = max(residual, fabs(m_row[i] - 1.0))
                residual = max(residual, fabs(m_col[i] - 1.0))
            if residual <= tol:
                break
    return out, it, residual


def lap_min(double[:, ::1] C):
    cdef Py_ssize_t n = C.shape[0]
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef double[::1] minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] owner = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef char[::1] used = np.zeros(n + 1, dtype=np.int8)

    with nogil:
        for i in range(1, n + 1):
            owner[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = owner[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = C[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[owner[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if owner[j0] == 0:
                    break
            while j0:
                j1 = way[j0]
                owner[j0] = owner[j1]
                j0 = j1

    col_of_row = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cr = col_of_row
    for j in range(1, n + 1):
        cr[owner[j] - 1] = j - 1
    return col_of_row, np.asarray(u[1:]).copy(), np.asarray(v[1:]).copy()


def group_shrink(double[:, ::1] a, double[:, ::1] b, double thr):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j
    cdef double norm, scale
    out_a = np.empty((n, m))
    out_b = np.empty((n, m))
    cdef double[:, ::1] oa = out_a
    cdef double[:, ::1] ob = out_b
    with nogil:
        for i in range(n):
            for j in range(m):
                norm = sqrt(a[i, j] * a[i, j] + b[i, j] * b[i, j])
                if norm > thr:
                    scale = 1.0 - thr / norm
                else:
                    scale = 0.0
                oa[i, j] = scale * a[i, j]
                ob[i, j] = scale * b[i, j]
    return out_a, out_b
