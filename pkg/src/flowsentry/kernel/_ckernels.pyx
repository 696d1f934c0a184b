# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbor kernels over CSR adjacency (int64 indptr/indices)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def neighbor_mean(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                  const double[:, ::1] h):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = h.shape[1]
    out_arr = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t u, e, v, j, deg
    cdef double inv
    with nogil:
        for u in range(n):
            deg = indptr[u + 1] - indptr[u]
            if deg == 0:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                for j in range(k):
                    out[u, j] += h[v, j]
            for j in range(k):
                out[u, j] = out[u, j] / deg
    return out_arr


def neighbor_mean_adjoint(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                          const double[:, ::1] g, Py_ssize_t n_src):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = g.shape[1]
    out_arr = np.zeros((n_src, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t u, e, v, j, deg
    with nogil:
        for u in range(n):
            deg = indptr[u + 1] - indptr[u]
            if deg == 0:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                for j in range(k):
                    out[v, j] += g[u, j] / deg
    return out_arr


def nearest_neighbor_swap(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                          const double[:, ::1] x, const cnp.uint8_t[::1] mask):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.array(x, dtype=np.float64, copy=True)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t u, e, v, j, best
    cdef double dist, diff, best_dist
    with nogil:
        for u in range(n):
            if not mask[u] or indptr[u + 1] == indptr[u]:
                continue
            best = -1
            best_dist = 0.0
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                dist = 0.0
                for j in range(d):
                    diff = x[u, j] - x[v, j]
                    dist += diff * diff
                if best < 0 or dist < best_dist or (dist == best_dist and v < best):
                    best = v
                    best_dist = dist
            for j in range(d):
                out[u, j] = x[best, j]
    return out_arr
