# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the numeric kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


def block_softmax(logits, bounds):
    cdef double[:, ::1] z = np.ascontiguousarray(logits, dtype=np.float64)
    cdef int64_t[::1] b = np.ascontiguousarray(bounds, dtype=np.int64)
    out_arr = np.empty((z.shape[0], z.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, f, j, lo, hi
    cdef Py_ssize_t nf = b.shape[0] - 1
    cdef double mx, s
    with nogil:
        for r in range(z.shape[0]):
            for f in range(nf):
                lo = b[f]
                hi = b[f + 1]
                mx = z[r, lo]
                for j in range(lo + 1, hi):
                    if z[r, j] > mx:
                        mx = z[r, j]
                s = 0.0
                for j in range(lo, hi):
                    out[r, j] = exp(z[r, j] - mx)
                    s += out[r, j]
                for j in range(lo, hi):
                    out[r, j] /= s
    return out_arr


def block_bce(probs, target, bounds, double eps):
    cdef double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef double[:, ::1] y = np.ascontiguousarray(target, dtype=np.float64)
    cdef int64_t[::1] b = np.ascontiguousarray(bounds, dtype=np.int64)
    loss_arr = np.zeros(p.shape[0], dtype=np.float64)
    grad_arr = np.empty((p.shape[0], p.shape[1]), dtype=np.float64)
    cdef double[::1] loss = loss_arr
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t r, f, j, lo, hi
    cdef Py_ssize_t nf = b.shape[0] - 1
    cdef double inv_c, q, block, pg, g
    with nogil:
        for r in range(p.shape[0]):
            for f in range(nf):
                lo = b[f]
                hi = b[f + 1]
                inv_c = 1.0 / (hi - lo)
                block = 0.0
                pg = 0.0
                for j in range(lo, hi):
                    q = p[r, j]
                    if q < eps:
                        q = eps
                        g = 0.0
                    elif q > 1.0 - eps:
                        q = 1.0 - eps
                        g = 0.0
                    else:
                        g = inv_c * (-y[r, j] / q + (1.0 - y[r, j]) / (1.0 - q))
                    block -= y[r, j] * log(q) + (1.0 - y[r, j]) * log1p(-q)
                    grad[r, j] = g
                    pg += p[r, j] * g
                loss[r] += block * inv_c
                for j in range(lo, hi):
                    grad[r, j] = p[r, j] * (grad[r, j] - pg)
    return loss_arr, grad_arr


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int _popcount(uint64_t x) noexcept nogil:
    return __builtin_popcountll(x)


def itemset_counts(bits, itemsets):
    cdef uint64_t[:, ::1] bm = np.ascontiguousarray(bits, dtype=np.uint64)
    cdef int64_t[:, ::1] sets = np.ascontiguousarray(itemsets, dtype=np.int64)
    out_arr = np.zeros(sets.shape[0], dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t r, w, j, item
    cdef uint64_t acc
    cdef int64_t total
    with nogil:
        for r in range(sets.shape[0]):
            total = 0
            for w in range(bm.shape[1]):
                acc = <uint64_t>0xFFFFFFFFFFFFFFFF
                for j in range(sets.shape[1]):
                    item = sets[r, j]
                    if item >= 0:
                        acc &= bm[item, w]
                total += _popcount(acc)
            out[r] = total
    return out_arr
