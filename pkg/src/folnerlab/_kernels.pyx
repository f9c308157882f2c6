# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled matrix-product kernels; same contracts as ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, frexp, ldexp

cnp.import_array()

cdef enum:
    MAXR = 8

cdef double RENORM_HI = 2.0 ** 256
cdef double RENORM_LO = 2.0 ** -256


cdef inline void _matmul(const double* a, const double* b, double* out, Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc
    if r == 2:
        out[0] = a[0] * b[0] + a[1] * b[2]
        out[1] = a[0] * b[1] + a[1] * b[3]
        out[2] = a[2] * b[0] + a[3] * b[2]
        out[3] = a[2] * b[1] + a[3] * b[3]
        return
    for i in range(r):
        for j in range(r):
            acc = 0.0
            for k in range(r):
                acc = acc + a[i * r + k] * b[k * r + j]
            out[i * r + j] = acc


cdef inline double _row_norm(const double* p, Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double best = 0.0, s
    for i in range(r):
        s = 0.0
        for j in range(r):
            s = s + fabs(p[i * r + j])
        if s > best:
            best = s
    return best


cdef inline int _renorm(double* p, Py_ssize_t r) noexcept nogil:
    # once the largest entry leaves [2^-256, 2^256], divide by the power of two
    # just above it: exact, and no log per step
    cdef Py_ssize_t i
    cdef double t = 0.0
    cdef int e
    for i in range(r * r):
        if fabs(p[i]) > t:
            t = fabs(p[i])
    if RENORM_LO < t < RENORM_HI:
        return 0
    frexp(t, &e)
    t = ldexp(1.0, -e)
    for i in range(r * r):
        p[i] = p[i] * t
    return e


cdef double LN2 = 0.6931471805599453


def _prepare(mats, words):
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    words = np.ascontiguousarray(words, dtype=np.intp)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("mats must have shape (k, r, r)")
    if mats.shape[1] > MAXR:
        raise ValueError("compiled kernels support r <= 8")
    if words.ndim != 2:
        raise ValueError("words must have shape (S, n)")
    if words.size and (words.min() < 0 or words.max() >= mats.shape[0]):
        raise ValueError("word letter outside the alphabet")
    return mats, words


def prefix_lognorms(mats, words):
    mats, words = _prepare(mats, words)
    cdef double[:, :, ::1] A = mats
    cdef Py_ssize_t[:, ::1] W = words
    cdef Py_ssize_t S = W.shape[0], n = W.shape[1], r = A.shape[1]
    out_arr = np.empty((S, n))
    cdef double[:, ::1] out = out_arr
    cdef double prod[MAXR * MAXR]
    cdef double tmp[MAXR * MAXR]
    cdef Py_ssize_t s, j, i
    cdef long scale
    with nogil:
        for s in range(S):
            for i in range(r * r):
                prod[i] = 0.0
            for i in range(r):
                prod[i * r + i] = 1.0
            scale = 0
            for j in range(n):
                _matmul(prod, &A[W[s, j], 0, 0], tmp, r)
                for i in range(r * r):
                    prod[i] = tmp[i]
                scale = scale + _renorm(prod, r)
                out[s, j] = scale * LN2 + log(_row_norm(prod, r))
    return out_arr


def product_lognorms(mats, words):
    mats, words = _prepare(mats, words)
    cdef double[:, :, ::1] A = mats
    cdef Py_ssize_t[:, ::1] W = words
    cdef Py_ssize_t S = W.shape[0], n = W.shape[1], r = A.shape[1]
    out_arr = np.zeros(S)
    cdef double[::1] out = out_arr
    cdef double prod[MAXR * MAXR]
    cdef double tmp[MAXR * MAXR]
    cdef Py_ssize_t s, j, i
    cdef long scale
    if n == 0:
        return out_arr
    with nogil:
        for s in range(S):
            for i in range(r * r):
                prod[i] = 0.0
            for i in range(r):
                prod[i * r + i] = 1.0
            scale = 0
            for j in range(n):
                _matmul(prod, &A[W[s, j], 0, 0], tmp, r)
                for i in range(r * r):
                    prod[i] = tmp[i]
                # renormalising every step keeps long products finite
                scale = scale + _renorm(prod, r)
            out[s] = scale * LN2 + log(_row_norm(prod, r))
    return out_arr


def window_lognorms(mats, words, Py_ssize_t m):
    mats, words = _prepare(mats, words)
    cdef double[:, :, ::1] A = mats
    cdef Py_ssize_t[:, ::1] W = words
    cdef Py_ssize_t S = W.shape[0], n = W.shape[1], r = A.shape[1]
    if m < 1 or m > n:
        raise ValueError("window length must satisfy 1 <= m <= n")
    cdef Py_ssize_t count = n - m + 1
    out_arr = np.empty((S, count))
    cdef double[:, ::1] out = out_arr
    # windows starting in block [lo, lo + m) split as a suffix of that block
    # times a prefix of the next one; only those two blocks are held at a time
    suf_arr = np.empty((m, r * r))
    pre_arr = np.empty((m, r * r))
    cdef double[:, ::1] suf = suf_arr
    cdef double[:, ::1] pre = pre_arr
    cdef double tmp[MAXR * MAXR]
    cdef Py_ssize_t s, lo, k, i, top, avail
    with nogil:
        for s in range(S):
            lo = 0
            while lo < count:
                # suffix products A_{x_lo+k} ... A_{x_lo+m-1}
                for i in range(r * r):
                    suf[m - 1, i] = (&A[W[s, lo + m - 1], 0, 0])[i]
                k = m - 2
                while k >= 0:
                    _matmul(&A[W[s, lo + k], 0, 0], &suf[k + 1, 0], &suf[k, 0], r)
                    k = k - 1
                out[s, lo] = log(_row_norm(&suf[0, 0], r))
                # prefix products A_{x_lo+m} ... A_{x_lo+m+k}
                top = count - lo
                if top > m:
                    top = m
                avail = top - 1
                if avail > 0:
                    for i in range(r * r):
                        pre[0, i] = (&A[W[s, lo + m], 0, 0])[i]
                    for k in range(1, avail):
                        _matmul(&pre[k - 1, 0], &A[W[s, lo + m + k], 0, 0], &pre[k, 0], r)
                    for k in range(1, top):
                        _matmul(&suf[k, 0], &pre[k - 1, 0], tmp, r)
                        out[s, lo + k] = log(_row_norm(tmp, r))
                lo = lo + m
    return out_arr
