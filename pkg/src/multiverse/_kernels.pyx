# cython: language_level=3
"""Compiled hot kernels: cyclic Jacobi, Cholesky, triangular solves, xoshiro256++.

Every function here has a drop-in twin in ``_pykernels``; the two are tested
against each other.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite
from libc.stdint cimport uint64_t

cnp.import_array()


def jacobi_eigh(double[:, ::1] a, double tol, int max_sweeps):
    """Diagonalise the symmetric matrix ``a`` in place.

    Returns ``(w, V, sweeps)`` with unsorted eigenvalues.  ``sweeps`` is -1
    when the off-diagonal norm did not drop below ``tol`` in time.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, apq, app, aqq, g, theta, t, c, s, x, y
    V_arr = np.eye(n)
    cdef double[:, ::1] v = V_arr

    for sweep in range(1, max_sweeps + 2):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if sqrt(off) <= tol:
            w = np.array([a[k, k] for k in range(n)])
            return w, V_arr, sweep - 1
        if sweep > max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * fabs(apq)
                if sweep > 4 and fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * y
                    a[k, q] = s * x + c * y
                for k in range(n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * y
                    a[q, k] = s * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y
    w = np.array([a[k, k] for k in range(n)])
    return w, V_arr, -1


def cholesky(const double[:, ::1] a, double jitter):
    """Lower factor of ``a + jitter*I`` read from the lower triangle.

    Returns ``(L, pivot)``; ``pivot`` is the 1-based index of the first
    non-positive pivot, or 0 on success.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s, djj
    L_arr = np.zeros((n, n))
    cdef double[:, ::1] L = L_arr
    for j in range(n):
        s = a[j, j] + jitter
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not (s > 0.0) or not isfinite(s):
            return L_arr, j + 1
        djj = sqrt(s)
        L[j, j] = djj
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / djj
    return L_arr, 0


def solve_lower(const double[:, ::1] L, const double[:, ::1] b):
    """Solve ``L X = B`` by forward substitution; ``B`` is (n, k)."""
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double s
    X_arr = np.empty((n, m))
    cdef double[:, ::1] X = X_arr
    for r in range(m):
        for i in range(n):
            s = b[i, r]
            for j in range(i):
                s -= L[i, j] * X[j, r]
            X[i, r] = s / L[i, i]
    return X_arr


def solve_lower_t(const double[:, ::1] L, const double[:, ::1] b):
    """Solve ``L^T X = B`` by back substitution; ``B`` is (n, k)."""
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double s
    X_arr = np.empty((n, m))
    cdef double[:, ::1] X = X_arr
    for r in range(m):
        for i in range(n - 1, -1, -1):
            s = b[i, r]
            for j in range(i + 1, n):
                s -= L[j, i] * X[j, r]
            X[i, r] = s / L[i, i]
    return X_arr


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


def xoshiro_fill(cnp.uint64_t[::1] state, Py_ssize_t count):
    """Draw ``count`` xoshiro256++ outputs, advancing ``state`` in place."""
    out_arr = np.empty(count, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    cdef uint64_t s0 = state[0], s1 = state[1], s2 = state[2], s3 = state[3]
    cdef uint64_t result, t
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            result = _rotl(s0 + s3, 23) + s0
            t = s1 << 17
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = _rotl(s3, 45)
            out[i] = result
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return out_arr
