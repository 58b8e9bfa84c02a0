"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same arithmetic order where it matters; used whenever the
extension is missing or ``MULTIVERSE_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

_MASK = (1 << 64) - 1


def jacobi_eigh(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    offmask = ~np.eye(n, dtype=bool)
    for sweep in range(1, max_sweeps + 2):
        off = math.sqrt(float(np.sum(a[offmask] ** 2)))
        if off <= tol:
            return a.diagonal().copy(), v, sweep - 1
        if sweep > max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweep > 4 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                x = a[:, p].copy()
                y = a[:, q].copy()
                a[:, p] = c * x - s * y
                a[:, q] = s * x + c * y
                x = a[p, :].copy()
                y = a[q, :].copy()
                a[p, :] = c * x - s * y
                a[q, :] = s * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                x = v[:, p].copy()
                y = v[:, q].copy()
                v[:, p] = c * x - s * y
                v[:, q] = s * x + c * y
    return a.diagonal().copy(), v, -1


def cholesky(a, jitter):
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = a[j, j] + jitter - float(L[j, :j] @ L[j, :j])
        if not (s > 0.0) or not math.isfinite(s):
            return L, j + 1
        djj = math.sqrt(s)
        L[j, j] = djj
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / djj
    return L, 0


def solve_lower(L, b):
    n = L.shape[0]
    X = np.empty((n, b.shape[1]))
    for i in range(n):
        X[i] = (b[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def solve_lower_t(L, b):
    n = L.shape[0]
    X = np.empty((n, b.shape[1]))
    for i in range(n - 1, -1, -1):
        X[i] = (b[i] - L[i + 1:, i] @ X[i + 1:]) / L[i, i]
    return X


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


def xoshiro_fill(state, count):
    s0, s1, s2, s3 = (int(x) for x in state)
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        out[i] = (_rotl((s0 + s3) & _MASK, 23) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out
