"""Dense linear algebra on small symmetric problems.

Eigenvalues come from cyclic Jacobi rotations and factorizations from a
plain Cholesky; both run in the compiled kernel when available.  NumPy
arrays are the matrix carrier and matrix products use NumPy, but no
LAPACK decomposition is called from here.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConvergenceError, DimensionError, IndefiniteError, SymmetryError

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12
EFFECTIVE_RANK_TAU = 1e-3
REGULARIZER_SCALE = 1e-6


def as_matrix(A, name="matrix"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DimensionError(f"{name} has non-finite entries")
    return A


def check_symmetric(A, name="matrix"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] == 0:
        raise DimensionError(f"{name} is empty")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > SYMMETRY_TOL * max(scale, np.finfo(float).tiny):
        raise SymmetryError(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def _fix_signs(V):
    # largest-magnitude entry of each column made positive, for reproducible output
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        yield self.values
        yield self.vectors


@dataclass(frozen=True)
class GeneralizedEigenDecomposition:
    """Columns ``v_k`` satisfy ``A v_k = values[k] * B v_k`` with ``v_k^T B v_k = 1``."""

    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        yield self.values
        yield self.vectors


def sym_eig(A, *, kernels=None):
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    Raises ``SymmetryError`` / ``DimensionError`` for bad input and
    ``ConvergenceError`` if Jacobi fails to converge within 100 sweeps.
    """
    S = check_symmetric(A)
    k = kernels or _backend.kernels
    # power-of-two rescale is exact; it keeps squared entries clear of under/overflow
    peak = float(np.abs(S).max()) if S.size else 0.0
    shift = math.frexp(peak)[1] if peak > 0 else 0
    work = np.ldexp(np.ascontiguousarray(S, dtype=np.float64), -shift)
    tol = JACOBI_TOL * np.linalg.norm(work)
    w, V, sweeps = k.jacobi_eigh(work, tol, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    w = np.ldexp(np.asarray(w), shift)
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], _fix_signs(np.asarray(V)[:, order]))


class CholeskyFactor:
    """Lower factor ``L`` of ``A + jitter*I`` with solves and log-determinant."""

    def __init__(self, L, jitter, kernels):
        self.L = L
        self.jitter = jitter
        self._k = kernels
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(L))))

    @property
    def shape(self):
        return self.L.shape

    def __array__(self, dtype=None, copy=None):
        return self.L if dtype is None else self.L.astype(dtype)

    def _rhs(self, b):
        b = np.asarray(b, dtype=np.float64)
        vec = b.ndim == 1
        b2 = np.ascontiguousarray(b.reshape(-1, 1) if vec else b)
        if b2.shape[0] != self.L.shape[0]:
            raise DimensionError(f"rhs has {b2.shape[0]} rows, factor has {self.L.shape[0]}")
        return b2, vec

    def solve_lower(self, b):
        """``L^{-1} b``."""
        b2, vec = self._rhs(b)
        x = self._k.solve_lower(self.L, b2)
        return x[:, 0] if vec else x

    def solve_lower_t(self, b):
        """``L^{-T} b``."""
        b2, vec = self._rhs(b)
        x = self._k.solve_lower_t(self.L, b2)
        return x[:, 0] if vec else x

    def solve(self, b):
        """``(L L^T)^{-1} b``."""
        return self.solve_lower_t(self.solve_lower(b))

    def quad(self, x):
        """``x^T (L L^T)^{-1} x`` for a vector, or per column of a matrix."""
        z = self.solve_lower(x)
        return np.sum(z * z, axis=0)


def cholesky(A, jitter=0.0, *, kernels=None):
    """Factor ``A + jitter*I = L L^T``.

    Raises ``IndefiniteError`` carrying the 1-based index of the first
    non-positive pivot.
    """
    if jitter < 0:
        raise DimensionError("jitter must be non-negative")
    S = check_symmetric(A)
    k = kernels or _backend.kernels
    L, pivot = k.cholesky(np.ascontiguousarray(S), float(jitter))
    if pivot:
        raise IndefiniteError(int(pivot))
    return CholeskyFactor(np.asarray(L), float(jitter), k)


def default_regularizer(B):
    B = np.asarray(B, dtype=np.float64)
    return REGULARIZER_SCALE * float(np.trace(B)) / B.shape[0]


def gen_sym_eig(A, B, regularizer=None, *, kernels=None):
    """Solve ``A v = gamma (B + regularizer*I) v`` by Cholesky reduction.

    ``regularizer=None`` uses ``1e-6 * trace(B) / d``; pass ``0.0`` for an
    unregularized solve.
    """
    A = check_symmetric(A, "A")
    B = check_symmetric(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"A is {A.shape}, B is {B.shape}")
    eps = default_regularizer(B) if regularizer is None else float(regularizer)
    fac = cholesky(B, max(eps, 0.0), kernels=kernels)
    X = fac.solve_lower(A)
    C = fac.solve_lower(np.ascontiguousarray(X.T))
    C = 0.5 * (C + C.T)
    eig = sym_eig(C, kernels=kernels)
    V = fac.solve_lower_t(eig.vectors)
    return GeneralizedEigenDecomposition(eig.values, V)


def effective_rank(values, tau=EFFECTIVE_RANK_TAU):
    values = np.asarray(values)
    if values.size == 0 or values[0] <= 0:
        return 0
    return int(np.sum(values > tau * values[0]))


def gram_spectrum(D, tau=EFFECTIVE_RANK_TAU, *, kernels=None):
    """Spectrum of ``K = D D^T`` and the number of eigenvalues above ``tau * lambda_1``."""
    D = as_matrix(D, "D")
    if D.shape[1] < 1:
        raise DimensionError("D needs at least one column")
    K = D @ D.T
    eig = sym_eig(0.5 * (K + K.T), kernels=kernels)
    return eig, effective_rank(eig.values, tau)


def sym_sqrt(Q, *, kernels=None):
    """Symmetric PSD square root; slightly negative eigenvalues are clipped to 0."""
    w, V = sym_eig(Q, kernels=kernels)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
