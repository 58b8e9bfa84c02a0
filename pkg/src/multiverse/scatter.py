"""Within/between-class scatter, Fisher ratios and the Fisher spectrum."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import GeneralizedEigenDecomposition, as_matrix, default_regularizer, gen_sym_eig


@dataclass(frozen=True)
class ScatterStats:
    global_mean: np.ndarray   # d
    class_means: np.ndarray   # d x c
    class_counts: np.ndarray  # c
    S_w: np.ndarray
    S_b: np.ndarray

    @property
    def dim(self):
        return self.S_w.shape[0]

    @property
    def eps(self):
        """Diagonal jitter applied to ``S_w`` by the Fisher machinery."""
        return default_regularizer(self.S_w)

    def total(self):
        return self.S_w + self.S_b


def _sym(M):
    return 0.5 * (M + M.T)


def compute_scatter(D, y, class_count=None):
    """Scatter matrices of ``D`` (``d x n``) under labels ``y``.

    With ``class_count`` given, every class in ``[0, class_count)`` must be
    present.  Without it, only the classes that occur are used; this is how
    mini-batches that miss some classes are handled.
    """
    D = as_matrix(D, "D")
    y = np.asarray(y, dtype=np.int64)
    d, n = D.shape
    if y.shape != (n,):
        raise DimensionError(f"{n} samples but {y.shape[0]} labels")
    if n == 0:
        raise DomainError("no samples")
    if class_count is None:
        classes = np.unique(y)
    else:
        classes = np.arange(class_count)
        counts = np.bincount(y, minlength=class_count)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise DomainError(f"class {int(empty[0])} has no samples")
    mu = D.mean(axis=1)
    means = np.empty((d, classes.size))
    counts = np.empty(classes.size, dtype=np.int64)
    centered = np.empty_like(D)
    for k, j in enumerate(classes):
        mask = y == j
        counts[k] = int(mask.sum())
        means[:, k] = D[:, mask].mean(axis=1)
        centered[:, mask] = D[:, mask] - means[:, k:k + 1]
    S_w = _sym(centered @ centered.T / n)
    dm = means - mu[:, None]
    S_b = _sym((dm * counts) @ dm.T / n)
    return ScatterStats(mu, means, counts, S_w, S_b)


def fisher_ratio(v, stats, eps=None):
    """``v^T S_b v / v^T (S_w + eps I) v`` with the stats' default ``eps``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (stats.dim,):
        raise DimensionError(f"vector has shape {v.shape}, expected ({stats.dim},)")
    if not np.any(v):
        raise DomainError("zero vector has no Fisher ratio")
    eps = stats.eps if eps is None else eps
    den = v @ stats.S_w @ v + eps * (v @ v)
    if not den > 0:
        raise DomainError("v^T S_w v is not positive")
    return float(v @ stats.S_b @ v / den)


@dataclass(frozen=True)
class FisherSpectrum:
    values: np.ndarray
    vectors: np.ndarray
    l1_norm: float
    eps: float


def fisher_spectrum(stats, regularizer=None):
    """Generalized eigenvalues of ``S_b v = gamma (S_w + eps I) v``, descending."""
    eps = stats.eps if regularizer is None else float(regularizer)
    g: GeneralizedEigenDecomposition = gen_sym_eig(stats.S_b, stats.S_w, eps)
    return FisherSpectrum(g.values, g.vectors, float(np.sum(g.values)), eps)
