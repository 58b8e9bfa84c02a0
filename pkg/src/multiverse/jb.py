"""Joint Bayesian pair verification, cosine similarity and threshold calibration.

A representation is modelled as identity plus intra-class noise,
``x = mu + h + e`` with ``h ~ N(0, S_b)`` and ``e ~ N(0, S_w)``.  For a pair
the stacked vector is Gaussian with covariance ``Sigma_H`` if both share an
identity and ``Sigma_I`` otherwise; the score is the log-likelihood ratio.
"""
import io
from dataclasses import dataclass

import numpy as np

from .data import atomic_write_text
from .errors import DimensionError, DomainError
from .linalg import cholesky, default_regularizer
from .scatter import compute_scatter


@dataclass(frozen=True)
class JBModel:
    mu: np.ndarray
    S_b: np.ndarray
    S_w: np.ndarray
    chol_H: object
    chol_I: object
    jitter: float

    @property
    def dim(self):
        return self.mu.shape[0]

    @property
    def logdet_H(self):
        return self.chol_H.logdet

    @property
    def logdet_I(self):
        return self.chol_I.logdet


def hypothesis_covariances(S_b, S_w):
    """``(Sigma_H, Sigma_I)`` as explicit ``2d x 2d`` block matrices."""
    T = S_b + S_w
    Z = np.zeros_like(T)
    return np.block([[T, S_b], [S_b, T]]), np.block([[T, Z], [Z, T]])


def jb_from_scatter(mu, S_b, S_w, jitter=None):
    S_b = np.asarray(S_b, dtype=np.float64)
    S_w = np.asarray(S_w, dtype=np.float64)
    H, I = hypothesis_covariances(S_b, S_w)
    if jitter is None:
        jitter = default_regularizer(S_b + S_w)
    return JBModel(np.asarray(mu, dtype=np.float64), S_b, S_w,
                   cholesky(H, jitter), cholesky(I, jitter), float(jitter))


def jb_fit(D, y, jitter=None):
    """Fit from a labeled representation matrix ``D`` (``d x n``).

    ``jitter`` is added to the diagonal of both hypothesis covariances;
    the default is ``1e-6 * trace(S_b + S_w) / d``.  Raises
    :class:`IndefiniteError` if a factorization still fails.
    """
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size < 2:
        raise DomainError("Joint Bayesian fit needs at least two classes")
    st = compute_scatter(D, y)
    return jb_from_scatter(st.global_mean, st.S_b, st.S_w, jitter)


def jb_scores(model, X1, X2, mu=None):
    """Scores of column pairs ``(X1[:, k], X2[:, k])``; ``mu`` overrides the centering."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=np.float64).T).T
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64).T).T
    d = model.dim
    if X1.shape != X2.shape or X1.shape[0] != d:
        raise DimensionError(f"pair blocks {X1.shape}, {X2.shape} do not match d={d}")
    mu = model.mu if mu is None else np.asarray(mu, dtype=np.float64)
    Xh = np.vstack([X1 - mu[:, None], X2 - mu[:, None]])
    qH = np.sum(model.chol_H.solve_lower(Xh) ** 2, axis=0)
    qI = np.sum(model.chol_I.solve_lower(Xh) ** 2, axis=0)
    return (-0.5 * qH - 0.5 * model.logdet_H) - (-0.5 * qI - 0.5 * model.logdet_I)


def jb_score(model, x1, x2, mu=None):
    """Log-likelihood ratio of same vs different identity; higher means more likely same."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != (model.dim,) or x2.shape != (model.dim,):
        raise DimensionError(f"expected vectors of length {model.dim}")
    return float(jb_scores(model, x1[:, None], x2[:, None], mu)[0])


def cosine_score(x1, x2):
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    n1, n2 = np.linalg.norm(x1), np.linalg.norm(x2)
    if n1 == 0 or n2 == 0:
        raise DomainError("cosine of a zero vector")
    return float(np.clip(x1 @ x2 / (n1 * n2), -1.0, 1.0))


def cosine_scores(X1, X2):
    n1 = np.linalg.norm(X1, axis=0)
    n2 = np.linalg.norm(X2, axis=0)
    if np.any(n1 == 0) or np.any(n2 == 0):
        raise DomainError("cosine of a zero vector")
    return np.clip(np.sum(X1 * X2, axis=0) / (n1 * n2), -1.0, 1.0)


def jb_scorer(model, mu=None):
    """Matrix scorer for :func:`evaluate_pairs`; ``mu`` re-centers (e.g. on target data)."""
    return lambda X1, X2: jb_scores(model, X1, X2, mu)


# -- evaluation ---------------------------------------------------------------

@dataclass(frozen=True)
class VerificationResult:
    accuracy: float
    threshold: float
    scores: np.ndarray
    calibration_accuracy: float


def _accuracy(scores, is_same, threshold):
    return float(np.mean((scores > threshold) == is_same))


def best_threshold(scores, is_same):
    """Threshold maximizing accuracy of ``score > t``; ties go to the lowest ``t``.

    Candidates are the midpoints between sorted unique scores plus one
    point below the minimum and one above the maximum.
    """
    scores = np.asarray(scores, dtype=np.float64)
    is_same = np.asarray(is_same, dtype=bool)
    u = np.unique(scores)
    cands = np.concatenate([[u[0] - 1.0], 0.5 * (u[:-1] + u[1:]), [u[-1] + 1.0]])
    # accuracy at each candidate via cumulative counts over the sorted unique scores
    pos = np.searchsorted(u, scores)
    same_at = np.bincount(pos, weights=is_same, minlength=u.size)
    diff_at = np.bincount(pos, weights=~is_same, minlength=u.size)
    # candidate k predicts "same" for unique scores u[k:], "different" for u[:k]
    diff_below = np.concatenate([[0.0], np.cumsum(diff_at)])
    same_above = np.concatenate([[0.0], np.cumsum(same_at[::-1])])[::-1]
    correct = diff_below + same_above
    k = int(np.argmax(correct))
    return float(cands[k]), float(correct[k] / scores.size)


def _pair_blocks(ds, pairs):
    X = ds.features
    n = X.shape[1]
    if len(pairs) == 0:
        raise DomainError("empty pair set")
    for idx in (pairs.index_a, pairs.index_b):
        if idx.min() < 0 or idx.max() >= n:
            raise DimensionError("pair index out of range")
    return X[:, pairs.index_a], X[:, pairs.index_b]


def evaluate_pairs(scorer, ds, pairs, calibration):
    """Same/not-same accuracy on ``pairs`` at the threshold calibrated on ``calibration``.

    ``scorer(X1, X2)`` maps two ``d x P`` blocks to ``P`` scores;
    ``ds.features`` holds the representations being compared.
    """
    cal = np.asarray(scorer(*_pair_blocks(ds, calibration)), dtype=np.float64)
    threshold, cal_acc = best_threshold(cal, calibration.is_same)
    scores = np.asarray(scorer(*_pair_blocks(ds, pairs)), dtype=np.float64)
    return VerificationResult(_accuracy(scores, pairs.is_same, threshold), threshold, scores, cal_acc)


def scores_to_csv(pairs, scores):
    out = io.StringIO()
    out.write("index_a,index_b,is_same,score\n")
    for (a, b, s), v in zip(pairs, scores):
        out.write(f"{a},{b},{int(s)},{format(float(v), '.17g')}\n")
    return out.getvalue()


def save_scores(path, pairs, scores):
    atomic_write_text(path, scores_to_csv(pairs, scores))
