"""Multi-head softmax cross-entropy with per-class orthogonality penalties.

Shapes: representations ``D`` are ``d x n``; a single head is ``F`` (``d x c``)
and ``b`` (``c``); ``m`` heads are stacked as ``F`` (``m x d x c``) and
``b`` (``m x c``).  Losses are sums over samples, not means.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DegenerateColumnError, DimensionError, IndefiniteError
from .linalg import cholesky, sym_sqrt

DEFAULT_LAMBDA = 0.005
DEFAULT_WEIGHT_DECAY = 0.0005


# -- single head ---------------------------------------------------------------

def _logits(F, b, D):
    return F.T @ D + b[:, None]


def _log_softmax(Z):
    M = Z.max(axis=0, keepdims=True)
    S = Z - M
    return S - np.log(np.sum(np.exp(S), axis=0, keepdims=True))


def softmax_probs(F, b, x):
    """Class probabilities for a vector ``x`` (or each column of a matrix)."""
    F = np.asarray(F, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    X = x[:, None] if vec else x
    Z = _logits(F, b, X)
    E = np.exp(Z - Z.max(axis=0, keepdims=True))
    P = E / E.sum(axis=0, keepdims=True)
    return P[:, 0] if vec else P


def _onehot(y, c):
    Y = np.zeros((c, y.shape[0]))
    Y[y, np.arange(y.shape[0])] = 1.0
    return Y


def _check(F, b, D, y):
    F = np.asarray(F, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d, c = F.shape
    if b.shape != (c,) or D.shape[0] != d or y.shape != (D.shape[1],):
        raise DimensionError(f"F {F.shape}, b {b.shape}, D {D.shape}, y {y.shape} disagree")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise DimensionError("labels outside [0, c)")
    return F, b, D, y


def ce_loss(F, b, D, y):
    """``sum_i -log p_i(y_i)``, evaluated in the log domain."""
    F, b, D, y = _check(F, b, D, y)
    logp = _log_softmax(_logits(F, b, D))
    return float(-np.sum(logp[y, np.arange(y.shape[0])]))


def ce_grad(F, b, D, y):
    """Gradient of :func:`ce_loss`: ``dF[:, j] = sum_i d_i (p_i(j) - [y_i = j])``."""
    F, b, D, y = _check(F, b, D, y)
    G = np.exp(_log_softmax(_logits(F, b, D))) - _onehot(y, F.shape[1])
    return D @ G.T, G.sum(axis=1)


def hessian_quadform(F, b, D, y, Psi):
    """``psi^T (d^2 L / dF dF) psi`` for the direction ``Psi`` (``d x c``), biases fixed.

    Evaluated as the pairwise sum
    ``sum_{j<j'} sum_i p_i(j) p_i(j') ((psi_j - psi_j')^T d_i)^2``, which is
    exactly zero when all columns of ``Psi`` coincide.
    """
    F, b, D, y = _check(F, b, D, y)
    Psi = np.asarray(Psi, dtype=np.float64)
    if Psi.shape != F.shape:
        raise DimensionError(f"Psi is {Psi.shape}, F is {F.shape}")
    P = np.exp(_log_softmax(_logits(F, b, D)))
    c = F.shape[1]
    total = 0.0
    for j in range(c - 1):
        diff = (Psi[:, j:j + 1] - Psi[:, j + 1:]).T @ D       # (c-j-1) x n
        total += float(np.sum(P[j] * P[j + 1:] * diff * diff))
    return total


def ce_hessian(F, b, D, y):
    """Full Hessian of :func:`ce_loss` in ``W = [F; b^T]`` flattened column by column.

    Parameter ``(u, j)`` of ``W`` (``(d+1) x c``) sits at index ``j*(d+1) + u``.
    """
    F, b, D, y = _check(F, b, D, y)
    d, c = F.shape
    n = D.shape[1]
    Z = np.vstack([D, np.ones((1, n))])
    P = np.exp(_log_softmax(_logits(F, b, D)))
    k = d + 1
    H = np.zeros((c * k, c * k))
    for j in range(c):
        for jj in range(j, c):
            w = (P[j] if j == jj else 0.0) - P[j] * P[jj]
            block = (Z * w) @ Z.T
            H[j * k:(j + 1) * k, jj * k:(jj + 1) * k] = block
            if jj != j:
                H[jj * k:(jj + 1) * k, j * k:(j + 1) * k] = block.T
    return H


class FitResult(NamedTuple):
    F: np.ndarray
    b: np.ndarray
    loss: float
    grad_norm: float
    iterations: int


def minimize_ce(D, y, c, F0, b0, tol=1e-10, max_iter=200):
    """Minimize :func:`ce_loss` over ``(F, b)`` by damped Newton from ``(F0, b0)``.

    The Hessian is singular along the shift directions ``v 1^T`` and ``s 1``;
    the gradient has no component there, and each step is projected off them
    so the starting point's shift component is left untouched.
    """
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d = D.shape[0]
    k = d + 1
    W = np.vstack([np.asarray(F0, dtype=np.float64), np.asarray(b0, dtype=np.float64)[None, :]])

    def unpack(W):
        return W[:d], W[d]

    def grad_vec(W):
        gF, gb = ce_grad(*unpack(W), D, y)
        return np.vstack([gF, gb[None, :]]).T.reshape(-1)

    loss = ce_loss(*unpack(W), D, y)
    g = grad_vec(W)
    it = 0
    for it in range(1, max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            it -= 1
            break
        H = ce_hessian(*unpack(W), D, y)
        mu = max(1e-10 * np.trace(H) / H.shape[0], 1e-300)
        while True:
            try:
                step = -cholesky(H, mu).solve(g)
                break
            except IndefiniteError:
                # rounding made a null direction slightly negative
                mu *= 100.0
        dW = step.reshape(c, k).T
        # rounding in g is amplified by 1/mu along the null directions
        dW -= dW.mean(axis=1, keepdims=True)
        step = dW.T.reshape(-1)
        t = 1.0
        slope = float(g @ step)
        accepted = False
        while t > 1e-12:
            W_new = W + t * dW
            new_loss = ce_loss(*unpack(W_new), D, y)
            if new_loss <= loss + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # loss differences are at rounding level; take the step if it shrinks the gradient
            W_new = W + dW
            g_new = grad_vec(W_new)
            if np.linalg.norm(g_new) >= gn:
                break
            new_loss = ce_loss(*unpack(W_new), D, y)
        W = W_new
        loss = new_loss
        g = grad_vec(W)
    F, b = unpack(W)
    return FitResult(F.copy(), b.copy(), loss, float(np.linalg.norm(g)), it)


# -- multiple heads ------------------------------------------------------------

@dataclass(frozen=True)
class MultiverseHeads:
    F: np.ndarray   # m x d x c
    b: np.ndarray   # m x c

    def __post_init__(self):
        F = np.asarray(self.F, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if F.ndim != 3 or b.shape != (F.shape[0], F.shape[2]):
            raise DimensionError(f"heads F {F.shape} and b {b.shape} disagree")
        if F.shape[0] < 1:
            raise ConfigError("need at least one head")
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(b))):
            raise ConfigError("head parameters must be finite")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "b", b)

    @property
    def m(self):
        return self.F.shape[0]

    @property
    def d(self):
        return self.F.shape[1]

    @property
    def c(self):
        return self.F.shape[2]

    @classmethod
    def from_list(cls, Fs, bs):
        return cls(np.stack([np.asarray(F, dtype=np.float64) for F in Fs]),
                   np.stack([np.asarray(b, dtype=np.float64) for b in bs]))


@dataclass(frozen=True)
class OrthoMode:
    """``plain`` uses the Euclidean inner product, ``sw`` uses ``f^T S_w g``."""

    kind: str = "plain"
    sw: Optional[np.ndarray] = None

    @classmethod
    def plain(cls):
        return cls("plain")

    @classmethod
    def sw_ortho(cls, S_w):
        return cls("sw", np.asarray(S_w, dtype=np.float64))

    def metric(self, d):
        if self.kind == "plain":
            return np.eye(d)
        if self.kind == "sw":
            if self.sw is None:
                raise ConfigError("S_w-orthogonality needs an S_w estimate")
            if self.sw.shape != (d, d):
                raise DimensionError(f"S_w is {self.sw.shape}, heads have d={d}")
            return self.sw
        raise ConfigError(f"unknown orthogonality mode {self.kind!r}")


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float = DEFAULT_LAMBDA
    weight_decay: float = DEFAULT_WEIGHT_DECAY

    def __post_init__(self):
        if self.lam < 0 or self.weight_decay < 0:
            raise ConfigError("penalty weights must be non-negative")


def _pair_products(F, Q):
    """``A[r, s, j] = f_j^r^T Q f_j^s`` and ``QF[s] = Q F^s``."""
    QF = np.einsum("uv,svj->suj", Q, F)
    return np.einsum("ruj,suj->rsj", F, QF), QF


def ortho_penalty(heads, mode, cfg):
    """``lam * sum_j sum_{r<s} |f_j^r^T Q f_j^s|`` and its subgradient per head.

    ``Q`` is treated as a constant; ``sign(0) = 0``.
    """
    m = heads.m
    grads = np.zeros_like(heads.F)
    if m < 2 or cfg.lam == 0.0:
        return 0.0, grads
    Q = mode.metric(heads.d)
    A, QF = _pair_products(heads.F, Q)
    iu = np.triu_indices(m, 1)
    value = cfg.lam * float(np.sum(np.abs(A[iu])))
    S = np.sign(A)
    S[np.arange(m), np.arange(m)] = 0.0
    grads = cfg.lam * np.einsum("rsj,suj->ruj", S, QF)
    return value, grads


class Objective(NamedTuple):
    value: float
    dF: np.ndarray   # m x d x c
    db: np.ndarray   # m x c
    dD: np.ndarray   # d x n


def multiverse_objective(heads, D, y, mode, cfg, ce_weight=1.0):
    """Sum of per-head cross-entropies plus orthogonality penalty and weight decay.

    ``ce_weight`` scales the cross-entropy part only (the trainer passes
    ``1/batch_size`` so that the penalties act on a per-sample loss).
    """
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    ce_total = 0.0
    dF = np.empty_like(heads.F)
    db = np.empty_like(heads.b)
    dD = np.zeros_like(D)
    Y = _onehot(y, heads.c)
    for r in range(heads.m):
        F, b = heads.F[r], heads.b[r]
        _check(F, b, D, y)
        logp = _log_softmax(_logits(F, b, D))
        ce_total += float(-np.sum(logp[y, np.arange(y.shape[0])]))
        G = np.exp(logp) - Y
        dF[r] = ce_weight * (D @ G.T)
        db[r] = ce_weight * G.sum(axis=1)
        dD += ce_weight * (F @ G)
    pen, pen_grad = ortho_penalty(heads, mode, cfg)
    decay = cfg.weight_decay * float(np.sum(heads.F * heads.F))
    value = ce_weight * ce_total + pen + decay
    dF += pen_grad + 2.0 * cfg.weight_decay * heads.F
    return Objective(value, dF, db, dD)


def ortho_violation(heads, mode):
    """Largest normalized ``|f_j^r^T Q f_j^s|`` over classes and head pairs."""
    if heads.m < 2:
        return 0.0
    Q = mode.metric(heads.d)
    R = sym_sqrt(Q)
    G = np.einsum("uv,rvj->ruj", R, heads.F)
    norms = np.sqrt(np.sum(G * G, axis=1))      # m x c
    if np.any(norms == 0.0):
        r, j = np.argwhere(norms == 0.0)[0]
        raise DegenerateColumnError(f"head {r}, class {j} has a zero-norm classifier")
    A, _ = _pair_products(heads.F, Q)
    iu = np.triu_indices(heads.m, 1)
    N = np.abs(A) / (norms[:, None, :] * norms[None, :, :])
    return float(np.max(N[iu]))


def head_probs(heads, D):
    """Probabilities of every head, shape ``m x c x n``."""
    D = np.asarray(D, dtype=np.float64)
    return np.stack([np.exp(_log_softmax(_logits(heads.F[r], heads.b[r], D)))
                     for r in range(heads.m)])


def prob_agreement(heads, D):
    """Largest ``||p_i^r - p_i^s||_inf`` over samples and head pairs (0 for one head)."""
    if heads.m < 2:
        return 0.0
    P = head_probs(heads, D)
    worst = 0.0
    for r in range(heads.m - 1):
        worst = max(worst, float(np.max(np.abs(P[r + 1:] - P[r]))))
    return worst
