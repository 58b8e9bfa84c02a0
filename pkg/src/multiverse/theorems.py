"""Numerical checks of the structural results behind the multiverse loss.

Each check returns a :class:`BoundCheck`; ``holds`` means ``lhs <= rhs + slack``.
Bounds that assume an exact minimizer use the achieved loss plus a slack
``delta = ||grad L||_F * ||perturbation||_F`` and a machine-scale margin.
"""
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .data import atomic_write_text
from .errors import (ConstructionError, DegenerateDirectionError, DimensionError, DomainError,
                     PremiseError)
from .jb import hypothesis_covariances
from .linalg import cholesky, gen_sym_eig, sym_eig
from .loss import MultiverseHeads, ce_grad, ce_loss, minimize_ce
from .rng import Rng, derive_seed
from .scatter import compute_scatter, fisher_ratio, fisher_spectrum

MACHINE_MARGIN = 1e-12
NEWTON_MAX_ITER = 200


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    slack: float
    context: dict = field(default_factory=dict, compare=False)

    @property
    def holds(self):
        return bool(self.lhs <= self.rhs + self.slack)


def _margin(*vals):
    return MACHINE_MARGIN * (1.0 + sum(abs(v) for v in vals))


# -- shift invariance and rank-one structure ----------------------------------------

def check_shift_invariance(F, b, D, y, v, s):
    """Loss is unchanged when ``v`` is added to every classifier and ``s`` to every bias."""
    F = np.asarray(F, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (F.shape[0],):
        raise DimensionError(f"shift vector has shape {v.shape}, expected ({F.shape[0]},)")
    base = ce_loss(F, b, D, y)
    moved = ce_loss(F + v[:, None], np.asarray(b, dtype=np.float64) + s, D, y)
    return BoundCheck(abs(moved - base), 1e-10 * (1.0 + abs(base)), 0.0,
                      {"loss": base, "shifted_loss": moved})


def rank1_difference_residual(F1, F2):
    """Distance of ``F1 - F2`` from the form ``v 1^T``, relative to its norm."""
    F1 = np.asarray(F1, dtype=np.float64)
    F2 = np.asarray(F2, dtype=np.float64)
    if F1.shape != F2.shape:
        raise DimensionError(f"shapes {F1.shape} and {F2.shape} differ")
    P = F1 - F2
    off = P - P.mean(axis=1, keepdims=True)
    return float(np.linalg.norm(off) / max(np.linalg.norm(P), 1e-300))


class EllipseFit(tuple):
    """``(v, residual)`` plus whether the pseudo-inverse route was needed."""

    def __new__(cls, v, residual, pseudo_inverse):
        obj = super().__new__(cls, (v, residual))
        obj.pseudo_inverse = pseudo_inverse
        return obj

    v = property(lambda self: self[0])
    residual = property(lambda self: self[1])


def ellipse_constraint_residual(F):
    """Least-squares ``v`` for ``F^T v = -(||f_j||^2)_j`` and the relative residual.

    Meaningful only for ``c > d``, where a second solution shifted by ``v``
    and orthogonal to the first would have to satisfy this system exactly.
    """
    F = np.asarray(F, dtype=np.float64)
    d, c = F.shape
    if c <= d:
        raise DomainError(f"needs more classes than dimensions (c={c}, d={d})")
    sq = np.sum(F * F, axis=0)
    w, U = sym_eig(F @ F.T)
    keep = w > 1e-12 * max(w[0], 1e-300)
    rhs = U.T @ (F @ -sq)
    v = U[:, keep] @ (rhs[keep] / w[keep])
    res = float(np.linalg.norm(F.T @ v + sq) / max(np.linalg.norm(sq), 1e-300))
    return EllipseFit(v, res, bool(not np.all(keep)))


# -- constructive orthogonal solutions -------------------------------------------------

def _smallest_eigvecs(D, k):
    D = np.asarray(D, dtype=np.float64)
    K = D @ D.T
    eig = sym_eig(0.5 * (K + K.T))
    d = eig.values.size
    if k > d:
        raise DimensionError(f"need {k} eigenvectors but d={d}")
    # column l-1 holds the l-th smallest eigenpair
    idx = np.arange(d - 1, d - 1 - k, -1)
    return np.maximum(eig.values[idx], 0.0), eig.vectors[:, idx]


def _pairwise_cos(Fs):
    """Largest normalized same-class dot product between any two heads."""
    worst = 0.0
    for r in range(len(Fs)):
        for s in range(r + 1, len(Fs)):
            num = np.abs(np.sum(Fs[r] * Fs[s], axis=0))
            den = np.linalg.norm(Fs[r], axis=0) * np.linalg.norm(Fs[s], axis=0)
            worst = max(worst, float(np.max(num / np.maximum(den, 1e-300))))
    return worst


def construct_pair_solution(F, b, D, y):
    """Second classifier set ``F + v alpha^T`` orthogonal to ``F`` class by class.

    ``v`` is the eigenvector of ``D D^T`` with the smallest eigenvalue and
    ``alpha_j = -||f_j||^2 / (v^T f_j)``.  Returns ``(F2, alpha, check)``
    where the check bounds the joint loss by
    ``2 L + A lambda_min + delta`` with ``A = 1/2 sum_{j<j'} (alpha_j - alpha_j')^2``.
    """
    F = np.asarray(F, dtype=np.float64)
    lam, V = _smallest_eigvecs(D, 1)
    v = V[:, 0]
    g = v @ F
    norms = np.linalg.norm(F, axis=0)
    bad = np.flatnonzero(np.abs(g) <= 1e-10 * norms)
    if bad.size:
        raise DegenerateDirectionError(
            f"class {int(bad[0])}: classifier is orthogonal to the smallest eigenvector")
    alpha = -(norms ** 2) / g
    Psi = np.outer(v, alpha)
    F2 = F + Psi
    ortho = _pairwise_cos([F, F2])
    base = ce_loss(F, b, D, y)
    J = base + ce_loss(F2, b, D, y)
    diff = alpha[:, None] - alpha[None, :]
    A = 0.25 * float(np.sum(diff * diff))
    dF, _ = ce_grad(F, b, D, y)
    delta = float(np.linalg.norm(dF) * np.linalg.norm(Psi))
    rhs = 2.0 * base + A * lam[0] + delta
    ctx = {"A": A, "lambda_min": float(lam[0]), "delta": delta, "loss": base,
           "orthogonality": ortho}
    return F2, alpha, BoundCheck(J, rhs, _margin(J, rhs), ctx)


def _simplex(w_hat, count):
    """``count`` vectors orthogonal to ``w_hat`` with Gram matrix ``I - 1/count`` (regular simplex)."""
    k = w_hat.size
    E = np.eye(k)[:, :count] - 1.0 / count
    one = np.full(k, 1.0 / math.sqrt(k))
    u = one - w_hat
    nu = np.linalg.norm(u)
    if nu > 1e-15:
        u /= nu
        E = E - 2.0 * np.outer(u, u @ E)   # Householder: 1/sqrt(k) -> w_hat
    return E


def min_norm_coefficients(g, V, m):
    """Coefficients ``a_r`` (columns, ``a_1 = 0``) making ``g + V a_r`` pairwise orthogonal.

    With ``w = V^T g`` the minimum-norm solution puts every ``a_r`` at
    ``-||g||^2/||w||`` along ``w`` plus a regular-simplex offset orthogonal to
    ``w`` whose pairwise inner products are ``-||g||^2 (||g||^2/||w||^2 - 1)``.
    """
    w = V.T @ g
    nw = np.linalg.norm(w)
    gg = float(g @ g)
    if nw <= 1e-10 * math.sqrt(gg):
        raise DegenerateDirectionError("classifier has no component on the small eigenvectors")
    w_hat = w / nw
    a = np.zeros((m - 1, m))
    a[:, 1:] = (-gg / nw) * w_hat[:, None]
    if m > 2:
        kappa = max(gg * (gg / (nw * nw) - 1.0), 0.0)
        a[:, 1:] += math.sqrt(kappa * (m - 1)) * _simplex(w_hat, m - 1)
    return a


def _ortho_residuals(g, V, a):
    G = g[:, None] + V @ a
    m = a.shape[1]
    iu = np.triu_indices(m, 1)
    return (G.T @ G)[iu]


def newton_coefficients(g, V, m, a0=None, tol=1e-13, max_iter=NEWTON_MAX_ITER):
    """Damped minimum-norm Newton on the pairwise orthogonality system.

    Unknowns are ``a_2..a_m`` (``a_1 = 0``); each step is the minimum-norm
    solution of the linearized system, halved until the residual drops.
    Raises :class:`ConvergenceError`-style ``ConstructionError`` (class -1)
    when ``max_iter`` is exhausted.
    """
    k = V.shape[1]
    if a0 is None:
        a0 = np.zeros((k, m))
        w = V.T @ g
        a0[:, 1:] = -w[:, None] * (1.0 + np.arange(1, m))[None, :] / max(w @ w, 1e-300) * (g @ g) / m
    a = np.array(a0, dtype=np.float64)
    a[:, 0] = 0.0
    scale = float(g @ g)
    pairs = list(zip(*np.triu_indices(m, 1)))
    for it in range(max_iter):
        h = _ortho_residuals(g, V, a)
        if np.max(np.abs(h)) <= tol * scale:
            return a, it
        G = g[:, None] + V @ a
        Jm = np.zeros((len(pairs), k * (m - 1)))
        for row, (r, s) in enumerate(pairs):
            # d/da_r (f_r . f_s) = V^T f_s
            if r > 0:
                Jm[row, (r - 1) * k:r * k] += V.T @ G[:, s]
            Jm[row, (s - 1) * k:s * k] += V.T @ G[:, r]
        M = Jm @ Jm.T + 1e-14 * scale * scale * np.eye(len(pairs))
        step = -Jm.T @ np.linalg.solve(M, h)
        t = 1.0
        norm0 = np.linalg.norm(h)
        while t > 1e-6:
            trial = a.copy()
            trial[:, 1:] += t * step.reshape(m - 1, k).T
            if np.linalg.norm(_ortho_residuals(g, V, trial)) < norm0:
                break
            t *= 0.5
        a = trial
    raise ConstructionError(-1, f"Newton did not converge in {max_iter} iterations")


def construct_m_solutions(F, b, D, y, m):
    """``m`` classifier sets orthogonal class by class, built on the ``m-1`` smallest eigenvectors.

    Returns ``(heads, alpha, check)`` with ``alpha[j, l, r]`` the coefficient
    of head ``r`` on the ``l``-th smallest eigenvector for class ``j``
    (``alpha[:, :, 0] = 0``).  The check bounds the joint loss by
    ``m L + sum_l A_l lambda_l + delta``.
    """
    F = np.asarray(F, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d, c = F.shape
    if m < 2:
        raise DomainError("m must be at least 2")
    if m > d:
        raise DimensionError(f"m={m} exceeds d={d}")
    lam, V = _smallest_eigvecs(D, m - 1)
    alpha = np.zeros((c, m - 1, m))
    for j in range(c):
        g = F[:, j]
        try:
            a = min_norm_coefficients(g, V, m)
            if m > 2:
                a, _ = newton_coefficients(g, V, m, a0=a, tol=1e-15, max_iter=NEWTON_MAX_ITER)
        except DegenerateDirectionError as exc:
            raise DegenerateDirectionError(f"class {j}: {exc}") from None
        except ConstructionError as exc:
            # the closed form is exact up to rounding; keep it when polishing stalls
            h = _ortho_residuals(g, V, a)
            if np.max(np.abs(h)) > 1e-10 * float(g @ g):
                raise ConstructionError(j, str(exc)) from None
        alpha[j] = a
    Fs = [F + V @ alpha[:, :, r].T for r in range(m)]
    heads = MultiverseHeads(np.stack(Fs), np.tile(b, (m, 1)))
    base = ce_loss(F, b, D, y)
    J = sum(ce_loss(Fr, b, D, y) for Fr in Fs)
    A = np.zeros(m - 1)
    for l in range(m - 1):
        diff = alpha[:, None, l, :] - alpha[None, :, l, :]
        A[l] = 0.25 * float(np.sum(diff * diff))
    dF, _ = ce_grad(F, b, D, y)
    delta = float(np.linalg.norm(dF) * sum(np.linalg.norm(Fr - F) for Fr in Fs))
    rhs = m * base + float(A @ lam) + delta
    ctx = {"A": A.tolist(), "lambdas": lam.tolist(), "delta": delta, "loss": base,
           "orthogonality": _pairwise_cos(Fs)}
    return heads, alpha, BoundCheck(J, rhs, _margin(J, rhs), ctx)


def pad_instance(F, D, extra, t=1e-3):
    """Append ``extra`` zero rows to ``D`` and rows of ``t`` to ``F``.

    The padded rows are exact null directions of ``D D^T`` and leave every
    logit unchanged, so orthogonal heads built on them cost nothing.
    """
    F = np.asarray(F, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    return (np.vstack([F, np.full((extra, F.shape[1]), t)]),
            np.vstack([D, np.zeros((extra, D.shape[1]))]))


# -- spectra ----------------------------------------------------------------------

def check_inverse_spectrum(S_b, S_w):
    """Max relative residual of the inverse-spectrum identities over all generalized pairs.

    For ``S_b v = g S_w v`` and ``v' = (S_b + S_w) v``:
    ``(S_b + S_w)^{-1} v' = g/(1+g) S_b^{-1} v'`` and
    ``S_b (S_b + S_w)^{-1} v' = g/(1+g) v'``.
    """
    S_b = np.asarray(S_b, dtype=np.float64)
    S_w = np.asarray(S_w, dtype=np.float64)
    fb = cholesky(S_b)
    cholesky(S_w)
    T = S_b + S_w
    ft = cholesky(T)
    gam, V = gen_sym_eig(S_b, S_w, regularizer=0.0)
    worst = 0.0
    for i in range(gam.size):
        vp = T @ V[:, i]
        ratio = gam[i] / (1.0 + gam[i])
        lhs = ft.solve(vp)
        rhs = ratio * fb.solve(vp)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)))
        lhs2 = S_b @ lhs
        worst = max(worst, float(np.linalg.norm(lhs2 - ratio * vp) / np.linalg.norm(vp)))
    return worst


def _point_ratio(p, S_b, S_w):
    den = float(p @ S_w @ p)
    if not np.any(p):
        return 0.0
    return float(p @ S_b @ p) / den


def check_jb_fisher_bound(S_b, S_w, x1, x2, T, transform="inverse"):
    """Ratio of the same/different quadratic forms for a low-Fisher-ratio pair.

    ``x1``, ``x2`` are centered points.  The premise bounds the Fisher ratio
    of the transformed points ``d'_k`` by ``T``.  ``transform="inverse"`` uses
    ``d'_k = (S_b + S_w)^{-1} x_k`` (the reading under which the band
    provably holds); ``"forward"`` uses ``d'_k = (S_b + S_w) x_k``.  The
    conclusion is ``1 - 2T <= ratio <= 1 + 6T``, encoded as
    ``|ratio - 1 - 2T| <= 4T``.
    """
    S_b = np.asarray(S_b, dtype=np.float64)
    S_w = np.asarray(S_w, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if transform not in ("inverse", "forward"):
        raise DomainError(f"unknown transform {transform!r}")
    Tm = S_b + S_w
    ft = cholesky(Tm)
    sig = []
    for k, x in enumerate((x1, x2), start=1):
        p = ft.solve(x) if transform == "inverse" else Tm @ x
        s = _point_ratio(p, S_b, S_w)
        if not s < T:
            raise PremiseError(f"point {k} has Fisher ratio {s:.6g} >= T={T:.6g}")
        sig.append(s)
    H, I = hypothesis_covariances(S_b, S_w)
    xh = np.concatenate([x1, x2])
    qI = float(cholesky(I).quad(xh))
    if qI == 0.0:
        raise DomainError("both points are zero")
    ratio = float(cholesky(H).quad(xh)) / qI
    lhs = abs(ratio - 1.0 - 2.0 * T)
    return BoundCheck(lhs, 4.0 * T, _margin(ratio),
                      {"ratio": ratio, "T": T, "fisher_ratios": sig, "transform": transform})


def check_fisher_sum_bound(classifiers, stats, theta):
    """Fisher spectrum mass is at least ``sqrt(m) theta`` for ``m`` S_w-orthogonal classifiers.

    Orthogonality and Fisher ratios are measured in ``S_w + eps I`` with the
    stats' default ``eps``, the same metric as the spectrum.
    """
    fs = [np.asarray(f, dtype=np.float64) for f in classifiers]
    if not fs:
        raise DomainError("no classifiers")
    M = stats.S_w + stats.eps * np.eye(stats.dim)
    for r in range(len(fs)):
        for s in range(r + 1, len(fs)):
            cos = abs(fs[r] @ M @ fs[s]) / math.sqrt((fs[r] @ M @ fs[r]) * (fs[s] @ M @ fs[s]))
            if cos > 1e-8:
                raise PremiseError(f"classifiers {r} and {s} are not S_w-orthogonal (cos={cos:.3g})")
    for r, f in enumerate(fs):
        sigma = fisher_ratio(f, stats)
        if sigma < theta - 1e-12 * (1.0 + abs(theta)):
            raise PremiseError(f"classifier {r} has Fisher ratio {sigma:.6g} < theta={theta:.6g}")
    l1 = fisher_spectrum(stats).l1_norm
    return BoundCheck(math.sqrt(len(fs)) * theta, l1, 1e-8 * (1.0 + abs(theta)),
                      {"l1_norm": l1, "theta": theta, "m": len(fs)})


# -- instance generators ------------------------------------------------------------

def overlapping_instance(seed, c=5, d=8, n=64, spread=1.0):
    """Full-rank representation with overlapping Gaussian classes (``d x n``, labels)."""
    rng = Rng(seed)
    means = rng.normal((d, c), scale=spread)
    y = np.arange(n) % c
    y = y[rng.permutation(n)]
    D = means[:, y] + rng.normal((d, n))
    return D, y


def optimization_instance(seed, c=5, d=8):
    """Heavily overlapping classes, so the cross-entropy minimum is attained."""
    return overlapping_instance(seed, c=c, d=d, n=128, spread=0.5)


def optimized_heads(D, y, c, seed, tol=1e-10):
    """Cross-entropy minimizer from a seeded random start."""
    d = D.shape[0]
    rng = Rng(seed)
    res = minimize_ce(D, y, c, rng.normal((d, c)), rng.normal(c), tol=tol)
    return res


def random_spd(rng, d, cond=10.0):
    Q, _ = np.linalg.qr(rng.normal((d, d)))
    w = np.exp(rng.uniform(d) * math.log(cond))
    A = (Q * w) @ Q.T
    return 0.5 * (A + A.T)


def low_ratio_pair(rng, S_b, S_w, T):
    """Two centered points whose inverse-transformed Fisher ratios are below ``T``.

    Points are combinations of ``(S_b + S_w) v_i`` over generalized
    eigenvectors with ``gamma_i < T``.
    """
    gam, V = gen_sym_eig(S_b, S_w, regularizer=0.0)
    low = np.flatnonzero(gam < T)
    if low.size == 0:
        raise PremiseError("no generalized eigenvalue below T")
    B = (S_b + S_w) @ V[:, low]
    return B @ rng.normal(low.size), B @ rng.normal(low.size)


def low_ratio_spd_pair(rng, d=6):
    """``(S_b, S_w, T)`` with a few small generalized eigenvalues below ``T``."""
    S_w = random_spd(rng, d)
    L = np.linalg.cholesky(S_w)
    Q, _ = np.linalg.qr(rng.normal((d, d)))
    gam = np.concatenate([np.exp(rng.uniform(d // 2) * math.log(1e-3)) * 1e-2,
                          1.0 + 4.0 * rng.uniform(d - d // 2)])
    S_b = L @ (Q * gam) @ Q.T @ L.T
    S_b = 0.5 * (S_b + S_b.T)
    return S_b, S_w, 0.05


# -- verification run ---------------------------------------------------------------

@dataclass(frozen=True)
class VerifyRow:
    check: str
    seed: int
    result: BoundCheck


def _instances(seed, count, tag):
    return [derive_seed(seed, tag, k) for k in range(count)]


def _dump(repro_dir, name, s, **arrays):
    if repro_dir is None:
        return
    os.makedirs(repro_dir, exist_ok=True)
    np.savez(os.path.join(repro_dir, f"{name}_{s}.npz"), **{k: np.asarray(v) for k, v in arrays.items()})


def run_all(seed=0, count=100, repro_dir=None):
    """Run every check on ``count`` seeded instances; failing instances are dumped to ``repro_dir``."""
    rows = []

    def add(name, s, chk, **arrays):
        rows.append(VerifyRow(name, s, chk))
        if not chk.holds:
            _dump(repro_dir, name, s, **arrays)

    for s in _instances(seed, count, "shift"):
        rng = Rng(s)
        D, y = overlapping_instance(s)
        F, b = rng.normal((8, 5)), rng.normal(5)
        v, sh = rng.normal(8), rng.normal()
        add("shift_invariance", s, check_shift_invariance(F, b, D, y, v, sh), F=F, b=b, D=D, y=y, v=v)

    for s in _instances(seed, max(count // 10, 1), "rank1"):
        D, y = optimization_instance(s)
        r1 = optimized_heads(D, y, 5, derive_seed(s, 1))
        r2 = optimized_heads(D, y, 5, derive_seed(s, 2))
        res = rank1_difference_residual(r1.F, r2.F)
        add("rank1_difference", s, BoundCheck(res, 0.05, 0.0, {"grad": max(r1.grad_norm, r2.grad_norm)}),
            D=D, y=y, F1=r1.F, F2=r2.F)

    for s in _instances(seed, max(count // 5, 1), "construct"):
        D, y = optimization_instance(s)
        opt = optimized_heads(D, y, 5, derive_seed(s, 1))
        F2, _, chk = construct_pair_solution(opt.F, opt.b, D, y)
        add("pair_solution_bound", s, chk, D=D, y=y, F=opt.F, b=opt.b)
        add("pair_solution_orthogonality", s,
            BoundCheck(chk.context["orthogonality"], 1e-8, 0.0), D=D, y=y, F=opt.F)
        heads, _, chk3 = construct_m_solutions(opt.F, opt.b, D, y, 3)
        add("m_solutions_bound", s, chk3, D=D, y=y, F=opt.F, b=opt.b)
        add("m_solutions_orthogonality", s,
            BoundCheck(chk3.context["orthogonality"], 1e-8, 0.0), D=D, y=y, F=opt.F)
        Fp, Dp = pad_instance(opt.F, D, 2)
        _, _, chkp = construct_m_solutions(Fp, opt.b, Dp, y, 3)
        gap = abs(chkp.lhs - 3.0 * chkp.context["loss"])
        add("padded_equality", s, BoundCheck(gap, 1e-10, 0.0), D=Dp, y=y, F=Fp, b=opt.b)

    for s in _instances(seed, count, "spectrum"):
        rng = Rng(s)
        S_b, S_w = random_spd(rng, 12), random_spd(rng, 12)
        res = check_inverse_spectrum(S_b, S_w)
        add("inverse_spectrum", s, BoundCheck(res, 1e-8, 0.0), S_b=S_b, S_w=S_w)

    for s in _instances(seed, count, "jb_fisher"):
        rng = Rng(s)
        S_b, S_w, T = low_ratio_spd_pair(rng)
        x1, x2 = low_ratio_pair(rng, S_b, S_w, T)
        add("jb_fisher_bound", s, check_jb_fisher_bound(S_b, S_w, x1, x2, T),
            S_b=S_b, S_w=S_w, x1=x1, x2=x2, T=T)

    for s in _instances(seed, count, "fisher_sum"):
        rng = Rng(s)
        D, y = overlapping_instance(s, c=6, d=8, n=96)
        st = compute_scatter(D, y, 6)
        fspec = fisher_spectrum(st)
        m = (1, 2, 3, 5)[rng.below(4)]
        fs = [fspec.vectors[:, r] for r in range(m)]
        theta = min(fisher_ratio(f, st) for f in fs)
        add("fisher_sum_bound", s, check_fisher_sum_bound(fs, st, theta), D=D, y=y)
    return rows


def rows_csv(rows):
    out = io.StringIO()
    out.write("check_name,instance_seed,lhs,rhs,slack,holds\n")
    for r in rows:
        c = r.result
        out.write(f"{r.check},{r.seed},{c.lhs:.17g},{c.rhs:.17g},{c.slack:.17g},{int(c.holds)}\n")
    return out.getvalue()


def save_rows(path, rows):
    atomic_write_text(path, rows_csv(rows))
