"""Two-layer ReLU representation network trained jointly with multiverse heads.

``D = W2 relu(W1 X + b1) + b2``; every head reads ``D``.  Training is
mini-batch SGD with momentum, with the cross-entropy averaged over the
batch.  Weight decay applies to head weights only, as in the objective.
"""
import io
import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .data import atomic_write_text
from .errors import ConfigError, DataError, DimensionError, DivergenceError
from .loss import (DEFAULT_LAMBDA, DEFAULT_WEIGHT_DECAY, MultiverseHeads, OrthoMode, PenaltyConfig,
                   head_probs, multiverse_objective, ortho_violation, prob_agreement)
from .rng import Rng
from .scatter import compute_scatter

MAGIC = b"MVL1"

# multiplier on the base learning rate for epoch e of E
SCHEDULES = {
    "constant": lambda e, E: 1.0,
    "cosine": lambda e, E: 0.5 * (1.0 + np.cos(np.pi * (e - 1) / E)),
}


@dataclass(frozen=True)
class ReprNet:
    W1: np.ndarray   # h x p
    b1: np.ndarray   # h
    W2: np.ndarray   # d x h
    b2: np.ndarray   # d

    @property
    def dims(self):
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    m: int = 1
    mode: str = "plain"
    lam: float = DEFAULT_LAMBDA
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    batch_size: int = 200
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 100
    seed: int = 0
    hidden_dim: int = 64
    repr_dim: int = 16
    schedule: str = "constant"

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if self.mode not in ("plain", "sw"):
            raise ConfigError(f"mode must be 'plain' or 'sw', got {self.mode!r}")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must be in [0, 1)")
        if self.epochs < 0 or self.hidden_dim < 1 or self.repr_dim < 1:
            raise ConfigError("epochs, hidden_dim and repr_dim must be positive")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {sorted(SCHEDULES)}")
        PenaltyConfig(self.lam, self.weight_decay)

    def step_size(self, epoch):
        """Learning rate used during ``epoch`` (1-based)."""
        return self.learning_rate * SCHEDULES[self.schedule](epoch, self.epochs)

    @property
    def penalty(self):
        return PenaltyConfig(self.lam, self.weight_decay)


@dataclass
class TrainReport:
    objective: List[float] = field(default_factory=list)
    val_error: List[float] = field(default_factory=list)
    ortho_violation: List[float] = field(default_factory=list)
    prob_agreement: List[float] = field(default_factory=list)
    net: ReprNet = None
    heads: MultiverseHeads = None

    def representation(self, X):
        return forward_repr(self.net, X)

    def to_csv(self):
        out = io.StringIO()
        out.write("epoch,objective,val_error,ortho_violation,prob_agreement\n")
        for e, row in enumerate(zip(self.objective, self.val_error,
                                    self.ortho_violation, self.prob_agreement), start=1):
            out.write(f"{e}," + ",".join(format(v, ".17g") for v in row) + "\n")
        return out.getvalue()


# -- forward / backward --------------------------------------------------------

def forward_repr(net, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != net.W1.shape[1]:
        raise DimensionError(f"input has {X.shape[0]} rows, net expects {net.W1.shape[1]}")
    H = np.maximum(net.W1 @ X + net.b1[:, None], 0.0)
    return net.W2 @ H + net.b2[:, None]


def _batch_mode(kind, D, y):
    if kind == "plain":
        return OrthoMode.plain()
    return OrthoMode.sw_ortho(compute_scatter(D, y).S_w)


@dataclass(frozen=True)
class Gradients:
    value: float
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    F: np.ndarray
    b: np.ndarray


def backward(net, heads, X, y, mode, cfg, ce_weight=1.0):
    """Objective and exact gradients of the network plus heads on one batch.

    ``mode`` is ``"plain"`` or ``"sw"``; in ``"sw"`` mode ``S_w`` is estimated
    from this batch's representations and held constant.  ``cfg`` is a
    :class:`PenaltyConfig`.  The objective is the multiverse objective of the
    batch representations, so weight decay touches the heads only.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[1] == 0:
        raise DimensionError("empty batch")
    kind = mode.kind if isinstance(mode, OrthoMode) else mode
    Z1 = net.W1 @ X + net.b1[:, None]
    H = np.maximum(Z1, 0.0)
    D = net.W2 @ H + net.b2[:, None]
    obj = multiverse_objective(heads, D, y, _batch_mode(kind, D, y), cfg, ce_weight)
    dD = obj.dD
    dW2 = dD @ H.T
    db2 = dD.sum(axis=1)
    dZ1 = (net.W2.T @ dD) * (Z1 > 0.0)
    dW1 = dZ1 @ X.T
    db1 = dZ1.sum(axis=1)
    return Gradients(obj.value, dW1, db1, dW2, db2, obj.dF, obj.db)


def objective_value(net, heads, X, y, mode, cfg, ce_weight=1.0):
    return backward(net, heads, X, y, mode, cfg, ce_weight).value


# -- training ------------------------------------------------------------------

def init_params(p, c, cfg):
    """He-style initialization from the config seed; every head gets its own draw."""
    rng = Rng(cfg.seed).spawn("init")
    h, d = cfg.hidden_dim, cfg.repr_dim
    net = ReprNet(rng.normal((h, p), scale=np.sqrt(2.0 / p)), np.zeros(h),
                  rng.normal((d, h), scale=np.sqrt(2.0 / h)), np.zeros(d))
    F = np.stack([rng.normal((d, c), scale=np.sqrt(2.0 / d)) for _ in range(cfg.m)])
    return net, MultiverseHeads(F, np.zeros((cfg.m, c)))


def predict(net, heads, X):
    """Argmax of the head-averaged probabilities."""
    return np.argmax(head_probs(heads, forward_repr(net, X)).mean(axis=0), axis=0)


def _epoch_metrics(net, heads, train, val, cfg):
    D_tr = forward_repr(net, train.features)
    kind_mode = _batch_mode(cfg.mode, D_tr, train.labels)
    pen = cfg.penalty
    obj = multiverse_objective(heads, D_tr, train.labels, kind_mode, pen, 1.0 / train.n).value
    D_va = forward_repr(net, val.features)
    err = float(np.mean(np.argmax(head_probs(heads, D_va).mean(axis=0), axis=0) != val.labels))
    return obj, err, ortho_violation(heads, kind_mode), prob_agreement(heads, D_va)


def train(train_ds, val_ds, cfg, init=None):
    """Train a representation net with ``cfg.m`` heads; returns ``(net, heads, report)``.

    Deterministic for a fixed config: initialization and the per-epoch
    shuffles derive from ``cfg.seed``.  The last short batch is kept.
    Raises :class:`DivergenceError` when the objective stops being finite.
    """
    c = train_ds.class_count
    if val_ds.features.shape[0] != train_ds.features.shape[0]:
        raise DataError("train and validation inputs have different dimensions")
    if val_ds.class_count > c:
        raise DataError("validation set has classes unknown to the heads")
    net, heads = init if init is not None else init_params(train_ds.dim, c, cfg)
    if heads.c != c or heads.m != cfg.m:
        raise ConfigError(f"heads have m={heads.m}, c={heads.c}; config/data need m={cfg.m}, c={c}")
    params = {"W1": net.W1.copy(), "b1": net.b1.copy(), "W2": net.W2.copy(),
              "b2": net.b2.copy(), "F": heads.F.copy(), "b": heads.b.copy()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    shuffle = Rng(cfg.seed).spawn("shuffle")
    pen = cfg.penalty
    X, y = train_ds.features, train_ds.labels
    n = train_ds.n
    report = TrainReport()
    mom = cfg.momentum

    def current():
        return (ReprNet(params["W1"], params["b1"], params["W2"], params["b2"]),
                MultiverseHeads(params["F"], params["b"]))

    # overflow is caught below as divergence; numpy's warnings would only duplicate it
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            lr = cfg.step_size(epoch)
            order = shuffle.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                cur_net, cur_heads = current()
                g = backward(cur_net, cur_heads, X[:, idx], y[idx], cfg.mode, pen, 1.0 / idx.size)
                if not np.isfinite(g.value):
                    raise DivergenceError(epoch, g.value)
                for k in params:
                    vel[k] = mom * vel[k] - lr * getattr(g, k)
                    params[k] = params[k] + vel[k]
                if not all(np.all(np.isfinite(v)) for v in params.values()):
                    raise DivergenceError(epoch, float("nan"))
            obj, err, ov, pa = _epoch_metrics(*current(), train_ds, val_ds, cfg)
            if not np.isfinite(obj):
                raise DivergenceError(epoch, obj)
            report.objective.append(obj)
            report.val_error.append(err)
            report.ortho_violation.append(ov)
            report.prob_agreement.append(pa)
    net, heads = current()
    report.net, report.heads = net, heads
    return net, heads, report


# -- checkpoints ---------------------------------------------------------------

def checkpoint_bytes(net, heads):
    """``MVL1``, dims ``(p, h, d, c, m)`` as little-endian int64, then float64 parameters.

    Parameter order: W1 (h x p), b1, W2 (d x h), b2, then for each head
    F^r (d x c) and b^r, matrices row-major.
    """
    p, h, d = net.dims
    c, m = heads.c, heads.m
    parts = [MAGIC, struct.pack("<5q", p, h, d, c, m)]
    arrays = [net.W1, net.b1, net.W2, net.b2]
    for r in range(m):
        arrays += [heads.F[r], heads.b[r]]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays]
    return b"".join(parts)


def save_checkpoint(path, net, heads):
    import os
    import tempfile
    data = checkpoint_bytes(net, heads)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a model checkpoint (bad magic)")
    try:
        p, h, d, c, m = struct.unpack_from("<5q", data, 4)
    except struct.error:
        raise DataError(f"{path}: truncated header") from None
    shapes = [(h, p), (h,), (d, h), (d,)] + [(d, c), (c,)] * m
    expected = 44 + 8 * sum(int(np.prod(s)) for s in shapes)
    if len(data) != expected or min(p, h, d, c, m) < 1:
        raise DataError(f"{path}: size {len(data)} does not match dims {(p, h, d, c, m)}")
    off = 44
    arrays = []
    for s in shapes:
        k = int(np.prod(s))
        arrays.append(np.frombuffer(data, dtype="<f8", count=k, offset=off).reshape(s).astype(np.float64))
        off += 8 * k
    net = ReprNet(*arrays[:4])
    heads = MultiverseHeads(np.stack(arrays[4::2]), np.stack(arrays[5::2]))
    return net, heads


def save_report(path, report):
    atomic_write_text(path, report.to_csv())


__all__ = ["ReprNet", "TrainConfig", "TrainReport", "forward_repr", "backward", "train",
           "init_params", "predict", "save_checkpoint", "load_checkpoint", "checkpoint_bytes"]
