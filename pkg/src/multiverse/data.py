"""Synthetic datasets, CSV ingestion, transfer splits and verification pairs.

Feature matrices are stored column-per-sample (``p x n``), matching the
``d x n`` representation matrices used everywhere else.
"""
import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ExhaustionError, ParseError, SchemaError, SplitError
from .rng import Rng


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray          # p x n
    labels: np.ndarray            # n ints in [0, class_count)
    class_count: int
    label_names: tuple = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[1] != y.shape[0]:
            raise SchemaError(f"features {X.shape} and labels {y.shape} disagree")
        if not np.all(np.isfinite(X)):
            raise SchemaError("features contain non-finite values")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise SchemaError("labels outside [0, class_count)")
        present = np.unique(y)
        if present.size != self.class_count:
            missing = sorted(set(range(self.class_count)) - set(present.tolist()))
            raise SchemaError(f"classes {missing} have no samples")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.features.shape[0]

    def subset(self, idx):
        """Samples ``idx`` with labels re-densified to ``[0, c')`` in ascending order."""
        idx = np.asarray(idx, dtype=np.int64)
        labels, names = densify(self.labels[idx])
        if self.label_names is not None:
            names = tuple(self.label_names[k] for k in names)
        return LabeledDataset(self.features[:, idx], labels, len(names), names)

    def with_features(self, features):
        return LabeledDataset(features, self.labels, self.class_count, self.label_names)


def densify(labels):
    """Map arbitrary integer labels to ``0..c-1`` preserving order; returns (labels, originals)."""
    labels = np.asarray(labels)
    uniq, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64), tuple(int(u) for u in uniq)


@dataclass(frozen=True)
class PairSet:
    index_a: np.ndarray
    index_b: np.ndarray
    is_same: np.ndarray

    def __len__(self):
        return self.index_a.shape[0]

    def __iter__(self):
        return iter(zip(self.index_a.tolist(), self.index_b.tolist(), self.is_same.tolist()))


def gen_gaussian_mixture(class_count, input_dim, per_class, center_scale, noise_scale, seed):
    """``per_class`` samples around each of ``class_count`` random centers.

    Class ``j`` draws ``mu_j ~ center_scale * N(0, I)`` then samples
    ``mu_j + noise_scale * N(0, I)``.  Samples are ordered class by class.
    """
    if class_count < 2 or input_dim < 2 or per_class < 1:
        raise ConfigError("need class_count >= 2, input_dim >= 2, per_class >= 1")
    rng = Rng(seed)
    centers = rng.normal((input_dim, class_count), scale=center_scale)
    noise = rng.normal((input_dim, class_count * per_class), scale=noise_scale)
    labels = np.repeat(np.arange(class_count), per_class)
    X = centers[:, labels] + noise
    return LabeledDataset(X, labels, class_count, tuple(range(class_count)))


# -- CSV ---------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_to_csv(ds, original_labels=True):
    names = ds.label_names if (original_labels and ds.label_names is not None) else None
    out = io.StringIO()
    out.write(",".join(["label"] + [f"f{k}" for k in range(ds.dim)]) + "\n")
    X = ds.features
    for i in range(ds.n):
        lab = names[ds.labels[i]] if names is not None else int(ds.labels[i])
        out.write(",".join([str(lab)] + [_fmt(v) for v in X[:, i]]) + "\n")
    return out.getvalue()


def save_csv(ds, path, original_labels=True):
    """Write ``label,f0,...`` rows with 17 significant digits."""
    atomic_write_text(path, dataset_to_csv(ds, original_labels))


def load_csv(path):
    """Read a dataset written by :func:`save_csv` (or any file in that schema).

    Labels are re-indexed densely; the original label values are kept in
    ``label_names`` in ascending order.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("missing header", line=1)
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "label":
        raise ParseError("header must start with 'label'", line=1)
    p = len(header) - 1
    if p < 1:
        raise SchemaError("no feature columns")
    expected = [f"f{k}" for k in range(p)]
    if header[1:] != expected:
        raise ParseError(f"feature columns must be named f0..f{p - 1}", line=1)
    labels, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = next(csv.reader([line]))
        if len(parts) != p + 1:
            raise SchemaError(f"line {lineno}: expected {p + 1} columns, got {len(parts)}")
        try:
            labels.append(int(parts[0]))
        except ValueError:
            raise ParseError(f"label {parts[0]!r} is not an integer", line=lineno) from None
        try:
            row = [float(v) for v in parts[1:]]
        except ValueError:
            raise ParseError("non-numeric feature", line=lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite feature", line=lineno)
        rows.append(row)
    if not rows:
        raise SchemaError("file has no samples")
    dense, names = densify(np.array(labels))
    X = np.array(rows, dtype=np.float64).T
    return LabeledDataset(X, dense, len(names), names)


# -- splits and pairs ---------------------------------------------------------

def split_transfer(ds, source_classes, val_fraction, seed):
    """Split into (source_train, source_val, target).

    Classes ``[0, source_classes)`` are split per class, with
    ``ceil(val_fraction * n_j)`` validation samples clamped to ``[1, n_j - 1]``;
    the remaining classes form the target set unchanged.  Each partition has
    its labels re-densified.  :func:`split_transfer_indices` returns the
    underlying index arrays.
    """
    tr, va, tg = split_transfer_indices(ds, source_classes, val_fraction, seed)
    return ds.subset(tr), ds.subset(va), ds.subset(tg)


def split_transfer_indices(ds, source_classes, val_fraction, seed):
    c = ds.class_count
    if not 1 <= source_classes < c:
        raise ConfigError(f"source_classes must be in [1, {c})")
    if not 0.0 < val_fraction < 1.0:
        raise ConfigError("val_fraction must be in (0, 1)")
    rng = Rng(seed)
    train, val = [], []
    for j in range(source_classes):
        idx = np.flatnonzero(ds.labels == j)
        n_j = idx.size
        if n_j < 2:
            raise SplitError(f"source class {j} has {n_j} sample(s); need at least 2")
        # 1e-9 keeps e.g. ceil(0.1 * 90) at 9 despite float rounding
        n_val = min(max(math.ceil(val_fraction * n_j - 1e-9), 1), n_j - 1)
        perm = idx[rng.permutation(n_j)]
        val.append(np.sort(perm[:n_val]))
        train.append(np.sort(perm[n_val:]))
    target = np.flatnonzero(ds.labels >= source_classes)
    return np.concatenate(train), np.concatenate(val), target


def _count_pairs(labels):
    counts = np.bincount(labels)
    same = int(np.sum(counts * (counts - 1) // 2))
    n = labels.size
    return same, n * (n - 1) // 2 - same


def sample_pairs(ds, n_same, n_diff, seed, exclude=None):
    """Draw distinct unordered same-class and different-class index pairs.

    Pairs are sampled uniformly over all eligible pairs with duplicate
    rejection.  ``exclude`` is an optional PairSet whose pairs may not be
    drawn again (used to keep calibration and evaluation pairs disjoint).
    """
    y = ds.labels
    n = y.size
    avail_same, avail_diff = _count_pairs(y)
    taken = set()
    if exclude is not None:
        for a, b, s in exclude:
            taken.add((min(a, b), max(a, b)))
    ex_same = sum(1 for a, b, s in (exclude or []) if s)
    ex_diff = len(exclude or []) - ex_same
    if n_same > avail_same - ex_same or n_diff > avail_diff - ex_diff:
        raise ExhaustionError(
            f"requested {n_same} same / {n_diff} different pairs; "
            f"{avail_same - ex_same} / {avail_diff - ex_diff} available")
    rng = Rng(seed)
    by_class = [np.flatnonzero(y == j) for j in range(ds.class_count)]
    eligible = [j for j, idx in enumerate(by_class) if idx.size >= 2]
    # weight classes by their number of within-class pairs: uniform over pairs
    weights = np.array([by_class[j].size * (by_class[j].size - 1) // 2 for j in eligible],
                       dtype=np.float64)
    cum = np.cumsum(weights) / weights.sum() if eligible else None

    out_a, out_b, out_s = [], [], []
    need = n_same
    while need:
        j = eligible[int(np.searchsorted(cum, rng.uniform(), side="right"))] \
            if len(eligible) > 1 else eligible[0]
        idx = by_class[j]
        a = int(idx[rng.below(idx.size)])
        b = int(idx[rng.below(idx.size)])
        key = (min(a, b), max(a, b))
        if a == b or key in taken:
            continue
        taken.add(key)
        out_a.append(key[0]); out_b.append(key[1]); out_s.append(True)
        need -= 1
    need = n_diff
    while need:
        a = rng.below(n)
        b = rng.below(n)
        if y[a] == y[b]:
            continue
        key = (min(a, b), max(a, b))
        if key in taken:
            continue
        taken.add(key)
        out_a.append(key[0]); out_b.append(key[1]); out_s.append(False)
        need -= 1
    return PairSet(np.array(out_a, dtype=np.int64), np.array(out_b, dtype=np.int64),
                   np.array(out_s, dtype=bool))
