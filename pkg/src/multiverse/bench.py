"""Transfer experiment: train M1 and multiverse variants on source classes, analyze target classes.

One run per ``(seed, m)``.  For a given seed every variant sees the same
data, split, pairs and network initialization, so differences come from
the multiverse loss alone.
"""
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import numpy as np

from .data import atomic_write_text, gen_gaussian_mixture, sample_pairs, split_transfer
from .jb import cosine_scores, evaluate_pairs, jb_fit, jb_scorer
from .linalg import EFFECTIVE_RANK_TAU, gram_spectrum
from .rng import derive_seed
from .scatter import compute_scatter, fisher_spectrum
from .trainer import TrainConfig, forward_repr, train


@dataclass(frozen=True)
class BenchConfig:
    class_count: int = 10
    input_dim: int = 8
    per_class: int = 3000
    center_scale: float = 1.0
    noise_scale: float = 1.0
    source_classes: int = 8
    val_fraction: float = 0.2
    multiplicities: Tuple[int, ...] = (1, 3, 5)
    mode: str = "plain"
    lam: float = 0.005
    weight_decay: float = 0.0005
    batch_size: int = 200
    learning_rate: float = 0.05
    schedule: str = "cosine"
    momentum: float = 0.9
    epochs: int = 100
    hidden_dim: int = 64
    repr_dim: int = 16
    pairs_same: int = 300
    pairs_diff: int = 300
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    workers: int = 4


@dataclass
class RunResult:
    seed: int
    m: int
    val_error: float
    prob_agreement: float
    ortho_violation: float
    effective_rank: int
    tiny_eigenvalues: int
    fisher_l1: float
    jb_accuracy: float
    cosine_accuracy: float
    gram_values: np.ndarray = field(repr=False)
    fisher_values: np.ndarray = field(repr=False)
    objective: List[float] = field(repr=False, default_factory=list)


def train_config(cfg, m, seed):
    return TrainConfig(m=m, mode=cfg.mode, lam=cfg.lam, weight_decay=cfg.weight_decay,
                       batch_size=cfg.batch_size, learning_rate=cfg.learning_rate, schedule=cfg.schedule,
                       momentum=cfg.momentum, epochs=cfg.epochs, seed=derive_seed(seed, "train"),
                       hidden_dim=cfg.hidden_dim, repr_dim=cfg.repr_dim)


def prepare(cfg, seed):
    """Dataset split and target pairs for one seed: ``(train, val, target, eval_pairs, cal_pairs)``."""
    ds = gen_gaussian_mixture(cfg.class_count, cfg.input_dim, cfg.per_class,
                              cfg.center_scale, cfg.noise_scale, derive_seed(seed, "data"))
    tr, va, tg = split_transfer(ds, cfg.source_classes, cfg.val_fraction, derive_seed(seed, "split"))
    return (tr, va, tg) + target_pairs(cfg, seed, tg)


def target_pairs(cfg, seed, tg):
    """Evaluation and calibration pairs on the target set, disjoint from each other."""
    cal = sample_pairs(tg, cfg.pairs_same, cfg.pairs_diff, derive_seed(seed, "calibration"))
    ev = sample_pairs(tg, cfg.pairs_same, cfg.pairs_diff, derive_seed(seed, "pairs"), exclude=cal)
    return ev, cal


def analyze(net, heads, report, va, tg, ev, cal, seed, m, tau=EFFECTIVE_RANK_TAU):
    D_tg = forward_repr(net, tg.features)
    eig, rank = gram_spectrum(D_tg, tau)
    lam1 = eig.values[0]
    tiny = int(np.sum(eig.values <= tau * lam1)) if lam1 > 0 else eig.values.size
    fs = fisher_spectrum(compute_scatter(D_tg, tg.labels, tg.class_count))
    # JB is fitted on source validation representations, then applied to target pairs
    jb = jb_fit(forward_repr(net, va.features), va.labels)
    emb = tg.with_features(D_tg)
    jb_acc = evaluate_pairs(jb_scorer(jb), emb, ev, cal).accuracy
    cos_acc = evaluate_pairs(cosine_scores, emb, ev, cal).accuracy
    return RunResult(seed, m, report.val_error[-1] if report.val_error else float("nan"),
                     report.prob_agreement[-1] if report.prob_agreement else 0.0,
                     report.ortho_violation[-1] if report.ortho_violation else 0.0,
                     rank, tiny, fs.l1_norm, jb_acc, cos_acc, eig.values, fs.values,
                     list(report.objective))


def run_one(cfg, seed, m, prepared=None):
    tr, va, tg, ev, cal = prepared or prepare(cfg, seed)
    net, heads, report = train(tr, va, train_config(cfg, m, seed))
    return analyze(net, heads, report, va, tg, ev, cal, seed, m)


def run_bench(cfg):
    """All ``(seed, m)`` runs, ordered by seed then multiplicity regardless of scheduling."""
    jobs = [(s, m) for s in cfg.seeds for m in cfg.multiplicities]
    prepared = {s: prepare(cfg, s) for s in cfg.seeds}
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            return list(ex.map(lambda j: run_one(cfg, j[0], j[1], prepared[j[0]]), jobs))
    return [run_one(cfg, s, m, prepared[s]) for s, m in jobs]


# -- summaries and CSV -----------------------------------------------------------

SUMMARY_FIELDS = ("val_error", "prob_agreement", "ortho_violation", "effective_rank",
                  "tiny_eigenvalues", "fisher_l1", "jb_accuracy", "cosine_accuracy")


def _g(x):
    return format(float(x), ".17g")


def runs_csv(results):
    out = io.StringIO()
    out.write("seed,m," + ",".join(SUMMARY_FIELDS) + "\n")
    for r in results:
        out.write(f"{r.seed},{r.m}," + ",".join(_g(getattr(r, f)) for f in SUMMARY_FIELDS) + "\n")
    return out.getvalue()


def spectra_csv(results):
    out = io.StringIO()
    out.write("seed,m,kind,index,value\n")
    for r in results:
        for kind, vals in (("gram", r.gram_values), ("fisher", r.fisher_values)):
            for i, v in enumerate(vals):
                out.write(f"{r.seed},{r.m},{kind},{i},{_g(v)}\n")
    return out.getvalue()


def medians(results):
    """Per-multiplicity median of every summary field."""
    out = {}
    for m in sorted({r.m for r in results}):
        rows = [r for r in results if r.m == m]
        out[m] = {f: float(np.median([getattr(r, f) for r in rows])) for f in SUMMARY_FIELDS}
    return out


def medians_csv(results):
    out = io.StringIO()
    out.write("m," + ",".join(SUMMARY_FIELDS) + "\n")
    for m, row in medians(results).items():
        out.write(f"{m}," + ",".join(_g(row[f]) for f in SUMMARY_FIELDS) + "\n")
    return out.getvalue()


def write_bench(results, out_dir):
    import os
    atomic_write_text(os.path.join(out_dir, "bench_runs.csv"), runs_csv(results))
    atomic_write_text(os.path.join(out_dir, "bench_spectra.csv"), spectra_csv(results))
    atomic_write_text(os.path.join(out_dir, "bench_summary.csv"), medians_csv(results))


def config_dict(cfg):
    d = asdict(cfg)
    d["multiplicities"] = list(cfg.multiplicities)
    d["seeds"] = list(cfg.seeds)
    return d
