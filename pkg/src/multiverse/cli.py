"""``multiverse`` command line.

Every subcommand reads an optional JSON config, derives all randomness from
its seed (``--seed`` overrides), and writes its artifacts into ``--out``.

Exit codes: 0 ok, 1 usage/config, 2 data or I/O, 3 numerical failure,
4 a verification check failed.
"""
import argparse
import json
import os
import sys
from dataclasses import replace

import jsonschema

from . import BACKEND, __version__
from .bench import BenchConfig, medians, run_bench, target_pairs, train_config, write_bench
from .data import atomic_write_text, dataset_to_csv, gen_gaussian_mixture, load_csv, split_transfer
from .errors import ConfigError, DataError, NumericalError
from .jb import cosine_scores, evaluate_pairs, jb_fit, jb_scorer, save_scores
from .reports import emit_spectrum_svg, spectrum_report, summary_csv
from .rng import derive_seed
from .scatter import compute_scatter, fisher_spectrum
from .theorems import rows_csv, run_all
from .trainer import forward_repr, load_checkpoint, save_checkpoint, save_report, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4

_POS_INT = {"type": "integer", "minimum": 1}


def _obj(props, **extra):
    return {"type": "object", "additionalProperties": False, "properties": props, **extra}


CONFIG_SCHEMA = _obj({
    "seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"},
    "data": _obj({
        "class_count": {"type": "integer", "minimum": 2},
        "input_dim": {"type": "integer", "minimum": 2},
        "per_class": _POS_INT,
        "center_scale": {"type": "number", "exclusiveMinimum": 0},
        "noise_scale": {"type": "number", "exclusiveMinimum": 0},
    }),
    "split": _obj({
        "source_classes": _POS_INT,
        "val_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    }),
    "train": _obj({
        "m": _POS_INT,
        "mode": {"enum": ["plain", "sw"]},
        "lam": {"type": "number", "minimum": 0},
        "weight_decay": {"type": "number", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 2},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "schedule": {"enum": ["constant", "cosine"]},
        "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "epochs": _POS_INT,
        "hidden_dim": _POS_INT,
        "repr_dim": _POS_INT,
    }),
    "pairs": _obj({"n_same": _POS_INT, "n_diff": _POS_INT}),
    "bench": _obj({
        "multiplicities": {"type": "array", "items": _POS_INT, "minItems": 1},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "workers": _POS_INT,
    }),
    "verify": _obj({"instances": _POS_INT}),
})

# config section -> BenchConfig field names
_FIELDS = {
    "data": {k: k for k in ("class_count", "input_dim", "per_class", "center_scale", "noise_scale")},
    "split": {"source_classes": "source_classes", "val_fraction": "val_fraction"},
    "train": {k: k for k in ("mode", "lam", "weight_decay", "batch_size", "learning_rate",
                             "schedule", "momentum", "epochs", "hidden_dim", "repr_dim")},
    "pairs": {"n_same": "pairs_same", "n_diff": "pairs_diff"},
    "bench": {"multiplicities": "multiplicities", "seeds": "seeds", "workers": "workers"},
}


class UsageError(Exception):
    pass


class Settings:
    def __init__(self, doc, seed_override, out_override):
        jsonschema.validate(doc, CONFIG_SCHEMA)
        kw = {}
        for section, fields in _FIELDS.items():
            for key, name in fields.items():
                if key in doc.get(section, {}):
                    val = doc[section][key]
                    kw[name] = tuple(val) if isinstance(val, list) else val
        self.bench = replace(BenchConfig(), **kw)
        if self.bench.source_classes >= self.bench.class_count:
            raise ConfigError("split.source_classes must be smaller than data.class_count")
        self.m = doc.get("train", {}).get("m", 1)
        self.seed = seed_override if seed_override is not None else doc.get("seed", 0)
        self.out = out_override or doc.get("output_dir", "out")
        self.instances = doc.get("verify", {}).get("instances", 100)

    def path(self, name):
        return os.path.join(self.out, name)


def load_settings(args):
    doc = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
    if args.seed is not None and args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    return Settings(doc, args.seed, args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _log(msg):
    print(msg, file=sys.stderr)


# -- subcommands ------------------------------------------------------------------

def _dataset(st, args):
    if getattr(args, "data", None):
        return load_csv(args.data)
    b = st.bench
    return gen_gaussian_mixture(b.class_count, b.input_dim, b.per_class, b.center_scale,
                                b.noise_scale, derive_seed(st.seed, "data"))


def _split(st, ds):
    b = st.bench
    if b.source_classes >= ds.class_count:
        raise DataError(f"dataset has {ds.class_count} classes; cannot hold out beyond {b.source_classes}")
    return split_transfer(ds, b.source_classes, b.val_fraction, derive_seed(st.seed, "split"))


def cmd_gen_data(st, args):
    ds = _dataset(st, args)
    path = st.path("dataset.csv")
    atomic_write_text(path, dataset_to_csv(ds))
    _log(f"wrote {path} ({ds.n} samples, {ds.class_count} classes)")


def cmd_train(st, args):
    tr, va, _ = _split(st, _dataset(st, args))
    cfg = train_config(st.bench, st.m, st.seed)
    net, heads, report = train(tr, va, cfg)
    save_checkpoint(st.path("model.mvl"), net, heads)
    save_report(st.path("train_report.csv"), report)
    _log(f"m={st.m}: final objective {report.objective[-1]:.6g}, val error {report.val_error[-1]:.4f}, "
         f"ortho violation {report.ortho_violation[-1]:.3g}")


def cmd_embed(st, args):
    net, _ = load_checkpoint(args.model)
    ds = _dataset(st, args)
    if getattr(args, "target_only", False):
        ds = _split(st, ds)[2]
    emb = ds.with_features(forward_repr(net, ds.features))
    path = st.path(f"{args.name}.csv")
    atomic_write_text(path, dataset_to_csv(emb))
    _log(f"wrote {path}")


def _named_paths(items):
    out = []
    for item in items:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = os.path.splitext(os.path.basename(item))[0], item
        out.append((name, path))
    return out


def cmd_spectrum(st, args):
    reports = []
    for name, path in _named_paths(args.embeddings):
        ds = load_csv(path)
        reports.append(spectrum_report(name, ds.features, ds.labels, ds.class_count))
    written = emit_spectrum_svg(reports, st.path("spectrum"))
    atomic_write_text(st.path("spectrum_summary.csv"), summary_csv(reports))
    for r in reports:
        _log(f"{r.method}: effective rank {r.effective_rank}, Fisher l1 {r.fisher_l1:.6g}")
    _log("wrote " + ", ".join(written))


def cmd_fisher(st, args):
    ds = load_csv(args.embeddings)
    fs = fisher_spectrum(compute_scatter(ds.features, ds.labels, ds.class_count))
    lines = ["index,value"] + [f"{i},{v:.17g}" for i, v in enumerate(fs.values)]
    atomic_write_text(st.path("fisher.csv"), "\n".join(lines) + "\n")
    print(f"l1_norm {fs.l1_norm:.17g}")


def cmd_eval_pairs(st, args):
    net, _ = load_checkpoint(args.model)
    tr, va, tg = _split(st, _dataset(st, args))
    ev, cal = target_pairs(st.bench, st.seed, tg)
    D_tg = forward_repr(net, tg.features)
    emb = tg.with_features(D_tg)
    model = jb_fit(forward_repr(net, va.features), va.labels)
    mu = D_tg.mean(axis=1) if args.recenter else None
    rows = ["method,accuracy,threshold,calibration_accuracy"]
    for name, scorer in (("jb", jb_scorer(model, mu)), ("cosine", cosine_scores)):
        res = evaluate_pairs(scorer, emb, ev, cal)
        save_scores(st.path(f"pair_scores_{name}.csv"), ev, res.scores)
        rows.append(f"{name},{res.accuracy:.17g},{res.threshold:.17g},{res.calibration_accuracy:.17g}")
        _log(f"{name}: accuracy {res.accuracy:.4f}")
    atomic_write_text(st.path("verification.csv"), "\n".join(rows) + "\n")


def cmd_verify(st, args):
    repro = st.path("repro")
    rows = run_all(st.seed, st.instances, repro_dir=repro)
    atomic_write_text(st.path("verify.csv"), rows_csv(rows))
    failed = [r for r in rows if not r.result.holds]
    names = sorted({r.check for r in rows})
    for n in names:
        sub = [r for r in rows if r.check == n]
        ok = sum(r.result.holds for r in sub)
        _log(f"{'PASS' if ok == len(sub) else 'FAIL'} {n}: {ok}/{len(sub)}")
    if failed:
        _log(f"{len(failed)} check(s) failed; instances dumped to {repro}")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_bench(st, args):
    cfg = replace(st.bench, seeds=st.bench.seeds if args.seed is None else (st.seed,))
    results = run_bench(cfg)
    write_bench(results, st.out)
    for m, row in medians(results).items():
        _log(f"M{m}: " + ", ".join(f"{k}={v:.4g}" for k, v in row.items()))


COMMANDS = {
    "gen-data": (cmd_gen_data, "generate the synthetic Gaussian-mixture dataset"),
    "train": (cmd_train, "train a representation with m heads on the source classes"),
    "embed": (cmd_embed, "dump representations of a dataset through a checkpoint"),
    "spectrum": (cmd_spectrum, "gram and Fisher spectra of one or more embedding files"),
    "fisher": (cmd_fisher, "Fisher spectrum of an embedding file"),
    "eval-pairs": (cmd_eval_pairs, "same/not-same accuracy on target pairs (JB and cosine)"),
    "verify": (cmd_verify, "run every theorem check; exit 4 if any fails"),
    "bench": (cmd_bench, "M1 versus multiverse comparison over seeds"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory (default: config output_dir or ./out)")
    p = _Parser(prog="multiverse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, parents=[common])
        if name in ("gen-data", "train", "embed", "eval-pairs"):
            sp.add_argument("--data", help="dataset CSV (default: generate from config)")
        if name in ("embed", "eval-pairs"):
            sp.add_argument("--model", required=True, help="checkpoint written by train")
        if name == "embed":
            sp.add_argument("--name", default="embeddings", help="output file stem")
            sp.add_argument("--target-only", action="store_true", help="embed only held-out classes")
        if name == "spectrum":
            sp.add_argument("embeddings", nargs="+", help="NAME=PATH embedding CSVs")
        if name == "fisher":
            sp.add_argument("embeddings", help="embedding CSV")
        if name == "eval-pairs":
            sp.add_argument("--recenter", action="store_true",
                            help="center JB scores on target statistics instead of source")
    return p


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
        st = load_settings(args)
        code = COMMANDS[args.command][0](st, args)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        _log(str(exc))
        return EXIT_USAGE
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        _log(f"config error at {where}: {exc.message}")
        return EXIT_USAGE
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except NumericalError as exc:
        _log(f"numerical failure: {exc}")
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
