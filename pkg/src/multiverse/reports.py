"""Spectrum reports: sorted gram and Fisher eigenvalues per method, as CSV and SVG.

The CSV is the exact artifact; the SVG is a log-scale overlay drawn by hand.
"""
import io
import math
import os
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .data import atomic_write_text
from .errors import ConfigError
from .linalg import gram_spectrum
from .scatter import compute_scatter, fisher_spectrum

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2")
DASHES = ("", "6,3", "2,3", "8,3,2,3")


@dataclass(frozen=True)
class SpectrumReport:
    method: str
    gram_values: np.ndarray
    fisher_values: np.ndarray
    effective_rank: int
    fisher_l1: float

    def series(self, kind):
        return {"gram": self.gram_values, "fisher": self.fisher_values}[kind]


def spectrum_report(method, D, y, class_count=None):
    """Report for representation ``D`` (``d x n``) with labels ``y``."""
    eig, rank = gram_spectrum(D)
    fs = fisher_spectrum(compute_scatter(D, y, class_count))
    return SpectrumReport(method, eig.values, fs.values, rank, fs.l1_norm)


def reports_csv(reports):
    out = io.StringIO()
    out.write("method,kind,index,value\n")
    for r in reports:
        for kind in ("gram", "fisher"):
            for i, v in enumerate(r.series(kind)):
                out.write(f"{r.method},{kind},{i},{format(float(v), '.17g')}\n")
    return out.getvalue()


def summary_csv(reports):
    out = io.StringIO()
    out.write("method,effective_rank,fisher_l1\n")
    for r in reports:
        out.write(f"{r.method},{r.effective_rank},{format(float(r.fisher_l1), '.17g')}\n")
    return out.getvalue()


def _fmt(x):
    return f"{x:.2f}".rstrip("0").rstrip(".")


def spectrum_svg(reports, kind, width=480, height=320):
    """Log-y polyline per method; non-positive values are drawn at the plot floor."""
    if not reports:
        raise ConfigError("no reports to plot")
    series = [np.asarray(r.series(kind), dtype=np.float64) for r in reports]
    if any(s.size == 0 for s in series):
        raise ConfigError("empty eigenvalue list")
    positive = np.concatenate([s[s > 0] for s in series]) if any(np.any(s > 0) for s in series) \
        else np.array([1.0])
    hi = math.log10(positive.max())
    lo = math.log10(positive.min())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    floor = lo
    n = max(s.size for s in series)
    left, right, top, bottom = 60, 120, 20, 40
    pw, ph = width - left - right, height - top - bottom

    def px(i):
        return left + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        e = math.log10(v) if v > 0 else floor
        return top + ph * (hi - e) / (hi - lo)

    title = {"gram": "Gram spectrum (eigenvalues of D D^T)",
             "fisher": "Fisher spectrum (generalized eigenvalues)"}[kind]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{left}" y="14" font-family="sans-serif" font-size="12">{escape(title)}</text>',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(math.ceil(lo), math.floor(hi) + 1):
        y = _fmt(py(10.0 ** e))
        parts.append(f'<line x1="{left - 4}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
        parts.append(f'<text x="{left - 6}" y="{y}" font-family="sans-serif" font-size="10" '
                     f'text-anchor="end" dominant-baseline="middle">1e{e}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 8}" font-family="sans-serif" '
                 f'font-size="10" text-anchor="middle">index (sorted descending)</text>')
    for k, (r, s) in enumerate(zip(reports, series)):
        color = COLORS[k % len(COLORS)]
        dash = DASHES[k % len(DASHES)]
        pts = " ".join(f"{_fmt(px(i))},{_fmt(py(v))}" for i, v in enumerate(s))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(f'<polyline class="series" data-method="{escape(r.method)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = top + 14 * k + 8
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        parts.append(f'<text x="{left + pw + 34}" y="{ly}" font-family="sans-serif" font-size="10" '
                     f'dominant-baseline="middle">{escape(r.method)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_spectrum_svg(reports, path):
    """Write ``<stem>_gram.svg``, ``<stem>_fisher.svg`` and ``<stem>.csv`` next to ``path``.

    Returns the written paths.
    """
    if not reports:
        raise ConfigError("no reports to plot")
    stem = os.path.splitext(os.fspath(path))[0]
    written = []
    for kind in ("gram", "fisher"):
        p = f"{stem}_{kind}.svg"
        atomic_write_text(p, spectrum_svg(reports, kind))
        written.append(p)
    atomic_write_text(stem + ".csv", reports_csv(reports))
    written.append(stem + ".csv")
    return written
