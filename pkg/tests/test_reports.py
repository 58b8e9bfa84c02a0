import re

import numpy as np
import pytest

from multiverse.errors import ConfigError
from multiverse.reports import (SpectrumReport, emit_spectrum_svg, reports_csv, spectrum_report,
                                spectrum_svg, summary_csv)


def report(name, gram, fisher):
    return SpectrumReport(name, np.asarray(gram, float), np.asarray(fisher, float), 0, float(np.sum(fisher)))


def polylines(svg):
    return re.findall(r'data-method="([^"]*)"[^>]*points="([^"]*)"', svg)


def test_report_from_representation():
    r = np.random.default_rng(0)
    y = np.repeat(np.arange(3), 20)
    D = r.normal(size=(5, 3))[:, y] * 3 + r.normal(size=(5, 60))
    rep = spectrum_report("M1", D, y, 3)
    assert rep.gram_values.size == 5 and rep.fisher_values.size == 5
    assert np.all(np.diff(rep.gram_values) <= 0) and np.all(np.diff(rep.fisher_values) <= 0)
    assert rep.effective_rank == 5
    assert rep.fisher_l1 == pytest.approx(rep.fisher_values.sum())


def test_csv_layout():
    text = reports_csv([report("A", [3.0, 1.0], [0.5, 0.25])])
    assert text.splitlines() == ["method,kind,index,value", "A,gram,0,3", "A,gram,1,1",
                                 "A,fisher,0,0.5", "A,fisher,1,0.25"]
    assert summary_csv([report("A", [3.0], [0.5])]).splitlines()[1] == "A,0,0.5"


def test_single_report_svg():
    svg = spectrum_svg([report("only", [100.0, 10.0, 1.0], [1.0, 1.0, 1.0])], "gram")
    lines = polylines(svg)
    assert [m for m, _ in lines] == ["only"]
    ys = [float(p.split(",")[1]) for p in lines[0][1].split()]
    # log scale: equal decades give equal steps, spanning the plot box
    assert ys[1] - ys[0] == pytest.approx(ys[2] - ys[1])
    assert min(ys) == pytest.approx(20.0) and max(ys) == pytest.approx(280.0)
    assert ">only</text>" in svg


def test_overlay_matches_csv(tmp_path):
    reps = [report(f"M{m}", np.geomspace(10, 10 ** -m, 4), np.geomspace(2, 0.01 * m, 4))
            for m in (1, 3, 5)]
    written = emit_spectrum_svg(reps, tmp_path / "spectra.svg")
    assert [p.rsplit("/", 1)[1] for p in written] == ["spectra_gram.svg", "spectra_fisher.svg", "spectra.csv"]
    csv_rows = (tmp_path / "spectra.csv").read_text().splitlines()[1:]
    for kind in ("gram", "fisher"):
        svg = (tmp_path / f"spectra_{kind}.svg").read_text()
        lines = polylines(svg)
        assert [m for m, _ in lines] == ["M1", "M3", "M5"]
        for name, pts in lines:
            vals = [float(r.split(",")[3]) for r in csv_rows if r.startswith(f"{name},{kind},")]
            ys = [float(p.split(",")[1]) for p in pts.split()]
            # higher value, higher on the page
            assert np.all(np.argsort(ys) == np.argsort(-np.asarray(vals)))


def test_non_positive_values_sit_on_the_floor():
    svg = spectrum_svg([report("z", [1.0, 0.0, -1e-17], [1.0, 0.5, 0.1])], "gram")
    ys = [float(p.split(",")[1]) for p in polylines(svg)[0][1].split()]
    assert ys[1] == ys[2]


def test_empty_inputs():
    with pytest.raises(ConfigError):
        spectrum_svg([], "gram")
    with pytest.raises(ConfigError):
        spectrum_svg([report("e", [], [])], "fisher")
    with pytest.raises(ConfigError):
        emit_spectrum_svg([], "x.svg")


def test_method_names_are_escaped():
    svg = spectrum_svg([report("a<b&c", [1.0, 2.0], [1.0, 1.0])], "fisher")
    assert "a&lt;b&amp;c" in svg and "a<b" not in svg
