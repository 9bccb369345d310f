import math
import xml.etree.ElementTree as ET

import pytest

from scalekit.errors import InputError, NonFiniteCoordinate
from scalekit.records import load_bundled
from scalekit.planner import pareto_frontier, plan_from_budget
from scalekit.report import fit_report, fmt, frontier_report, plan_report, probe_report
from scalekit.scaling import LossPoint, fit_power_law, predict_loss
from scalekit.svg import PlotSeries, emit_svg_plot

SVG_NS = "{http://www.w3.org/2000/svg}"


def cerebras_points():
    recs = [r for r in load_bundled() if r.family == "Cerebras-GPT"]
    return [LossPoint(r.train_flops, r.pile_xent) for r in recs]


def test_fmt():
    assert fmt(-0.0712999857) == "-0.0713"
    assert fmt(1.122958277e23) == "1.12296e+23"
    assert fmt(12) == "12"


def test_fit_report_contents_and_determinism():
    pts = cerebras_points()
    fit = fit_power_law(pts)
    text = fit_report(fit, pts)
    assert text == fit_report(fit, pts)
    assert text.endswith("\n")
    b_line = next(line for line in text.splitlines() if line.startswith("b: "))
    assert b_line.startswith("b: -0.07")
    assert sum(1 for line in text.splitlines() if line.lstrip().startswith("#")) == 7


def test_frontier_report_empty():
    text = frontier_report([], 0)
    assert "0 records" in text.splitlines()


def test_frontier_report_lists_members():
    recs = [r for r in load_bundled() if r.pile_xent is not None]
    front = pareto_frontier(recs, 0)
    text = frontier_report(front, 0, considered=len(recs))
    assert f"{len(front)} records" in text
    assert "GPT-NeoX" in text


def test_plan_and_probe_reports():
    assert "reference_model: 111M" in plan_report(plan_from_budget(2.6e18))
    text = probe_report("sp", [(256, 0.32), (4096, 1.28)], 10, 0)
    assert "max/min ratio: 4" in text


def test_svg_counts_markers_and_polyline():
    pts = cerebras_points()
    fit = fit_power_law(pts)
    series = [
        PlotSeries("data", [(p.flops, p.loss) for p in pts], "scatter"),
        PlotSeries("fit", [(f, predict_loss(fit, f)) for f in (1e18, 1e20, 1e22)], "line"),
    ]
    svg = emit_svg_plot(series, "FLOPs", "loss", "title & more")
    root = ET.fromstring(svg.split("\n", 1)[1])
    assert root.tag == SVG_NS + "svg" and root.get("width") == "800" and root.get("height") == "600"
    markers = [c for c in root.iter(SVG_NS + "circle") if c.get("class") == "marker"]
    assert len(markers) == 7
    assert len(list(root.iter(SVG_NS + "circle"))) == 7
    assert len(list(root.iter(SVG_NS + "polyline"))) == 1
    # x decades 1e18..1e23, y decades 1e0..1e1
    grid = [g for g in root.iter(SVG_NS + "line") if g.get("class") == "grid"]
    assert len(grid) == 6 + 2
    assert svg == emit_svg_plot(series, "FLOPs", "loss", "title & more")
    assert "<script" not in svg


def test_svg_single_point_and_linear_axes():
    svg = emit_svg_plot([PlotSeries("one", [(5.0, 5.0)], "scatter", log_x=False, log_y=False)], "x", "y")
    root = ET.fromstring(svg.split("\n", 1)[1])
    (marker,) = [c for c in root.iter(SVG_NS + "circle")]
    assert 80 < float(marker.get("cx")) < 610 and 50 < float(marker.get("cy")) < 540
    svg = emit_svg_plot([PlotSeries("one", [(1e20, 2.0)])], "x", "y")
    assert svg.count('class="marker"') == 1


def test_svg_errors():
    with pytest.raises(NonFiniteCoordinate):
        PlotSeries("bad", [(1.0, math.nan)])
    with pytest.raises(NonFiniteCoordinate):
        PlotSeries("bad", [(0.0, 1.0)])
    with pytest.raises(InputError):
        PlotSeries("empty", [])
    with pytest.raises(InputError):
        emit_svg_plot([], "x", "y")
