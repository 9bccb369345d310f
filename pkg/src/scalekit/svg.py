"""Self-contained SVG scatter/line charts with optional log axes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence
from xml.sax.saxutils import escape

from scalekit.errors import InputError, NonFiniteCoordinate

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 190, 50, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass(frozen=True)
class PlotSeries:
    name: str
    points: Sequence[tuple[float, float]]
    style: Literal["scatter", "line"] = "scatter"
    log_x: bool = True
    log_y: bool = True

    def __post_init__(self):
        if not self.points:
            raise InputError(f"series {self.name!r} has no points")
        if self.style not in ("scatter", "line"):
            raise InputError(f"unknown series style {self.style!r}")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise NonFiniteCoordinate(f"series {self.name!r} has a non-finite point ({x!r}, {y!r})")
            if (self.log_x and x <= 0) or (self.log_y and y <= 0):
                raise NonFiniteCoordinate(f"series {self.name!r}: ({x!r}, {y!r}) has no logarithm")


class _Axis:
    def __init__(self, values: list[float], log: bool, lo_px: float, hi_px: float):
        self.log = log
        t = [math.log10(v) for v in values] if log else list(values)
        lo, hi = min(t), max(t)
        if log:
            lo, hi = math.floor(lo), math.ceil(hi)
            if lo == hi:
                hi = lo + 1
        else:
            if lo == hi:
                pad = max(abs(lo) * 0.1, 1.0)
            else:
                pad = (hi - lo) * 0.05
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi = lo, hi
        self.lo_px, self.hi_px = lo_px, hi_px

    def __call__(self, value: float) -> float:
        t = math.log10(value) if self.log else value
        return self.lo_px + (t - self.lo) / (self.hi - self.lo) * (self.hi_px - self.lo_px)

    def ticks(self) -> list[tuple[float, str]]:
        if self.log:
            return [(10.0**k, f"1e{k}") for k in range(int(self.lo), int(self.hi) + 1)]
        span = self.hi - self.lo
        step = 10 ** math.floor(math.log10(span / 5))
        for mult in (1, 2, 5, 10):
            if span / (step * mult) <= 6:
                step *= mult
                break
        first = math.ceil(self.lo / step)
        out = []
        k = first
        while k * step <= self.hi + 1e-12 * span:
            v = k * step
            out.append((v, f"{v:.6g}"))
            k += 1
        return out


def _n(v: float) -> str:
    return f"{v:.2f}"


def emit_svg_plot(
    series: Sequence[PlotSeries], x_label: str, y_label: str, title: str | None = None
) -> str:
    """Render the series onto an 800x600 canvas.

    Scatter points become ``<circle class="marker">`` elements and each line
    series one ``<polyline>``. Log axes get a gridline per decade. All series
    share the log/linear setting of the first one.
    """
    if not series:
        raise InputError("need at least one series")
    log_x, log_y = series[0].log_x, series[0].log_y
    xs = [x for s in series for x, _ in s.points]
    ys = [y for s in series for _, y in s.points]
    plot_right = WIDTH - MARGIN_RIGHT
    plot_bottom = HEIGHT - MARGIN_BOTTOM
    ax = _Axis(xs, log_x, MARGIN_LEFT, plot_right)
    ay = _Axis(ys, log_y, plot_bottom, MARGIN_TOP)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" style="fill:#ffffff"/>',
    ]
    if title:
        out.append(
            f'<text x="{_n((MARGIN_LEFT + plot_right) / 2)}" y="30" '
            f'style="font:16px sans-serif;text-anchor:middle">{escape(title)}</text>'
        )
    grid = "stroke:#dddddd;stroke-width:1"
    label = "font:11px sans-serif"
    for value, text in ax.ticks():
        px = _n(ax(value))
        out.append(f'<line class="grid" x1="{px}" y1="{MARGIN_TOP}" x2="{px}" y2="{plot_bottom}" style="{grid}"/>')
        out.append(f'<text x="{px}" y="{plot_bottom + 16}" style="{label};text-anchor:middle">{text}</text>')
    for value, text in ay.ticks():
        py = _n(ay(value))
        out.append(f'<line class="grid" x1="{MARGIN_LEFT}" y1="{py}" x2="{plot_right}" y2="{py}" style="{grid}"/>')
        out.append(f'<text x="{MARGIN_LEFT - 6}" y="{py}" style="{label};text-anchor:end">{text}</text>')
    out.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_right - MARGIN_LEFT}" '
        f'height="{plot_bottom - MARGIN_TOP}" style="fill:none;stroke:#000000;stroke-width:1"/>'
    )
    out.append(
        f'<text x="{_n((MARGIN_LEFT + plot_right) / 2)}" y="{HEIGHT - 15}" '
        f'style="font:13px sans-serif;text-anchor:middle">{escape(x_label)}</text>'
    )
    cy = (MARGIN_TOP + plot_bottom) / 2
    out.append(
        f'<text x="20" y="{_n(cy)}" transform="rotate(-90 20 {_n(cy)})" '
        f'style="font:13px sans-serif;text-anchor:middle">{escape(y_label)}</text>'
    )

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.style == "line":
            pts = " ".join(f"{_n(ax(x))},{_n(ay(y))}" for x, y in s.points)
            out.append(f'<polyline points="{pts}" style="fill:none;stroke:{color};stroke-width:2"/>')
        else:
            for x, y in s.points:
                out.append(f'<circle class="marker" cx="{_n(ax(x))}" cy="{_n(ay(y))}" r="4" style="fill:{color}"/>')
        # legend swatches are rects so marker counts stay exact
        ly = MARGIN_TOP + 10 + 20 * i
        lx = plot_right + 15
        if s.style == "line":
            out.append(f'<rect x="{lx}" y="{ly + 4}" width="20" height="3" style="fill:{color}"/>')
        else:
            out.append(f'<rect x="{lx + 6}" y="{ly}" width="8" height="8" style="fill:{color}"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 9}" style="{label}">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
