"""Characterization tables, fits, CSV files and SVG plots."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .arch import LineKind
from .errors import DegenerateFit, InvalidParam, IoFailure
from .parasitics import ParasiticRates, line_capacitance, line_resistance

KIND_ORDER = (LineKind.SEL, LineKind.N, LineKind.P)
UNIT = {"C": "F", "R": "ohm"}


def metric_name(quantity: str, kind: LineKind) -> str:
    return f"{quantity}_{LineKind(kind).value}"


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[tuple[int, str, float, str], ...]
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        last: dict[str, int] = {}
        units: dict[str, str] = {}
        for n, metric, _, unit in self.rows:
            if metric in last and n <= last[metric]:
                raise InvalidParam(f"{metric}: n must be strictly increasing")
            if units.setdefault(metric, unit) != unit:
                raise InvalidParam(f"{metric}: mixed units")
            last[metric] = n

    def metrics(self) -> list[str]:
        return list(dict.fromkeys(m for _, m, _, _ in self.rows))

    def series(self, metric: str) -> list[tuple[int, float]]:
        return [(n, v) for n, m, v, _ in self.rows if m == metric]

    def unit(self, metric: str) -> str:
        return next(u for _, m, _, u in self.rows if m == metric)


def sweep_parasitics(sizes, rates: ParasiticRates = ParasiticRates()) -> SweepTable:
    sizes = sorted(set(int(n) for n in sizes))
    if not sizes or sizes[0] < 1:
        raise InvalidParam("sizes must be a non-empty set of positive integers")
    rows = []
    for quantity, fn in (("C", line_capacitance), ("R", line_resistance)):
        for kind in KIND_ORDER:
            for n in sizes:
                rows.append((n, metric_name(quantity, kind), fn(kind, n, rates), UNIT[quantity]))
    meta = tuple(sorted(_parse_meta(rates.to_text()).items()))
    return SweepTable(tuple(rows), meta)


def _parse_meta(text: str) -> dict[str, str]:
    return dict(line.split("=", 1) for line in text.splitlines())


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(points) -> LinearFit:
    """Ordinary least squares, evaluated in exact rational arithmetic.

    Floats convert to fractions without rounding, so data that lies exactly
    on a line gives back that line exactly.
    """
    pts = [(Fraction(x), Fraction(y)) for x, y in points]
    if len({x for x, _ in pts}) < 2:
        raise DegenerateFit("need at least two distinct abscissae")
    k = len(pts)
    xm = sum(x for x, _ in pts) / k
    ym = sum(y for _, y in pts) / k
    sxx = sum((x - xm) ** 2 for x, _ in pts)
    sxy = sum((x - xm) * (y - ym) for x, y in pts)
    slope = sxy / sxx
    intercept = ym - slope * xm
    ss_tot = sum((y - ym) ** 2 for _, y in pts)
    ss_res = sum((y - slope * x - intercept) ** 2 for x, y in pts)
    r2 = Fraction(1) if ss_tot == 0 else 1 - ss_res / ss_tot
    return LinearFit(float(slope), float(intercept), float(min(max(r2, Fraction(0)), Fraction(1))))


def fit_table(table: SweepTable) -> dict[str, LinearFit]:
    return {m: linear_fit(table.series(m)) for m in table.metrics()}


# ---------------------------------------------------------------- CSV


def _num(v: float) -> str:
    return f"{v:.16e}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def parasitics_csv(table: SweepTable) -> str:
    return _csv(("n_cells", "metric", "value", "unit"), ((n, m, _num(v), u) for n, m, v, u in table.rows))


def parse_parasitics_csv(text: str) -> SweepTable:
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return SweepTable(tuple((int(n), m, float(v), u) for n, m, v, u in reader))


def fits_csv(fits: dict[str, LinearFit], table: SweepTable) -> str:
    return _csv(
        ("metric", "slope_per_cell", "intercept", "r_squared", "unit"),
        ((m, _num(f.slope), _num(f.intercept), _num(f.r_squared), table.unit(m)) for m, f in fits.items()),
    )


def settling_csv(settling) -> str:
    return _csv(
        ("corner", "n_cells", "settling_time_s", "final_value_v", "dt_s"),
        ((r.corner, r.n_cells, _num(r.settling_time), _num(r.final_value), _num(r.dt_used)) for r in settling),
    )


def exp_fits_csv(exp_fits: dict) -> str:
    return _csv(("corner", "a_s", "k_per_cell"), ((c, _num(f.a), _num(f.k)) for c, f in exp_fits.items()))


# ---------------------------------------------------------------- SVG

PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 110, 30, 45
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
FIT_SAMPLES = 48


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


@dataclass
class _Series:
    name: str
    points: list[tuple[float, float]]
    dashed: bool = False
    markers: bool = True


@dataclass
class _Panel:
    title: str
    x_label: str
    y_label: str
    scale: float  # display multiplier for y values
    series: list[_Series] = field(default_factory=list)


def _panel_svg(panel: _Panel, ox: int, oy: int) -> list[str]:
    xs = [x for s in panel.series for x, _ in s.points]
    ys = [y * panel.scale for s in panel.series for _, y in s.points]
    x_lo, x_hi = 0.0, max(xs)
    y_lo, y_hi = 0.0, max(ys) * 1.05 if max(ys) > 0 else 1.0
    pw = PANEL_W - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B

    def px(x):
        return ox + MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return oy + MARGIN_T + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [f'<g class="panel" data-title={quoteattr(panel.title)}>']
    out.append(
        f'<text x="{ox + PANEL_W / 2:.2f}" y="{oy + 18}" text-anchor="middle" font-size="13">'
        f"{escape(panel.title)}</text>"
    )
    x0, y0 = px(x_lo), py(y_lo)
    out.append(
        f'<path class="axes" d="M{x0:.2f},{py(y_hi):.2f} L{x0:.2f},{y0:.2f} L{px(x_hi):.2f},{y0:.2f}" '
        'stroke="black" fill="none"/>'
    )
    for t in _ticks(x_lo, x_hi):
        out.append(
            f'<text x="{px(t):.2f}" y="{y0 + 14:.2f}" text-anchor="middle" font-size="10">{t:.3g}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        out.append(
            f'<text x="{x0 - 4:.2f}" y="{py(t) + 3:.2f}" text-anchor="end" font-size="10">{t:.3g}</text>'
        )
    out.append(
        f'<text x="{ox + MARGIN_L + pw / 2:.2f}" y="{oy + PANEL_H - 8}" text-anchor="middle" '
        f'font-size="11">{escape(panel.x_label)}</text>'
    )
    yc = oy + MARGIN_T + ph / 2
    out.append(
        f'<text x="{ox + 14}" y="{yc:.2f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {ox + 14} {yc:.2f})">{escape(panel.y_label)}</text>'
    )
    bases = list(dict.fromkeys(s.name.removesuffix(" fit") for s in panel.series))
    for k, s in enumerate(panel.series):
        color = COLORS[bases.index(s.name.removesuffix(" fit")) % len(COLORS)]
        pix = " ".join(f"{px(x):.2f},{py(y * panel.scale):.2f}" for x, y in s.points)
        data = " ".join(f"{x!r},{y!r}" for x, y in s.points)
        dash = ' stroke-dasharray="5,3"' if s.dashed else ""
        out.append(
            f'<polyline class="series" data-series={quoteattr(s.name)} data-points="{data}" '
            f'points="{pix}" fill="none" stroke="{color}"{dash}/>'
        )
        if s.markers:
            for x, y in s.points:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y * panel.scale):.2f}" r="2.5" fill="{color}"/>')
        ly = oy + MARGIN_T + 14 * k + 6
        lx = ox + PANEL_W - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 16}" y2="{ly}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{lx + 20}" y="{ly + 4}" font-size="10">{escape(s.name)}</text>')
    out.append("</g>")
    return out


def fit_overlay(fit, n_lo: float, n_hi: float, samples: int = FIT_SAMPLES) -> list[tuple[float, float]]:
    """Points of ``a * exp(k n)`` evenly spaced over ``[n_lo, n_hi]``."""
    ns = [n_lo + (n_hi - n_lo) * i / (samples - 1) for i in range(samples)]
    return [(n, float(fit(n))) for n in ns]


def plots_svg(table: SweepTable, settling, exp_fits: dict) -> str:
    c_panel = _Panel("Line capacitance vs cells", "cells on line", "C+CC (fF)", 1e15)
    r_panel = _Panel("Line resistance vs cells", "cells on line", "R (ohm)", 1.0)
    for m in table.metrics():
        panel = c_panel if m.startswith("C_") else r_panel
        panel.series.append(_Series(m, [(float(n), v) for n, v in table.series(m)]))
    panels = [c_panel, r_panel]
    if settling:
        s_panel = _Panel("Worst-case read settling", "cells on column", "settling time (ps)", 1e12)
        for corner in dict.fromkeys(r.corner for r in settling):
            pts = sorted((float(r.n_cells), r.settling_time) for r in settling if r.corner == corner)
            s_panel.series.append(_Series(corner, pts))
            if corner in exp_fits:
                s_panel.series.append(
                    _Series(f"{corner} fit", fit_overlay(exp_fits[corner], pts[0][0], pts[-1][0]), True, False)
                )
        panels.append(s_panel)
    width, height = PANEL_W * len(panels), PANEL_H
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for k, p in enumerate(panels):
        body.extend(_panel_svg(p, k * PANEL_W, 0))
    body.append("</svg>")
    return "\n".join(body) + "\n"


# ---------------------------------------------------------------- files


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(path, exc) from exc
    return path


def emit_report(
    out_dir,
    table: SweepTable,
    fits: dict[str, LinearFit],
    settling=(),
    exp_fits: dict | None = None,
    formats=("csv", "svg"),
) -> list[Path]:
    """Write the characterization files; returns their paths in write order."""
    out_dir = Path(out_dir)
    exp_fits = exp_fits or {}
    if not table.rows:
        raise InvalidParam("empty parasitic table")
    written = []
    if "csv" in formats:
        written.append(write_text(out_dir / "parasitics.csv", parasitics_csv(table)))
        written.append(write_text(out_dir / "parasitic_fits.csv", fits_csv(fits, table)))
        if settling:
            written.append(write_text(out_dir / "settling.csv", settling_csv(settling)))
        if exp_fits:
            written.append(write_text(out_dir / "settling_fits.csv", exp_fits_csv(exp_fits)))
    if "svg" in formats:
        written.append(write_text(out_dir / "plots.svg", plots_svg(table, settling, exp_fits)))
    return written

