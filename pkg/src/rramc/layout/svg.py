"""Flat SVG rendering of a layout database for visual inspection."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .db import DB_PER_UM, LayoutDb

LAYER_COLORS = {"POLY": "#d62728", "M1": "#1f77b4", "M4": "#2ca02c"}
_FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass
class SvgOptions:
    pixels_per_um: float = 20.0
    margin_px: float = 20.0
    opacity: float = 0.5
    colors: dict = field(default_factory=lambda: dict(LAYER_COLORS))


def _um(v: int) -> str:
    return f"{v / DB_PER_UM:.6f}"


def render_svg(db: LayoutDb, options: SvgOptions | None = None) -> str:
    """One ``<rect>`` per flattened rectangle, plus a legend and a 1 um scale bar."""
    opt = options or SvgOptions()
    rects = db.flatten()
    bb = db.bbox() or (0, 0, DB_PER_UM, DB_PER_UM)
    w_um = (bb[2] - bb[0]) / DB_PER_UM
    h_um = (bb[3] - bb[1]) / DB_PER_UM
    layers = sorted({r.layer for r in rects})
    colors = dict(opt.colors)
    for i, layer in enumerate(l for l in layers if l not in colors):
        colors[layer] = _FALLBACK[i % len(_FALLBACK)]

    s = opt.pixels_per_um
    m = opt.margin_px
    legend_h = 18.0 * (len(layers) + 2)
    width_px = w_um * s + 2 * m
    height_px = h_um * s + 2 * m + legend_h
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px:.3f}" height="{height_px:.3f}">',
        f'<title>{escape(db.top or db.name)}</title>',
        # layout y grows upward; flip into SVG space
        f'<g id="layout" transform="translate({m:.3f},{m + h_um * s:.3f}) scale({s:.6f},{-s:.6f}) '
        f'translate({-bb[0] / DB_PER_UM:.6f},{-bb[1] / DB_PER_UM:.6f})">',
    ]
    for layer in layers:
        out.append(f'<g class="layer" id="layer-{escape(layer)}" fill="{colors[layer]}" fill-opacity="{opt.opacity}">')
        for r in rects:
            if r.layer == layer:
                out.append(
                    f'<rect x="{_um(r.x0)}" y="{_um(r.y0)}" width="{_um(r.width)}" height="{_um(r.height)}"/>'
                )
        out.append("</g>")
    out.append("</g>")
    y = m + h_um * s + 14.0
    out.append('<g id="legend" font-family="sans-serif" font-size="12">')
    for layer in layers:
        out.append(f'<rect x="{m:.3f}" y="{y:.3f}" width="12" height="12" fill="{colors[layer]}"/>')
        out.append(f'<text x="{m + 18:.3f}" y="{y + 11:.3f}">{escape(layer)}</text>')
        y += 18.0
    out.append(
        f'<line id="scale-bar" x1="{m:.3f}" y1="{y + 6:.3f}" x2="{m + s:.3f}" y2="{y + 6:.3f}" '
        'stroke="black" stroke-width="2"/>'
    )
    out.append(f'<text x="{m + s + 6:.3f}" y="{y + 10:.3f}">1 um</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
