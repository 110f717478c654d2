"""Minimum width and spacing checks on flattened layouts."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..kvfile import parse_float, parse_kv
from ..layout.db import DB_PER_UM, LayoutDb, Rect, iter_layers

DEFAULT_MIN_WIDTH_UM = 0.22
DEFAULT_MIN_SPACING_UM = 0.28
DEFAULT_RULE_LAYERS = ("POLY", "M1", "M4")


@dataclass(frozen=True)
class RuleDeck:
    min_width: dict = field(default_factory=lambda: dict.fromkeys(DEFAULT_RULE_LAYERS, DEFAULT_MIN_WIDTH_UM))
    min_spacing: dict = field(default_factory=lambda: dict.fromkeys(DEFAULT_RULE_LAYERS, DEFAULT_MIN_SPACING_UM))

    def __post_init__(self):
        for table in (self.min_width, self.min_spacing):
            for layer, v in table.items():
                if not (math.isfinite(v) and v > 0):
                    raise ConfigError(f"rule for {layer} must be positive, got {v}")

    @classmethod
    def from_text(cls, text: str, source: str = "<rules>") -> "RuleDeck":
        """Keys look like ``m1.min_width_um``; unspecified rules keep defaults."""
        width, spacing = cls().min_width, cls().min_spacing
        for key, value in parse_kv(text, source).items():
            layer, _, rule = key.partition(".")
            if rule == "min_width_um":
                width[layer.upper()] = parse_float(value, key)
            elif rule == "min_spacing_um":
                spacing[layer.upper()] = parse_float(value, key)
            else:
                raise ConfigError(f"{source}: unknown rule {key!r}")
        return cls(width, spacing)


@dataclass(frozen=True, order=True)
class Violation:
    layer: str
    kind: str  # "width" | "spacing"
    rects: tuple[Rect, ...]
    measured: float
    required: float


def _gap2(a: Rect, b: Rect) -> int:
    dx = max(0, b.x0 - a.x1, a.x0 - b.x1)
    dy = max(0, b.y0 - a.y1, a.y0 - b.y1)
    return dx * dx + dy * dy


def _spacing(layer: str, rects: list[Rect], min_um: float) -> list[Violation]:
    s = min_um * DB_PER_UM
    s2 = s * s
    order = sorted(rects, key=lambda r: (r.x0, r.y0, r.x1, r.y1))
    out = []
    active: list[Rect] = []
    for r in order:
        # drop rects that end more than one spacing to the left of the sweep line
        active = [a for a in active if a.x1 + s > r.x0]
        for a in active:
            if a.y0 - r.y1 >= s or r.y0 - a.y1 >= s:
                continue
            g2 = _gap2(a, r)
            if 0 < g2 < s2:
                pair = tuple(sorted((a, r)))
                out.append(Violation(layer, "spacing", pair, math.sqrt(g2) / DB_PER_UM, min_um))
        active.append(r)
    return out


def drc(db: LayoutDb, rules: RuleDeck | None = None) -> list[Violation]:
    """Every rect narrower than ``min_width`` and every non-touching
    same-layer pair closer than ``min_spacing``.  Empty list means clean."""
    rules = rules or RuleDeck()
    out: list[Violation] = []
    for layer, rects in iter_layers(db.flatten()):
        w = rules.min_width.get(layer)
        if w is not None:
            limit = w * DB_PER_UM
            for r in rects:
                narrow = min(r.width, r.height)
                if narrow < limit:
                    out.append(Violation(layer, "width", (r,), narrow / DB_PER_UM, w))
        s = rules.min_spacing.get(layer)
        if s is not None:
            out.extend(_spacing(layer, rects, s))
    return sorted(set(out))


def _coords(rects) -> str:
    return ";".join(
        " ".join(f"{v / DB_PER_UM:.6f}" for v in (r.x0, r.y0, r.x1, r.y1)) for r in rects
    )


def violations_csv(violations: list[Violation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "layer", "coords_um", "measured_um", "required_um"])
    for v in violations:
        w.writerow([v.kind, v.layer, _coords(v.rects), f"{v.measured:.6e}", f"{v.required:.6e}"])
    return buf.getvalue()


def violations_text(violations: list[Violation]) -> str:
    if not violations:
        return "DRC CLEAN: 0 violations\n"
    lines = [f"DRC FAILED: {len(violations)} violation(s)"]
    for v in violations:
        lines.append(
            f"  {v.kind:<7} {v.layer:<5} measured {v.measured:.4f} um < required {v.required:.4f} um "
            f"at {_coords(v.rects)}"
        )
    return "\n".join(lines) + "\n"
