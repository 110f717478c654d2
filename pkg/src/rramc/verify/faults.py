"""Single-fault injection for exercising DRC and LVS.

Faults are applied to one cell placement: the layout is rebuilt with every
cell referenced directly from the top, and the faulted placement points at
a variant structure named ``<cell>$<tag>``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import InvalidParam
from ..layout.db import DB_PER_UM, LayoutDb, Rect, Ref, Structure
from ..layout.template import CellTemplate
from .drc import RuleDeck


@dataclass(frozen=True)
class Fault:
    kind: str  # "shrink" | "move" | "delete"
    row: int
    col: int
    layer: str
    original: Rect
    replacement: Rect | None


def with_variants(db: LayoutDb, template: CellTemplate, variants: dict[tuple[int, int], Structure]) -> LayoutDb:
    """Copy of ``db`` with cells placed directly under the top structure and
    the given (row, col) placements swapped for variant structures."""
    out = LayoutDb(name=db.name, layers=dict(db.layers), db_unit=db.db_unit, db_per_user=db.db_per_user)
    out.add(Structure(template.name, template.shapes))
    for s in dict.fromkeys(variants.values()):
        out.add(s)
    refs = []
    for _, x, y in sorted(db.placements(template.name), key=lambda p: (p[2], p[1])):
        key = (y // template.height, x // template.width)
        name = variants[key].name if key in variants else template.name
        refs.append(Ref(name, x, y))
    out.add(Structure(db.top or "top", refs=tuple(refs)))
    out.top = db.top or "top"
    return out


def _shrunk(r: Rect, target: int) -> Rect:
    if r.width <= r.height:
        cx = (r.x0 + r.x1) // 2
        return Rect(r.layer, cx - target // 2, r.y0, cx - target // 2 + target, r.y1)
    cy = (r.y0 + r.y1) // 2
    return Rect(r.layer, r.x0, cy - target // 2, r.x1, cy - target // 2 + target)


def _move_delta(r: Rect, others: list[Rect], gap: int) -> tuple[int, int] | None:
    """Shift bringing ``r`` to ``gap`` from its nearest same-layer neighbour
    that is separated along exactly one axis."""
    best = None
    for o in others:
        if o.layer != r.layer:
            continue
        y_overlap = r.y0 < o.y1 and o.y0 < r.y1
        x_overlap = r.x0 < o.x1 and o.x0 < r.x1
        if y_overlap and o.x0 > r.x1:
            cand = (o.x0 - r.x1, (o.x0 - r.x1 - gap, 0))
        elif y_overlap and r.x0 > o.x1:
            cand = (r.x0 - o.x1, (-(r.x0 - o.x1 - gap), 0))
        elif x_overlap and o.y0 > r.y1:
            cand = (o.y0 - r.y1, (0, o.y0 - r.y1 - gap))
        elif x_overlap and r.y0 > o.y1:
            cand = (r.y0 - o.y1, (0, -(r.y0 - o.y1 - gap)))
        else:
            continue
        if cand[0] > gap and (best is None or cand < best):
            best = cand
    return None if best is None else best[1]


def inject_fault(
    db: LayoutDb, template: CellTemplate, rules: RuleDeck, rng: random.Random, kind: str | None = None
) -> tuple[LayoutDb, Fault]:
    """Shrink one rect below its layer's min width, or move it closer than
    min spacing to a neighbour.  Moves fall back to shrinks when the rect
    has no separated neighbour."""
    cells = sorted(db.placements(template.name), key=lambda p: (p[2], p[1]))
    if not cells:
        raise InvalidParam("layout has no cell placements")
    _, x, y = rng.choice(cells)
    row, col = y // template.height, x // template.width
    idx = rng.randrange(len(template.shapes))
    rect = template.shapes[idx]
    kind = kind or rng.choice(("shrink", "move"))
    new = None
    if kind == "move" and rect.layer in rules.min_spacing:
        spacing = int(rules.min_spacing[rect.layer] * DB_PER_UM)
        gap = max(1, int(spacing * rng.uniform(0.1, 0.9)))
        here = rect.translated(x, y)
        others = [r for r in db.flatten() if r != here]
        delta = _move_delta(here, others, gap)
        if delta is not None:
            new = rect.translated(*delta)
    if new is None:
        kind = "shrink"
        limit = int(rules.min_width.get(rect.layer, 0.22) * DB_PER_UM)
        new = _shrunk(rect, max(1, int(limit * rng.uniform(0.3, 0.9))))
    shapes = list(template.shapes)
    shapes[idx] = new
    variant = Structure(f"{template.name}$fault", tuple(shapes))
    return with_variants(db, template, {(row, col): variant}), Fault(kind, row, col, rect.layer, rect, new)


def delete_row_sel(db: LayoutDb, template: CellTemplate, row: int) -> LayoutDb:
    """Remove the SEL strip from every cell of one row."""
    sel = template.ports["SEL"]
    variant = Structure(f"{template.name}$nosel", tuple(r for r in template.shapes if r != sel))
    cols = {x // template.width for _, x, _ in db.placements(template.name)}
    return with_variants(db, template, {(row, c): variant for c in cols})
