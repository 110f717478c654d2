"""Abstract 1T1R cell template and array tiling.

The template reproduces only pitch and port topology of the reference cell:
a horizontal SEL strip on M1, vertical P and N strips on M4 and a POLY gate.
Strips run edge to edge so that abutting cells form continuous lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..arch import ArrayConfig
from ..errors import InvalidParam
from .db import DB_PER_UM, LayoutDb, Rect, Ref, Structure, to_db

# Reported extent of the 128 x 128 array; the cell is the longer side wide.
REF_ARRAY_WIDTH_UM = Fraction("642.41")
REF_ARRAY_HEIGHT_UM = Fraction("294.42")
REF_ARRAY_CELLS = 128

CELL_STRUCT = "rram_cell"
ROW_STRUCT = "rram_row"
ARRAY_STRUCT = "rram_array"

_NM = DB_PER_UM // 1000
STRIP_WIDTH = 400 * _NM
PN_INSET = 1000 * _NM
GATE_INSET = 400 * _NM


@dataclass(frozen=True)
class CellTemplate:
    width: int
    height: int
    shapes: tuple[Rect, ...]
    ports: dict = field(default_factory=dict)
    name: str = CELL_STRUCT

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.width > self.height > 0:
            raise InvalidParam("cell must be wider than it is tall")
        for r in self.shapes:
            if r.x0 < 0 or r.y0 < 0 or r.x1 > self.width or r.y1 > self.height:
                raise InvalidParam(f"shape {r} leaves the cell")
        for port, sides in (("SEL", "lr"), ("P", "tb"), ("N", "tb")):
            if port not in self.ports:
                raise InvalidParam(f"template has no {port} port")
            r = self.ports[port]
            if "l" in sides and not (r.x0 == 0 and r.x1 == self.width):
                raise InvalidParam(f"{port} pin must span the cell horizontally")
            if "t" in sides and not (r.y0 == 0 and r.y1 == self.height):
                raise InvalidParam(f"{port} pin must span the cell vertically")

    @property
    def width_um(self) -> float:
        return self.width / DB_PER_UM

    @property
    def height_um(self) -> float:
        return self.height / DB_PER_UM

    def routing_layers(self) -> set[str]:
        return {r.layer for r in self.ports.values()}


def default_template(width_um=None, height_um=None) -> CellTemplate:
    """Template at the reference pitch (642.41/128 um by 294.42/128 um)."""
    w = to_db(width_um if width_um is not None else REF_ARRAY_WIDTH_UM / REF_ARRAY_CELLS)
    h = to_db(height_um if height_um is not None else REF_ARRAY_HEIGHT_UM / REF_ARRAY_CELLS)
    if w < 2 * (PN_INSET + STRIP_WIDTH) + STRIP_WIDTH or h < 2 * GATE_INSET + STRIP_WIDTH:
        raise InvalidParam("cell pitch too small for the template strips")
    sel_y0 = (h - STRIP_WIDTH) // 2
    sel = Rect("M1", 0, sel_y0, w, sel_y0 + STRIP_WIDTH)
    p = Rect("M4", PN_INSET, 0, PN_INSET + STRIP_WIDTH, h)
    n = Rect("M4", w - PN_INSET - STRIP_WIDTH, 0, w - PN_INSET, h)
    gx0 = (w - STRIP_WIDTH) // 2
    gate = Rect("POLY", gx0, GATE_INSET, gx0 + STRIP_WIDTH, h - GATE_INSET)
    return CellTemplate(w, h, (sel, p, n, gate), {"SEL": sel, "P": p, "N": n})


def tile_array(config: ArrayConfig, template: CellTemplate | None = None) -> LayoutDb:
    """Cell -> row of N cells -> M rows, placed at the template pitch."""
    template = template or default_template()
    db = LayoutDb()
    db.add(Structure(template.name, template.shapes))
    db.add(Structure(ROW_STRUCT, refs=tuple(Ref(template.name, j * template.width, 0) for j in range(config.cols))))
    db.add(Structure(ARRAY_STRUCT, refs=tuple(Ref(ROW_STRUCT, 0, i * template.height) for i in range(config.rows))))
    db.top = ARRAY_STRUCT
    return db


def density_mbits_per_mm2(config: ArrayConfig, template: CellTemplate | None = None) -> float:
    """Bits per area with Mb = 2**20 bits."""
    template = template or default_template()
    area_db = (config.cols * template.width) * (config.rows * template.height)
    area_mm2 = Fraction(area_db, (DB_PER_UM * 1000) ** 2)
    return float(Fraction(config.rows * config.cols, 2**20) / area_mm2)
