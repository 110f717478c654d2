"""Physical array layout: cell template, tiling, GDSII and SVG output."""

from .db import DB_PER_UM, DB_UNIT_M, DEFAULT_LAYERS, LayerId, LayoutDb, Rect, Ref, Structure, to_db, to_um
from .gdsii import decode_real8, emit_gdsii, encode_real8, parse_gdsii
from .svg import SvgOptions, render_svg
from .template import (
    ARRAY_STRUCT,
    CELL_STRUCT,
    ROW_STRUCT,
    CellTemplate,
    default_template,
    density_mbits_per_mm2,
    tile_array,
)

__all__ = [
    "ARRAY_STRUCT", "CELL_STRUCT", "ROW_STRUCT", "DB_PER_UM", "DB_UNIT_M", "DEFAULT_LAYERS",
    "CellTemplate", "LayerId", "LayoutDb", "Rect", "Ref", "Structure", "SvgOptions",
    "decode_real8", "default_template", "density_mbits_per_mm2", "emit_gdsii", "encode_real8",
    "parse_gdsii", "render_svg", "tile_array", "to_db", "to_um",
]
