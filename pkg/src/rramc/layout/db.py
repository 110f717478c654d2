"""Rectangle/reference layout database.

Coordinates are integers on the database grid.  The grid is 1/64 nm so
that the 128-cell array extents (642.41 um, 294.42 um) divide into an
exact per-cell pitch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Iterator

from ..errors import GridViolation, InvalidParam

DB_PER_UM = 64_000
DB_UNIT_M = 1e-6 / DB_PER_UM
USER_UNIT_M = 1e-6


@dataclass(frozen=True)
class LayerId:
    name: str
    gds_layer: int
    gds_datatype: int = 0


DEFAULT_LAYERS = {
    "POLY": LayerId("POLY", 10, 0),
    "M1": LayerId("M1", 30, 0),
    "M4": LayerId("M4", 36, 0),
}


def check_layer_table(layers: dict[str, LayerId]) -> None:
    seen = {}
    for name, lid in layers.items():
        if lid.name != name:
            raise InvalidParam(f"layer table key {name} names layer {lid.name}")
        key = (lid.gds_layer, lid.gds_datatype)
        if key in seen:
            raise InvalidParam(f"layers {seen[key]} and {name} share GDS number {key}")
        seen[key] = name


def to_db(um) -> int:
    """Exact micrometre -> grid conversion; off-grid values raise GridViolation."""
    if isinstance(um, float):
        um = Decimal(repr(um))
    elif isinstance(um, str):
        um = Decimal(um)
    value = Fraction(um) * DB_PER_UM
    if value.denominator != 1:
        raise GridViolation(f"{float(um)} um is not on the {1e3 / DB_PER_UM} nm grid")
    return int(value)


def to_um(db: int) -> float:
    return db / DB_PER_UM


@dataclass(frozen=True, order=True)
class Rect:
    layer: str
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not self.x0 < self.x1 or not self.y0 < self.y1:
            raise InvalidParam(f"degenerate rectangle {self}")

    @classmethod
    def from_um(cls, layer: str, x0, y0, x1, y1) -> "Rect":
        return cls(layer, to_db(x0), to_db(y0), to_db(x1), to_db(y1))

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def translated(self, dx: int, dy: int) -> "Rect":
        return Rect(self.layer, self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def touches(self, other: "Rect") -> bool:
        """Closed-set intersection: a shared edge or corner counts."""
        return (
            self.x0 <= other.x1 and other.x0 <= self.x1
            and self.y0 <= other.y1 and other.y0 <= self.y1
        )

    def overlaps(self, other: "Rect") -> bool:
        return (
            self.x0 < other.x1 and other.x0 < self.x1
            and self.y0 < other.y1 and other.y0 < self.y1
        )


@dataclass(frozen=True)
class Ref:
    structure: str
    x: int
    y: int


@dataclass(frozen=True)
class Structure:
    name: str
    rects: tuple[Rect, ...] = ()
    refs: tuple[Ref, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))
        object.__setattr__(self, "refs", tuple(self.refs))


@dataclass
class LayoutDb:
    name: str = "RRAM"
    structures: dict[str, Structure] = field(default_factory=dict)
    top: str | None = None
    layers: dict[str, LayerId] = field(default_factory=lambda: dict(DEFAULT_LAYERS))
    db_unit: float = DB_UNIT_M
    db_per_user: int = DB_PER_UM

    def add(self, structure: Structure) -> Structure:
        if structure.name in self.structures:
            raise InvalidParam(f"duplicate structure {structure.name}")
        self.structures[structure.name] = structure
        return structure

    def validate(self) -> None:
        check_layer_table(self.layers)
        if self.top is not None and self.top not in self.structures:
            raise InvalidParam(f"top structure {self.top} does not exist")
        state: dict[str, int] = {}

        def visit(name: str):
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                raise InvalidParam(f"reference cycle through {name}")
            if name not in self.structures:
                raise InvalidParam(f"reference to missing structure {name}")
            state[name] = 1
            for ref in self.structures[name].refs:
                visit(ref.structure)
            state[name] = 2

        for name in self.structures:
            visit(name)
        for s in self.structures.values():
            for r in s.rects:
                if r.layer not in self.layers:
                    raise InvalidParam(f"rect on unknown layer {r.layer} in {s.name}")

    def flatten(self, name: str | None = None) -> list[Rect]:
        """Absolute rectangles under ``name`` (default: top), in traversal order."""
        cache: dict[str, list[Rect]] = {}

        def flat(n: str) -> list[Rect]:
            if n not in cache:
                s = self.structures[n]
                out = list(s.rects)
                for ref in s.refs:
                    out.extend(r.translated(ref.x, ref.y) for r in flat(ref.structure))
                cache[n] = out
            return cache[n]

        name = name or self.top
        return list(flat(name)) if name else []

    def placements(self, leaf: str, name: str | None = None) -> list[tuple[str, int, int]]:
        """Absolute origins of every reference to a structure named ``leaf``
        or ``leaf$<variant>``."""
        out: list[tuple[str, int, int]] = []

        def walk(n: str, dx: int, dy: int):
            for ref in self.structures[n].refs:
                if ref.structure == leaf or ref.structure.startswith(leaf + "$"):
                    out.append((ref.structure, dx + ref.x, dy + ref.y))
                else:
                    walk(ref.structure, dx + ref.x, dy + ref.y)

        name = name or self.top
        if name:
            walk(name, 0, 0)
        return out

    def bbox(self, name: str | None = None) -> tuple[int, int, int, int] | None:
        rects = self.flatten(name)
        if not rects:
            return None
        return (
            min(r.x0 for r in rects), min(r.y0 for r in rects),
            max(r.x1 for r in rects), max(r.y1 for r in rects),
        )

    def reference_count(self, name: str) -> int:
        return len(self.structures[name].refs)


def iter_layers(rects: Iterable[Rect]) -> Iterator[tuple[str, list[Rect]]]:
    by_layer: dict[str, list[Rect]] = {}
    for r in rects:
        by_layer.setdefault(r.layer, []).append(r)
    for layer in sorted(by_layer):
        yield layer, by_layer[layer]
