"""Per-cell line parasitics and the RC ladders built from them.

Capacitance and resistance of a SEL, P or N line grow linearly with the
number of cells on the line.  The default rates are extraction results for
the reference 180 nm cell; they are inputs here, not derived from geometry.
Cross-capacitance is already folded into the capacitance rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .arch import LineKind
from .errors import EmptyLine, InvalidRates
from .kvfile import format_kv, parse_float, parse_kv

DEFAULT_C_PER_CELL = {LineKind.SEL: 5.83e-15, LineKind.N: 3.31e-15, LineKind.P: 2.48e-15}
DEFAULT_R_PER_CELL = {LineKind.SEL: 1.28, LineKind.N: 0.14, LineKind.P: 0.14}

_C_KEYS = {LineKind.SEL: "c_sel_f_per_cell", LineKind.N: "c_n_f_per_cell", LineKind.P: "c_p_f_per_cell"}
_R_KEYS = {LineKind.SEL: "r_sel_ohm_per_cell", LineKind.N: "r_n_ohm_per_cell", LineKind.P: "r_p_ohm_per_cell"}
_GATE_KEY = "c_gate_f_per_cell"


@dataclass(frozen=True)
class ParasiticRates:
    c_per_cell: dict = field(default_factory=lambda: dict(DEFAULT_C_PER_CELL))
    r_per_cell: dict = field(default_factory=lambda: dict(DEFAULT_R_PER_CELL))
    # SEL gate loading is excluded from the extracted rates; optional adder.
    c_gate_per_cell: float = 0.0

    def __post_init__(self):
        c = {LineKind(k): float(v) for k, v in self.c_per_cell.items()}
        r = {LineKind(k): float(v) for k, v in self.r_per_cell.items()}
        object.__setattr__(self, "c_per_cell", c)
        object.__setattr__(self, "r_per_cell", r)
        if set(c) != set(LineKind) or set(r) != set(LineKind):
            raise InvalidRates("rates must cover SEL, P and N")
        for v in (*c.values(), *r.values()):
            if not (math.isfinite(v) and v > 0):
                raise InvalidRates(f"rate {v} must be finite and positive")
        if not c[LineKind.SEL] > c[LineKind.N] > c[LineKind.P]:
            raise InvalidRates("capacitance rates must satisfy SEL > N > P")
        if r[LineKind.N] != r[LineKind.P]:
            raise InvalidRates("P and N lines share a layout shape and must have equal resistance")
        if not (math.isfinite(self.c_gate_per_cell) and self.c_gate_per_cell >= 0):
            raise InvalidRates("gate capacitance adder must be >= 0")

    @classmethod
    def from_text(cls, text: str, source: str = "<rates>") -> "ParasiticRates":
        kv = parse_kv(text, source)
        known = set(_C_KEYS.values()) | set(_R_KEYS.values()) | {_GATE_KEY}
        unknown = sorted(set(kv) - known)
        if unknown:
            raise InvalidRates(f"{source}: unknown keys {', '.join(unknown)}")
        c = dict(DEFAULT_C_PER_CELL)
        r = dict(DEFAULT_R_PER_CELL)
        for kind, key in _C_KEYS.items():
            if key in kv:
                c[kind] = parse_float(kv[key], key)
        for kind, key in _R_KEYS.items():
            if key in kv:
                r[kind] = parse_float(kv[key], key)
        gate = parse_float(kv[_GATE_KEY], _GATE_KEY) if _GATE_KEY in kv else 0.0
        return cls(c, r, gate)

    def to_text(self) -> str:
        items = [(_C_KEYS[k], repr(self.c_per_cell[k])) for k in LineKind]
        items += [(_R_KEYS[k], repr(self.r_per_cell[k])) for k in LineKind]
        items.append((_GATE_KEY, repr(self.c_gate_per_cell)))
        return format_kv(items)


@dataclass(frozen=True)
class RcLadder:
    """Series R / shunt C segments from the driven end to the far end."""

    segments: tuple[tuple[float, float], ...]
    source_node: str = "in"
    far_node: str = "far"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple((float(r), float(c)) for r, c in self.segments))
        if not self.segments:
            raise EmptyLine("a ladder needs at least one segment")
        for r, c in self.segments:
            if not (r >= 0 and c >= 0 and math.isfinite(r) and math.isfinite(c)):
                raise InvalidRates(f"segment ({r}, {c}) must be finite and non-negative")

    @property
    def total_resistance(self) -> float:
        return math.fsum(r for r, _ in self.segments)

    @property
    def total_capacitance(self) -> float:
        return math.fsum(c for _, c in self.segments)


def _check_count(n_cells: int) -> None:
    if n_cells < 0:
        raise ValueError("n_cells must be >= 0")


def line_capacitance(kind: LineKind, n_cells: int, rates: ParasiticRates = ParasiticRates()) -> float:
    _check_count(n_cells)
    c = rates.c_per_cell[LineKind(kind)]
    if LineKind(kind) is LineKind.SEL:
        c += rates.c_gate_per_cell
    return n_cells * c


def line_resistance(kind: LineKind, n_cells: int, rates: ParasiticRates = ParasiticRates()) -> float:
    _check_count(n_cells)
    return n_cells * rates.r_per_cell[LineKind(kind)]


def build_ladder(kind: LineKind, n_cells: int, rates: ParasiticRates = ParasiticRates()) -> RcLadder:
    """One segment per cell; totals equal the ``line_*`` values exactly."""
    if n_cells < 1:
        raise EmptyLine(f"{LineKind(kind).value} line with {n_cells} cells")
    c = line_capacitance(kind, 1, rates)
    r = line_resistance(kind, 1, rates)
    return RcLadder(((r, c),) * n_cells)


def elmore_delay(ladder: RcLadder) -> float:
    """Far-node Elmore delay: each series R times all capacitance downstream of it."""
    total = 0.0
    downstream = 0.0
    for r, c in reversed(ladder.segments):
        downstream += c
        total += r * downstream
    return total
