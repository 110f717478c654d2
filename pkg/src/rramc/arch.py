"""Array architecture: geometry, address decoding and read/write protocol.

The array is ``2**Y`` rows by ``b * 2**X`` columns.  A row address of ``Y``
bits drives a one-hot decoder onto the SEL lines; an ``X``-bit word select
drives a ``b*2**X``-to-``b`` multiplexer on the P and N lines.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import ConfigError, DisturbViolation, InvalidAddress, InvalidParam, NotPowerOfTwo

DEFAULT_VDD = 1.8
DEFAULT_V_READ = 0.2
READ_DISTURB_LIMIT = 0.5
DEFAULT_T_WRITE = 10e-9
DEFAULT_T_READ = 10e-9
DEFAULT_R_HIGH = 5e6
DEFAULT_R_LOW = 10e3

# column = bit * 2**X + word_select.  Only the grouped mapping exists today.
WORD_MAPPING = "grouped"


class LineKind(str, Enum):
    SEL = "SEL"
    P = "P"
    N = "N"


class CellState(str, Enum):
    H = "H"
    L = "L"


class PlanKind(str, Enum):
    READ = "read"
    WRITE = "write"


def _log2_exact(value: int) -> int | None:
    if value < 1 or value & (value - 1):
        return None
    return value.bit_length() - 1


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    word_bits: int
    row_addr_bits: int
    col_sel_bits: int
    vdd: float = DEFAULT_VDD
    v_read: float = DEFAULT_V_READ
    v_write_threshold: float | None = None
    t_write: float = DEFAULT_T_WRITE
    t_read: float = DEFAULT_T_READ

    def __post_init__(self):
        if min(self.rows, self.cols, self.word_bits) < 1:
            raise ConfigError("rows, cols and word_bits must be >= 1")
        if self.rows != 2**self.row_addr_bits:
            raise NotPowerOfTwo(f"rows={self.rows} != 2**{self.row_addr_bits}")
        if self.cols != self.word_bits * 2**self.col_sel_bits:
            raise NotPowerOfTwo(
                f"cols={self.cols} != {self.word_bits} * 2**{self.col_sel_bits}"
            )
        if not 0 < self.v_read < READ_DISTURB_LIMIT:
            raise ConfigError(f"v_read must lie in (0, {READ_DISTURB_LIMIT}) V, got {self.v_read}")
        if self.vdd <= self.v_read:
            raise ConfigError("vdd must exceed v_read")
        if self.v_write_threshold is None:
            object.__setattr__(self, "v_write_threshold", 0.9 * self.vdd)
        if not self.v_read < self.v_write_threshold <= self.vdd:
            raise ConfigError("v_write_threshold must lie in (v_read, vdd]")
        if self.t_write <= 0 or self.t_read <= 0:
            raise ConfigError("pulse widths must be positive")

    @property
    def words_per_row(self) -> int:
        return 2**self.col_sel_bits

    @property
    def n_words(self) -> int:
        return self.rows * self.words_per_row


def derive_geometry(rows: int, cols: int, word_bits: int, **electrical) -> ArrayConfig:
    """Validate an ``rows x cols`` array with ``word_bits``-bit words.

    Raises NotPowerOfTwo unless ``rows`` and ``cols / word_bits`` are both
    integral powers of two.  Extra keyword arguments (``vdd``, ``v_read``,
    ...) override the electrical defaults.
    """
    if min(rows, cols, word_bits) < 1:
        raise ConfigError("rows, cols and word_bits must be >= 1")
    y = _log2_exact(rows)
    if y is None:
        raise NotPowerOfTwo(f"rows={rows} is not a power of two")
    if cols % word_bits:
        raise NotPowerOfTwo(f"cols={cols} is not a multiple of word_bits={word_bits}")
    x = _log2_exact(cols // word_bits)
    if x is None:
        raise NotPowerOfTwo(f"cols/word_bits={cols // word_bits} is not a power of two")
    return ArrayConfig(rows, cols, word_bits, y, x, **electrical)


@dataclass(frozen=True, order=True)
class Address:
    row_bits: int
    word_select: int

    def check(self, config: ArrayConfig) -> None:
        if not 0 <= self.row_bits < config.rows:
            raise InvalidAddress(f"row {self.row_bits} outside 0..{config.rows - 1}")
        if not 0 <= self.word_select < config.words_per_row:
            raise InvalidAddress(
                f"word select {self.word_select} outside 0..{config.words_per_row - 1}"
            )

    @classmethod
    def from_linear(cls, config: ArrayConfig, addr: int) -> "Address":
        if not 0 <= addr < config.n_words:
            raise InvalidAddress(f"address {addr} outside 0..{config.n_words - 1}")
        return cls(addr >> config.col_sel_bits, addr & (config.words_per_row - 1))

    def linear(self, config: ArrayConfig) -> int:
        return (self.row_bits << config.col_sel_bits) | self.word_select


@dataclass(frozen=True, order=True)
class LineId:
    kind: LineKind
    index: int

    def __str__(self):
        return f"{self.kind.value}{self.index}"

    def check(self, config: ArrayConfig) -> None:
        limit = config.rows if self.kind is LineKind.SEL else config.cols
        if not 0 <= self.index < limit:
            raise InvalidParam(f"{self} out of range")


@dataclass(frozen=True)
class Event:
    time: float
    line: LineId
    voltage: float


@dataclass(frozen=True)
class OperationPlan:
    kind: PlanKind
    target: Address
    events: tuple[Event, ...]
    duration: float
    data: int | None = None

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(t < 0 for t in times) or times != sorted(times):
            raise InvalidParam("plan events must be time-ordered and non-negative")
        if times and self.duration < times[-1]:
            raise InvalidParam("plan duration ends before its last event")

    def final_levels(self) -> dict[LineId, float]:
        levels: dict[LineId, float] = {}
        for e in self.events:
            levels[e.line] = e.voltage
        return levels


def decode_row(config: ArrayConfig, address: Address) -> list[bool]:
    address.check(config)
    return [i == address.row_bits for i in range(config.rows)]


def select_word_columns(config: ArrayConfig, word_select: int) -> list[int]:
    if not 0 <= word_select < config.words_per_row:
        raise InvalidAddress(f"word select {word_select} outside 0..{config.words_per_row - 1}")
    stride = config.words_per_row
    return [bit * stride + word_select for bit in range(config.word_bits)]


def plan_read(config: ArrayConfig, address: Address) -> OperationPlan:
    """SEL high on the addressed row, ``v_read`` on the word's P lines, every N grounded."""
    address.check(config)
    events = [Event(0.0, LineId(LineKind.SEL, address.row_bits), config.vdd)]
    events += [
        Event(0.0, LineId(LineKind.P, col), config.v_read)
        for col in select_word_columns(config, address.word_select)
    ]
    events += [Event(0.0, LineId(LineKind.N, col), 0.0) for col in range(config.cols)]
    return OperationPlan(PlanKind.READ, address, tuple(events), config.t_read)


def plan_write(config: ArrayConfig, address: Address, word: int) -> OperationPlan:
    """Write ``word``; bit k lands on column ``k*2**X + word_select``.

    A 1 bit is stored as L (P pulsed to vdd, N at 0), a 0 bit as H
    (N pulsed to vdd, P at 0).
    """
    address.check(config)
    if not 0 <= word < 2**config.word_bits:
        raise InvalidParam(f"word {word:#x} does not fit in {config.word_bits} bits")
    events = [Event(0.0, LineId(LineKind.SEL, address.row_bits), config.vdd)]
    for bit, col in enumerate(select_word_columns(config, address.word_select)):
        one = (word >> bit) & 1
        events.append(Event(0.0, LineId(LineKind.P, col), config.vdd if one else 0.0))
        events.append(Event(0.0, LineId(LineKind.N, col), 0.0 if one else config.vdd))
    return OperationPlan(PlanKind.WRITE, address, tuple(events), config.t_write, data=word)


@dataclass(frozen=True)
class CellStateMatrix:
    states: tuple[tuple[CellState, ...], ...]
    r_high: float = DEFAULT_R_HIGH
    r_low: float = DEFAULT_R_LOW

    def __post_init__(self):
        if not self.r_high > self.r_low > 0:
            raise InvalidParam("require r_high > r_low > 0")
        widths = {len(row) for row in self.states}
        if len(widths) > 1:
            raise InvalidParam("ragged state matrix")
        for row in self.states:
            for s in row:
                if not isinstance(s, CellState):
                    raise InvalidParam(f"cell state {s!r} is not H or L")

    @classmethod
    def uniform(cls, config: ArrayConfig, state: CellState = CellState.H, **kw) -> "CellStateMatrix":
        return cls(tuple((state,) * config.cols for _ in range(config.rows)), **kw)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[str]], **kw) -> "CellStateMatrix":
        return cls(tuple(tuple(CellState(s) for s in row) for row in rows), **kw)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.states), len(self.states[0]) if self.states else 0

    def resistance(self, row: int, col: int) -> float:
        return self.r_high if self.states[row][col] is CellState.H else self.r_low

    def digest(self) -> str:
        text = "\n".join("".join(s.value for s in row) for row in self.states)
        return hashlib.sha256(text.encode()).hexdigest()


def _apply_levels(config, cells, levels, plan):
    sel_high = [
        line.index for line, v in levels.items()
        if line.kind is LineKind.SEL and v > config.vdd / 2
    ]
    p = [0.0] * config.cols
    n = [0.0] * config.cols
    for line, v in levels.items():
        if line.kind is LineKind.P:
            p[line.index] = v
        elif line.kind is LineKind.N:
            n[line.index] = v
    if plan.kind is PlanKind.READ:
        for row in sel_high:
            for col in range(config.cols):
                if abs(p[col] - n[col]) > config.v_read:
                    raise DisturbViolation(
                        f"read plan puts {abs(p[col] - n[col]):.3f} V across cell ({row}, {col})"
                    )
        return
    thr = config.v_write_threshold
    for row in sel_high:
        for col in range(config.cols):
            drop = p[col] - n[col]
            if drop >= thr:
                cells[row][col] = CellState.L
            elif -drop >= thr:
                cells[row][col] = CellState.H


def simulate_protocol(
    config: ArrayConfig, initial: CellStateMatrix, plans: Sequence[OperationPlan]
) -> tuple[CellStateMatrix, list[int]]:
    """Run plans against a bistable cell model.

    A cell switches only while its SEL line is high and ``|V_P - V_N|``
    reaches the write threshold (P above N sets L, N above P resets H).
    Undriven lines sit at 0 V and every plan starts from all lines at 0 V.
    Returns the final states and one word per read plan, in plan order.
    """
    if initial.shape != (config.rows, config.cols):
        raise InvalidParam(f"state matrix {initial.shape} does not match {config.rows}x{config.cols}")
    cells = [list(row) for row in initial.states]
    reads: list[int] = []
    for plan in plans:
        plan.target.check(config)
        levels: dict[LineId, float] = {}
        sel_count = 0
        i = 0
        events = plan.events
        while i < len(events):
            t = events[i].time
            while i < len(events) and events[i].time == t:
                e = events[i]
                e.line.check(config)
                levels[e.line] = e.voltage
                i += 1
            sel_count = max(sel_count, sum(
                1 for line, v in levels.items()
                if line.kind is LineKind.SEL and v > config.vdd / 2
            ))
            _apply_levels(config, cells, levels, plan)
        if sel_count != 1:
            raise InvalidParam(f"plan must assert exactly one SEL line, found {sel_count}")
        if plan.kind is PlanKind.READ:
            word = 0
            for bit, col in enumerate(select_word_columns(config, plan.target.word_select)):
                if cells[plan.target.row_bits][col] is CellState.L:
                    word |= 1 << bit
            reads.append(word)
    final = CellStateMatrix(tuple(tuple(r) for r in cells), initial.r_high, initial.r_low)
    return final, reads


def format_trace(plans: Sequence[OperationPlan]) -> str:
    """One ``time line voltage`` line per event; plans are laid end to end."""
    out = []
    offset = 0.0
    for plan in plans:
        for e in plan.events:
            out.append(f"{offset + e.time:.6e} {e.line} {e.voltage:.6f}")
        offset += plan.duration
    return "\n".join(out) + ("\n" if out else "")
