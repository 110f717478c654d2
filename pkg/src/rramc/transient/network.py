"""Linear R/C networks driven by grounded voltage sources."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParam, SingularNetwork

GROUND = "0"


@dataclass(frozen=True)
class Pwl:
    """Piecewise-linear waveform, held constant outside its time span."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise InvalidParam("PWL waveform needs at least one point")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParam("PWL time points must be strictly increasing")

    @classmethod
    def constant(cls, v: float) -> "Pwl":
        return cls(((0.0, v),))

    def value(self, t):
        ts, vs = zip(*self.points)
        return np.interp(t, ts, vs)

    def discontinuities(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Step:
    """Ideal step: ``v0`` up to and including ``t0``, ``v1`` afterwards."""

    v1: float
    t0: float = 0.0
    v0: float = 0.0

    def value(self, t):
        return np.where(np.asarray(t) <= self.t0, self.v0, self.v1)

    def discontinuities(self) -> tuple[float, ...]:
        return (self.t0,)


@dataclass
class RcNetwork:
    resistors: list[tuple[str, str, float]] = field(default_factory=list)
    capacitors: list[tuple[str, str, float]] = field(default_factory=list)
    sources: list[tuple[str, object]] = field(default_factory=list)

    def add_resistor(self, a: str, b: str, ohms: float) -> None:
        self.resistors.append((a, b, float(ohms)))

    def add_capacitor(self, a: str, b: str, farads: float) -> None:
        self.capacitors.append((a, b, float(farads)))

    def add_source(self, node: str, waveform) -> None:
        self.sources.append((node, waveform))

    @property
    def nodes(self) -> list[str]:
        seen: dict[str, None] = {}
        for a, b, _ in self.resistors + self.capacitors:
            seen.setdefault(a)
            seen.setdefault(b)
        for n, _ in self.sources:
            seen.setdefault(n)
        seen.pop(GROUND, None)
        return list(seen)

    @property
    def source_nodes(self) -> list[str]:
        return [n for n, _ in self.sources]

    @property
    def free_nodes(self) -> list[str]:
        driven = set(self.source_nodes)
        return [n for n in self.nodes if n not in driven]

    def validate(self) -> None:
        for kind, elems in (("resistor", self.resistors), ("capacitor", self.capacitors)):
            for a, b, v in elems:
                if not (math.isfinite(v) and v > 0):
                    raise InvalidParam(f"{kind} {a}-{b} has non-positive value {v}")
                if a == b:
                    raise InvalidParam(f"{kind} shorted on node {a}")
        driven = self.source_nodes
        if GROUND in driven:
            raise InvalidParam("ground cannot carry a source")
        if len(set(driven)) != len(driven):
            raise InvalidParam("node driven by more than one source")
        # every free node needs a resistive path to ground or a source
        parent = {n: n for n in self.nodes + [GROUND]}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for n in driven:
            parent[find(n)] = find(GROUND)
        for a, b, _ in self.resistors:
            parent[find(a)] = find(b)
        anchor = find(GROUND)
        floating = [n for n in self.free_nodes if find(n) != anchor]
        if floating:
            raise SingularNetwork(f"nodes without a DC path to ground: {', '.join(floating[:5])}")
