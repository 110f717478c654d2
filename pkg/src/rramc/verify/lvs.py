"""Layout-versus-schematic comparison by iterative signature refinement.

Both circuits are reduced to bipartite net/device graphs.  Nets start
coloured by their port name (internal nets share one colour) and devices by
their kind.  Each round recolours a device by the colours of the nets on its
terminals, then a net by the multiset of (device colour, terminal) pairs
touching it.  Colours are interned through one shared table so the two
circuits stay comparable.  The circuits match when every round produces
the same colour histogram on both sides.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..netlist import DeviceKind, FlatCircuit, Netlist, flatten, strip_parasitics
from .extract import ConnectivityGraph

MAX_ROUNDS = 12


@dataclass(frozen=True)
class MatchReport:
    match: bool
    message: str
    details: tuple[str, ...] = field(default=())

    def text(self) -> str:
        head = "LVS MATCH" if self.match else "LVS MISMATCH"
        lines = [f"{head}: {self.message}"]
        lines.extend(f"  {d}" for d in self.details)
        return "\n".join(lines) + "\n"


class _Coloring:
    def __init__(self, flat: FlatCircuit):
        self.flat = flat
        ports = set(flat.ports)
        self.nets = sorted(flat.nets())
        self.net_color = {n: ("port", n) if n in ports else ("net",) for n in self.nets}
        self.dev_color = {i: ("dev", d.kind.value) for i, d in enumerate(flat.devices)}
        self.pins: dict[str, list[tuple[int, str]]] = {n: [] for n in self.nets}
        for i, d in enumerate(flat.devices):
            for t, n in d.terminals:
                self.pins[n].append((i, t))

    def refine_devices(self):
        return {
            i: (self.dev_color[i], tuple((t, self.net_color[n]) for t, n in d.terminals))
            for i, d in enumerate(self.flat.devices)
        }

    def refine_nets(self):
        return {
            n: (self.net_color[n], tuple(sorted((self.dev_color[i], t) for i, t in self.pins[n])))
            for n in self.nets
        }


def _intern(a: dict, b: dict) -> tuple[dict, dict]:
    table = {sig: k for k, sig in enumerate(sorted(set(a.values()) | set(b.values()), key=repr))}
    return {x: table[s] for x, s in a.items()}, {x: table[s] for x, s in b.items()}


def _first_divergence(kind: str, lay: dict, ref: dict) -> str | None:
    hl, hr = Counter(lay.values()), Counter(ref.values())
    for color in sorted(set(hl) | set(hr)):
        if hl[color] != hr[color]:
            side, pool = ("layout", lay) if hl[color] > hr[color] else ("schematic", ref)
            example = sorted(str(x) for x, c in pool.items() if c == color)[0]
            return (
                f"{kind} class {color}: layout has {hl[color]}, schematic has {hr[color]} "
                f"(e.g. {side} {kind} {example})"
            )
    return None


def compare_circuits(layout: FlatCircuit, schematic: FlatCircuit) -> MatchReport:
    # device counts per kind
    kinds = sorted({d.kind.value for d in layout.devices + schematic.devices})
    for k in kinds:
        nl = layout.count(DeviceKind(k))
        ns = schematic.count(DeviceKind(k))
        if nl != ns:
            return MatchReport(False, f"device count mismatch for {k}: layout {nl}, schematic {ns}")
    nl, ns = len(layout.nets()), len(schematic.nets())
    if nl != ns:
        return MatchReport(False, f"net count mismatch: layout {nl}, schematic {ns}")
    missing = sorted(set(schematic.ports) - set(layout.ports))
    extra = sorted(set(layout.ports) - set(schematic.ports))
    if missing or extra:
        details = tuple(f"missing label {p}" for p in missing[:10]) + tuple(
            f"unexpected label {p}" for p in extra[:10]
        )
        return MatchReport(False, "port label sets differ", details)

    a, b = _Coloring(layout), _Coloring(schematic)
    n_classes = -1
    for round_no in range(1, MAX_ROUNDS + 1):
        a.dev_color, b.dev_color = _intern(a.refine_devices(), b.refine_devices())
        msg = _first_divergence("device", {layout.devices[i].path: c for i, c in a.dev_color.items()},
                                {schematic.devices[i].path: c for i, c in b.dev_color.items()})
        if msg:
            return MatchReport(False, f"neighbourhood signature mismatch in round {round_no}", (msg,))
        a.net_color, b.net_color = _intern(a.refine_nets(), b.refine_nets())
        msg = _first_divergence("net", a.net_color, b.net_color)
        if msg:
            return MatchReport(False, f"neighbourhood signature mismatch in round {round_no}", (msg,))
        classes = len(set(a.net_color.values())) + len(set(a.dev_color.values()))
        if classes == n_classes:
            break
        n_classes = classes
    return MatchReport(
        True,
        f"{len(layout.devices)} devices, {len(layout.nets())} nets, stable after {round_no} rounds",
    )


def lvs(extracted: ConnectivityGraph, reference: Netlist) -> MatchReport:
    """Compare an extracted layout against a reference netlist.

    Parasitic resistors and capacitors in the reference are collapsed first,
    so an extracted-style netlist can serve as the schematic too.
    """
    flat = flatten(reference, global_nets=("0",) + extracted.global_nets)
    if any(d.kind in (DeviceKind.RESISTOR, DeviceKind.CAPACITOR) for d in flat.devices):
        flat = strip_parasitics(flat)
    return compare_circuits(extracted.circuit(), flat)
