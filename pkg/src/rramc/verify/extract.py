"""Connectivity extraction from a tiled array layout.

Touching same-layer rectangles on the template's routing layers form nets.
Each cell placement contributes a memristor and an access transistor whose
P, SEL and N terminals bind to whatever routing net overlaps the
template's pin rectangles at that placement.  The cell's internal node is
implicit, and the transistor bulk goes to the global ``GND_BULK`` net.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..arch import LineKind
from ..errors import DisconnectedPort
from ..layout.db import LayoutDb, Rect
from ..layout.template import CellTemplate
from ..netlist import BULK, DeviceKind, FlatCircuit, FlatDevice, line_net


class _Grid:
    """Bucket rectangles on a coarse grid for neighbour queries."""

    def __init__(self, bw: int, bh: int):
        self.bw, self.bh = bw, bh
        self.cells: dict[tuple, list[int]] = defaultdict(list)

    def _span(self, r: Rect, pad: int = 0):
        for gx in range((r.x0 - pad) // self.bw, (r.x1 + pad) // self.bw + 1):
            for gy in range((r.y0 - pad) // self.bh, (r.y1 + pad) // self.bh + 1):
                yield r.layer, gx, gy

    def insert(self, idx: int, r: Rect) -> None:
        for key in self._span(r):
            self.cells[key].append(idx)

    def near(self, r: Rect, pad: int = 0) -> set[int]:
        out: set[int] = set()
        for key in self._span(r, pad):
            out.update(self.cells.get(key, ()))
        return out


@dataclass
class ConnectivityGraph:
    nets: dict[str, tuple[int, ...]]  # net name -> routing rect indices (empty for internal nets)
    devices: list[FlatDevice]
    rects: list[Rect]
    labels: tuple[str, ...] = ()
    global_nets: tuple[str, ...] = (BULK,)
    unbound: tuple[str, ...] = field(default=())

    def circuit(self) -> FlatCircuit:
        return FlatCircuit(self.labels + self.global_nets, list(self.devices))


def extract_connectivity(db: LayoutDb, template: CellTemplate) -> ConnectivityGraph:
    routing_layers = template.routing_layers()
    rects = [r for r in db.flatten() if r.layer in routing_layers]
    grid = _Grid(template.width, template.height)
    for i, r in enumerate(rects):
        grid.insert(i, r)

    parent = list(range(len(rects)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, r in enumerate(rects):
        for j in grid.near(r):
            if j > i and rects[j].layer == r.layer and r.touches(rects[j]):
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)

    cells = db.placements(template.name)
    rows = 1 + max((y // template.height for _, _, y in cells), default=-1)
    cols = 1 + max((x // template.width for _, x, _ in cells), default=-1)

    labels: dict[int, set[str]] = defaultdict(set)
    bound: list[tuple[int, int, dict[str, int]]] = []
    for sname, x, y in cells:
        i, j = y // template.height, x // template.width
        pins = {}
        for port in ("SEL", "P", "N"):
            pin = template.ports[port].translated(x, y)
            hits = sorted(
                {find(k) for k in grid.near(pin) if rects[k].layer == pin.layer and rects[k].overlaps(pin)}
            )
            if not hits:
                raise DisconnectedPort(f"cell ({i}, {j}) [{sname}] port {port} touches no routing net")
            pins[port] = hits[0]
            if port == "SEL":
                labels[hits[0]].add(line_net(LineKind.SEL, i, rows))
            else:
                labels[hits[0]].add(line_net(port, j, cols))
        bound.append((i, j, pins))

    # name nets after their pin labels; opens duplicate a label, shorts join two
    names: dict[int, str] = {}
    used: dict[str, int] = defaultdict(int)
    roots = sorted({find(k) for k in range(len(rects))})
    unbound = []
    for root in roots:
        if root in labels:
            base = "|".join(sorted(labels[root]))
        else:
            base = f"island{len(unbound)}"
            unbound.append(base)
        k = used[base]
        used[base] += 1
        names[root] = base if k == 0 else f"{base}#{k}"

    nets: dict[str, list[int]] = defaultdict(list)
    for k in range(len(rects)):
        nets[names[find(k)]].append(k)

    devices = []
    label_nets = []
    for root in roots:
        if root in labels:
            label_nets.append(names[root])
    wr, wc = len(str(max(rows - 1, 0))), len(str(max(cols - 1, 0)))
    for i, j, pins in bound:
        mid = f"mid_{i:0{wr}d}_{j:0{wc}d}"
        nets[mid] = []
        tag = f"cell_{i:0{wr}d}_{j:0{wc}d}"
        devices.append(
            FlatDevice(f"{tag}.mem", DeviceKind.MEMRISTOR, (("p", names[pins["P"]]), ("n", mid)))
        )
        devices.append(
            FlatDevice(
                f"{tag}.acc", DeviceKind.NMOS,
                (("d", mid), ("g", names[pins["SEL"]]), ("s", names[pins["N"]]), ("b", BULK)),
            )
        )
    return ConnectivityGraph(
        {n: tuple(v) for n, v in nets.items()}, devices, rects, tuple(label_nets), (BULK,), tuple(unbound)
    )
