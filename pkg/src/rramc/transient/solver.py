"""Nodal analysis of RC networks: DC operating point and transient.

Source nodes have known voltages and are eliminated, which leaves the
symmetric positive-definite system

    C_ff dx/dt + G_ff x = -G_fs s(t) - C_fs ds/dt

over the free nodes.  Transient steps use the trapezoidal rule; the first
step and any step that straddles an ideal source step use backward Euler.
Each rule's matrix is factored once per time step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import InvalidParam, NonFiniteValue, SingularNetwork
from .network import GROUND, RcNetwork

DENSE_LIMIT = 600


class _System:
    def __init__(self, net: RcNetwork):
        net.validate()
        self.net = net
        self.free = net.free_nodes
        self.driven = net.source_nodes
        self.fidx = {n: i for i, n in enumerate(self.free)}
        self.sidx = {n: i for i, n in enumerate(self.driven)}
        nf, ns = len(self.free), len(self.driven)
        self.G_ff, self.G_fs = self._stamp(net.resistors, nf, ns, lambda v: 1.0 / v)
        self.C_ff, self.C_fs = self._stamp(net.capacitors, nf, ns, lambda v: v)

    def _stamp(self, elems, nf, ns, value):
        ff_r, ff_c, ff_v = [], [], []
        fs_r, fs_c, fs_v = [], [], []
        for a, b, raw in elems:
            g = value(raw)
            for p, q in ((a, b), (b, a)):
                if p not in self.fidx:
                    continue
                i = self.fidx[p]
                ff_r.append(i)
                ff_c.append(i)
                ff_v.append(g)
                if q in self.fidx:
                    ff_r.append(i)
                    ff_c.append(self.fidx[q])
                    ff_v.append(-g)
                elif q in self.sidx:
                    fs_r.append(i)
                    fs_c.append(self.sidx[q])
                    fs_v.append(-g)
        ff = sp.csc_matrix((ff_v, (ff_r, ff_c)), shape=(nf, nf))
        fs = sp.csc_matrix((fs_v, (fs_r, fs_c)), shape=(nf, ns))
        return ff, fs

    def sources_at(self, t) -> np.ndarray:
        """Source values, shape (len(t), n_sources)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, len(self.driven)))
        for j, (_, wave) in enumerate(self.net.sources):
            out[:, j] = wave.value(t)
        return out

    def factor(self, matrix):
        try:
            lu = splu(sp.csc_matrix(matrix))
        except RuntimeError as exc:
            raise SingularNetwork(str(exc)) from None
        return lu

    def dc(self, s: np.ndarray) -> np.ndarray:
        if not self.free:
            return np.zeros(0)
        x = self.factor(self.G_ff).solve(-(self.G_fs @ s))
        if not np.all(np.isfinite(x)):
            raise SingularNetwork("DC solution is not finite")
        return x

    def assemble(self, x: np.ndarray, s: np.ndarray) -> dict[str, float]:
        out = {n: float(x[i]) for n, i in self.fidx.items()}
        out.update({n: float(s[i]) for n, i in self.sidx.items()})
        return out


def dc_solve(net: RcNetwork, at_time: float = 0.0) -> dict[str, float]:
    """Node voltages with capacitors open and sources at their ``at_time`` value."""
    sys_ = _System(net)
    s = sys_.sources_at(at_time)[0]
    return sys_.assemble(sys_.dc(s), s)


@dataclass
class Waveforms:
    times: np.ndarray
    nodes: list[str]
    values: np.ndarray  # shape (len(times), len(nodes))

    def __post_init__(self):
        self._index = {n: i for i, n in enumerate(self.nodes)}

    def node(self, name: str) -> np.ndarray:
        if name == GROUND:
            return np.zeros_like(self.times)
        return self.values[:, self._index[name]]

    def difference(self, a: str, b: str) -> np.ndarray:
        return self.node(a) - self.node(b)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def to_csv(self, nodes=None) -> str:
        """Long-format ``time_s,node,volts`` rows, time-major."""
        names = list(self.nodes if nodes is None else nodes)
        cols = [self.node(n) for n in names]
        lines = ["time_s,node,volts"]
        for i, t in enumerate(self.times):
            lines.extend(f"{t:.16e},{n},{c[i]:.16e}" for n, c in zip(names, cols))
        return "\n".join(lines) + "\n"


def open_circuit_time_constants(net: RcNetwork) -> list[float]:
    """``C * R_thevenin`` for each capacitor with every other capacitor open."""
    sys_ = _System(net)
    if not sys_.free:
        return []
    ginv = np.linalg.inv(sys_.G_ff.toarray())
    taus = []
    for a, b, c in net.capacitors:
        ia, ib = sys_.fidx.get(a), sys_.fidx.get(b)
        r = 0.0
        if ia is not None:
            r += ginv[ia, ia]
        if ib is not None:
            r += ginv[ib, ib]
        if ia is not None and ib is not None:
            r -= 2 * ginv[ia, ib]
        if r > 0:
            taus.append(c * r)
    return taus


def default_timestep(net: RcNetwork) -> float:
    taus = open_circuit_time_constants(net)
    if not taus:
        raise InvalidParam("network has no capacitive time constant")
    return min(taus) / 100.0


def step_moments(net: RcNetwork, t_before: float, t_after: float) -> dict[str, tuple[float, float]]:
    """First moment of the response to a source change at ``t_before -> t_after``.

    Returns ``node -> (moment, swing)`` where ``swing`` is the DC change and
    ``moment`` is the area between the final value and the response, so
    ``moment / swing`` is the node's Elmore delay.
    """
    sys_ = _System(net)
    s0, s1 = sys_.sources_at([t_before, t_after])
    x0, x1 = sys_.dc(s0), sys_.dc(s1)
    dx, ds = x1 - x0, s1 - s0
    rhs = sys_.C_ff @ dx + sys_.C_fs @ ds
    m = sys_.factor(sys_.G_ff).solve(rhs) if sys_.free else np.zeros(0)
    out = {n: (float(m[i]), float(dx[i])) for n, i in sys_.fidx.items()}
    out.update({n: (0.0, float(ds[i])) for n, i in sys_.sidx.items()})
    return out


def solve_transient(net: RcNetwork, t_stop: float, dt: float | None = None) -> Waveforms:
    """Integrate from the t=0 DC point to ``t_stop`` at a uniform step ``dt``."""
    if dt is None:
        dt = default_timestep(net)
    if not (dt > 0 and t_stop > 0):
        raise InvalidParam("dt and t_stop must be positive")
    sys_ = _System(net)
    steps = int(math.ceil(t_stop / dt - 1e-9))
    times = np.arange(steps + 1) * dt
    s = sys_.sources_at(times)
    nf = len(sys_.free)
    x = np.zeros((steps + 1, nf))
    x[0] = sys_.dc(s[0])

    if nf:
        jumps = sorted({t for _, w in net.sources for t in w.discontinuities()})
        be_steps = {0}
        for tj in jumps:
            k = int(math.floor(tj / dt + 1e-9))
            if 0 <= k < steps:
                be_steps.add(k)
        C, G = sys_.C_ff, sys_.G_ff
        Cs, Gs = sys_.C_fs, sys_.G_fs
        be = sys_.factor(C / dt + G)
        tr = sys_.factor(2.0 * C / dt + G)
        tr_rhs, C_dt, Cs_dt, Gs_d = 2.0 * C / dt - G, C / dt, Cs / dt, Gs
        if nf <= DENSE_LIMIT:
            # per-step products on small systems are faster dense
            tr_rhs, C_dt, Cs_dt, Gs_d = (m.toarray() for m in (tr_rhs, C_dt, Cs_dt, Gs_d))
        for k in range(steps):
            xk, s0, s1 = x[k], s[k], s[k + 1]
            if k in be_steps:
                rhs = C_dt @ xk - Cs_dt @ (s1 - s0) - Gs_d @ s1
                x[k + 1] = be.solve(rhs)
            else:
                rhs = tr_rhs @ xk - 2.0 * (Cs_dt @ (s1 - s0)) - Gs_d @ (s1 + s0)
                x[k + 1] = tr.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise NonFiniteValue("transient solution contains non-finite samples")

    values = np.hstack([x, s])
    return Waveforms(times, sys_.free + sys_.driven, values)
