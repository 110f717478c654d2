"""Worst-case read settling of the voltage across a memristor.

Testbench: the column's P line is held at ground and its N line is stepped
to VDD.  Each line is an RC ladder with one segment per cell, driven
through a column switch at the near end.  The observed cell sits at the
far end of both ladders: memristor from the P line to the cell's internal
node, access switch from there to the N line.

Process corners only change the access switch on-resistance; the column
switches are ``driver_ratio`` times that (same device type, wider).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..arch import DEFAULT_VDD, LineKind
from ..errors import CalibrationFailed, DegenerateFit, InvalidParam, NotSettled
from ..parasitics import ParasiticRates, build_ladder
from .network import GROUND, RcNetwork, Step
from .solver import dc_solve, solve_transient, step_moments

BAND = 0.01
T_STOP_CAP = 1e-6
TARGET_FLOOR = 550e-12
N_REF = 8
DEFAULT_SIZES = (8, 16, 32, 64, 128)

CORNER_SCALE = {"SS": 1.0, "TT": 0.7, "FF": 0.5}

# Calibrated with calibrate_switch_resistance() on the default bench and rates.
DEFAULT_SS_SWITCH_RESISTANCE = 5507.656

MID = "cell_mid"


@dataclass(frozen=True)
class CornerModel:
    name: str
    switch_on_resistance: float

    def __post_init__(self):
        if not (math.isfinite(self.switch_on_resistance) and self.switch_on_resistance > 0):
            raise InvalidParam(f"corner {self.name}: on-resistance must be positive")


def corners_from_ss(r_ss: float = DEFAULT_SS_SWITCH_RESISTANCE) -> dict[str, CornerModel]:
    return {name: CornerModel(name, r_ss * k) for name, k in CORNER_SCALE.items()}


@dataclass(frozen=True)
class ReadBench:
    """Electrical knobs of the read testbench that are not corner dependent."""

    r_mem: float = 5e6
    vdd: float = DEFAULT_VDD
    # memristor electrode + access drain junction at the cell's internal node
    c_cell: float = 20e-15
    driver_ratio: float = 1 / 16

    def __post_init__(self):
        if not (self.r_mem > 0 and self.vdd > 0 and self.c_cell >= 0 and self.driver_ratio >= 0):
            raise InvalidParam("read bench parameters must be non-negative (r_mem, vdd positive)")


@dataclass(frozen=True)
class SettlingResult:
    n_cells: int
    corner: str
    settling_time: float
    final_value: float
    dt_used: float


@dataclass(frozen=True)
class ExpFit:
    a: float
    k: float

    def __call__(self, n):
        return self.a * np.exp(self.k * np.asarray(n, dtype=float))


def settling_time(times, values, final_value: float, band_fraction: float = BAND) -> float:
    """Earliest sample time after which the waveform stays inside the band.

    The band is ``band_fraction * |final_value|`` around ``final_value`` and
    must hold for every later sample in the window.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0 or times.size != values.size:
        raise InvalidParam("waveform must be non-empty with matching time axis")
    if final_value == 0:
        raise InvalidParam("relative settling band needs a non-zero final value")
    outside = np.abs(values - final_value) > band_fraction * abs(final_value)
    if outside[-1]:
        raise NotSettled(
            f"still {abs(values[-1] - final_value):.3g} from final value at t={times[-1]:.3g} s"
        )
    hits = np.flatnonzero(outside)
    return float(times[0] if hits.size == 0 else times[hits[-1] + 1])


def _ladder_into(net: RcNetwork, prefix: str, start: str, ladder) -> str:
    prev = start
    for k, (r, c) in enumerate(ladder.segments):
        node = f"{prefix}{k}"
        net.add_resistor(prev, node, r)
        net.add_capacitor(node, GROUND, c)
        prev = node
    return prev


def build_read_testbench(
    n: int,
    rates: ParasiticRates = ParasiticRates(),
    corner: CornerModel | None = None,
    bench: ReadBench = ReadBench(),
) -> RcNetwork:
    corner = corner or corners_from_ss()["SS"]
    r_sw = corner.switch_on_resistance
    net = RcNetwork()
    net.add_source("vn", Step(bench.vdd))
    starts = {}
    for kind, src in ((LineKind.P, GROUND), (LineKind.N, "vn")):
        if bench.driver_ratio > 0:
            near = f"{kind.value.lower()}_drv"
            net.add_resistor(src, near, r_sw * bench.driver_ratio)
            starts[kind] = near
        else:
            starts[kind] = src
    p_far = _ladder_into(net, "p_", starts[LineKind.P], build_ladder(LineKind.P, n, rates))
    n_far = _ladder_into(net, "n_", starts[LineKind.N], build_ladder(LineKind.N, n, rates))
    net.add_resistor(p_far, MID, bench.r_mem)
    net.add_resistor(MID, n_far, r_sw)
    if bench.c_cell > 0:
        net.add_capacitor(MID, GROUND, bench.c_cell)
    return net


def memristor_nodes(n: int) -> tuple[str, str]:
    """(positive, negative) terminals of the observed memristor voltage."""
    return MID, f"p_{n - 1}"


def worst_case_settling(
    n: int,
    corner: CornerModel | None = None,
    rates: ParasiticRates = ParasiticRates(),
    bench: ReadBench = ReadBench(),
    steps_per_tau: int = 500,
) -> SettlingResult:
    """Settling of the far-end memristor voltage after N steps to VDD.

    ``dt`` is the observed voltage's Elmore delay over ``steps_per_tau``;
    the window starts at 20 Elmore delays and doubles up to 1 us.
    """
    if n < 1:
        raise InvalidParam("n must be >= 1")
    corner = corner or corners_from_ss()["SS"]
    net = build_read_testbench(n, rates, corner, bench)
    pos, neg = memristor_nodes(n)
    mom = step_moments(net, 0.0, 1.0)
    swing = mom[pos][1] - mom[neg][1]
    tau = (mom[pos][0] - mom[neg][0]) / swing
    dt = tau / steps_per_tau
    t_stop = 20 * tau
    while True:
        t_stop = min(t_stop, T_STOP_CAP)
        wf = solve_transient(net, t_stop, dt)
        dc = dc_solve(net, t_stop)
        final = dc[pos] - dc[neg]
        try:
            t = settling_time(wf.times, wf.difference(pos, neg), final)
        except NotSettled:
            if t_stop >= T_STOP_CAP:
                raise
            t_stop *= 2
            continue
        return SettlingResult(n, corner.name, t, final, dt)


def calibrate_switch_resistance(
    target_settling: float = TARGET_FLOOR,
    n_ref: int = N_REF,
    rates: ParasiticRates = ParasiticRates(),
    bench: ReadBench = ReadBench(),
    tolerance: float = 1e-3,
    bracket: tuple[float, float] = (1.0, 10e6),
) -> float:
    """Switch on-resistance whose ``n_ref`` settling time hits ``target_settling``.

    Bisection on log-resistance; settling grows monotonically with the
    switch resistance.
    """

    def settle(r: float) -> float:
        return worst_case_settling(n_ref, CornerModel("SS", r), rates, bench).settling_time

    lo, hi = bracket
    t_lo, t_hi = settle(lo), settle(hi)
    if not t_lo <= target_settling <= t_hi:
        raise CalibrationFailed(
            f"target {target_settling:.3g} s outside [{t_lo:.3g}, {t_hi:.3g}] s "
            f"for switch resistance in [{lo:g}, {hi:g}] ohm"
        )
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        t = settle(mid)
        if abs(t - target_settling) <= tolerance * target_settling:
            return mid
        if t < target_settling:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-12:
            break
    raise CalibrationFailed(f"bisection stalled near {mid:g} ohm")


def _sweep_job(args):
    n, corner, rates, bench = args
    return worst_case_settling(n, corner, rates, bench)


def settling_sweep(
    sizes=DEFAULT_SIZES,
    corners: dict[str, CornerModel] | None = None,
    rates: ParasiticRates = ParasiticRates(),
    bench: ReadBench = ReadBench(),
    jobs: int = 1,
) -> list[SettlingResult]:
    """Results ordered by corner name (SS, TT, FF order kept) then n."""
    corners = corners or corners_from_ss()
    work = [(n, c, rates, bench) for c in corners.values() for n in sorted(sizes)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_job, work))
    return [_sweep_job(w) for w in work]


def fit_exponential(points) -> ExpFit:
    """Least-squares fit of ``ln t = ln a + k n``."""
    pts = [(float(n), float(t)) for n, t in points]
    if len({n for n, _ in pts}) < 2:
        raise DegenerateFit("need at least two distinct n")
    if any(t <= 0 for _, t in pts):
        raise DegenerateFit("times must be positive for a log-linear fit")
    pts.sort()
    x = np.array([n for n, _ in pts])
    y = np.log([t for _, t in pts])
    xm, ym = x.mean(), y.mean()
    k = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    return ExpFit(float(math.exp(ym - k * xm)), k)
