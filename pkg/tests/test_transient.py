import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rramc.arch import LineKind
from rramc.errors import DegenerateFit, InvalidParam, NotSettled, SingularNetwork
from rramc.parasitics import build_ladder, elmore_delay, line_resistance
from rramc.transient import (
    GROUND,
    CornerModel,
    Pwl,
    RcNetwork,
    ReadBench,
    Step,
    build_read_testbench,
    calibrate_switch_resistance,
    corners_from_ss,
    dc_solve,
    default_timestep,
    fit_exponential,
    memristor_nodes,
    settling_time,
    solve_transient,
    step_moments,
    worst_case_settling,
)

from oracles import expm_error, ladder_net, random_network, rc

LN100 = math.log(100)


# ---------------------------------------------------------------- DC


def test_dc_divider():
    net = RcNetwork()
    net.add_source("in", Pwl.constant(1.0))
    net.add_resistor("in", "mid", 1e3)
    net.add_resistor("mid", GROUND, 1e3)
    assert dc_solve(net)["mid"] == pytest.approx(0.5, rel=1e-12)


def test_dc_zero_sources():
    net = ladder_net(5, 10.0, 1e-12)
    net.sources[0] = ("in", Pwl.constant(0.0))
    assert all(v == 0 for v in dc_solve(net).values())


def test_dc_unloaded_ladder():
    net = ladder_net(6, 10.0, 1e-12)
    v = dc_solve(net, at_time=1.0)
    assert all(v[f"x{k}"] == pytest.approx(1.0, rel=1e-12) for k in range(6))


def test_floating_node_rejected():
    net = rc()
    net.add_capacitor("out", "island", 1e-12)
    with pytest.raises(SingularNetwork):
        dc_solve(net)


@pytest.mark.parametrize("value", [0.0, -1.0, float("nan")])
def test_nonpositive_values_rejected(value):
    net = rc()
    net.add_resistor("out", GROUND, value)
    with pytest.raises(InvalidParam):
        dc_solve(net)


def test_pwl_requires_increasing_time():
    with pytest.raises(InvalidParam):
        Pwl(((0.0, 0.0), (0.0, 1.0)))
    w = Pwl(((0.0, 0.0), (1.0, 2.0)))
    assert w.value(0.5) == pytest.approx(1.0)
    assert w.value(5.0) == 2.0


# ---------------------------------------------------------------- transient


def test_single_rc_closed_form():
    r, c = 1e3, 1e-9
    tau = r * c
    wf = solve_transient(rc(r, c), 5 * tau, tau / 1000)
    out = wf.node("out")
    for mult in (1, 2, 5):
        k = int(round(mult * 1000))
        exact = 1 - math.exp(-wf.times[k] / tau)
        assert abs(out[k] - exact) <= 1e-3 * exact


def test_single_rc_settling_oracle():
    r, c = 1e3, 1e-9
    tau = r * c
    wf = solve_transient(rc(r, c), 10 * tau, tau / 1000)
    t = settling_time(wf.times, wf.node("out"), 1.0)
    assert abs(t - LN100 * tau) <= 0.005 * LN100 * tau


def test_zero_input_stays_at_rest():
    net = rc()
    net.sources[0] = ("in", Pwl.constant(0.0))
    wf = solve_transient(net, 1e-5, 1e-8)
    assert np.all(wf.node("out") == 0)


def test_halving_dt_sample_changes():
    tau = 1e-6
    a = solve_transient(rc(), 5 * tau, tau / 1000)
    b = solve_transient(rc(), 5 * tau, tau / 2000)
    va, vb = a.node("out")[1:], b.node("out")[2::2]
    assert np.all(np.abs(va - vb) <= 1e-3 * np.abs(vb))


def test_waveform_csv():
    wf = solve_transient(rc(), 2e-6, 1e-6)
    lines = wf.to_csv(["out", "in"]).splitlines()
    assert lines[0] == "time_s,node,volts"
    assert len(lines) == 1 + 3 * 2
    t, node, v = lines[3].split(",")
    assert (float(t), node, float(v)) == (1e-6, "out", wf.node("out")[1])


def test_default_timestep_single_rc():
    assert default_timestep(rc(2e3, 3e-12)) == pytest.approx(6e-9 / 100, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_matches_matrix_exponential(rng):
    assert expm_error(random_network(rng)) <= 0.005


@pytest.mark.parametrize("n", [1, 4, 16, 64])
def test_ladder_response_monotone(n):
    net = ladder_net(n, 1.28, 5.83e-15)
    tau = elmore_delay(build_ladder(LineKind.SEL, n))
    # trapezoidal steps much longer than the fastest mode ring, so use the
    # solver's own stability-driven step here
    wf = solve_transient(net, 10 * tau, default_timestep(net))
    for k in range(n):
        assert np.all(np.diff(wf.node(f"x{k}")) >= -1e-9)


@pytest.mark.parametrize("n", [1, 8, 32, 128])
def test_ladder_elmore_bounds_and_dc(n):
    lad = build_ladder(LineKind.P, n)
    net = ladder_net(n, *lad.segments[0])
    elm = elmore_delay(lad)
    wf = solve_transient(net, 20 * elm, elm / 500)
    final = dc_solve(net, wf.times[-1])[f"x{n - 1}"]
    assert wf.node(f"x{n - 1}")[-1] == pytest.approx(final, rel=1e-6)
    t = settling_time(wf.times, wf.node(f"x{n - 1}"), final)
    assert elm <= t <= 10 * LN100 * elm


@pytest.mark.parametrize("n", [1, 5, 40])
def test_step_moments_equal_elmore(n):
    lad = build_ladder(LineKind.SEL, n)
    net = ladder_net(n, *lad.segments[0])
    m, swing = step_moments(net, 0.0, 1.0)[f"x{n - 1}"]
    assert swing == pytest.approx(1.0)
    assert m / swing == pytest.approx(elmore_delay(lad), rel=1e-9)


# ---------------------------------------------------------------- settling band


def test_settling_ideal_step():
    assert settling_time([0, 1, 2], [1.0, 1.0, 1.0], 1.0) == 0


def test_settling_exponential_within_one_dt():
    tau, dt = 1.0, 1e-3
    t = np.arange(0, 10, dt)
    assert abs(settling_time(t, 1 - np.exp(-t / tau), 1.0) - LN100 * tau) <= dt


def test_settling_suffix_rule():
    # re-entering the band and leaving again pushes the settling time out
    t = [0, 1, 2, 3, 4]
    v = [0.0, 1.0, 0.5, 1.0, 1.0]
    assert settling_time(t, v, 1.0) == 3


def test_not_settled():
    with pytest.raises(NotSettled):
        settling_time([0, 1, 2], [0.0, 0.5, 0.9], 1.0)


# ---------------------------------------------------------------- read study


def test_testbench_structure_n1():
    corner = corners_from_ss()["TT"]
    net = build_read_testbench(1, corner=corner)
    mid, neg = memristor_nodes(1)
    assert len(net.sources) == 1 and isinstance(net.sources[0][1], Step)
    names = {(a, b) for a, b, _ in net.resistors}
    assert ("p_0", mid) in names and (mid, "n_0") in names
    assert sum(1 for a, b, _ in net.capacitors if a in ("p_0", "n_0")) == 2
    assert neg == "p_0"


@given(st.integers(1, 64))
@settings(deadline=None, max_examples=20)
def test_testbench_scales_linearly(n):
    net = build_read_testbench(n)
    assert len(net.resistors) == 2 * n + 4
    assert len(net.capacitors) == 2 * n + 1


@pytest.mark.parametrize("n", [1, 8, 128])
@pytest.mark.parametrize("corner", ["SS", "TT", "FF"])
def test_testbench_dc_divider(n, corner):
    bench = ReadBench()
    cm = corners_from_ss()[corner]
    r_sw = cm.switch_on_resistance
    series = (
        bench.r_mem + r_sw * (1 + 2 * bench.driver_ratio)
        + line_resistance(LineKind.P, n) + line_resistance(LineKind.N, n)
    )
    v = dc_solve(build_read_testbench(n, corner=cm), 1.0)
    mid, neg = memristor_nodes(n)
    assert v[mid] - v[neg] == pytest.approx(bench.vdd * bench.r_mem / series, rel=1e-9)


def test_corner_monotone_small():
    res = {c: worst_case_settling(16, m).settling_time for c, m in corners_from_ss().items()}
    assert res["SS"] >= res["TT"] >= res["FF"]


def test_halving_dt_changes_settling_little():
    a = worst_case_settling(8, steps_per_tau=500).settling_time
    b = worst_case_settling(8, steps_per_tau=1000).settling_time
    assert abs(a - b) / b < 0.002


def test_invalid_corner():
    with pytest.raises(InvalidParam):
        CornerModel("SS", 0.0)


@pytest.fixture(scope="module")
def calibrated():
    return calibrate_switch_resistance()


def test_calibration_hits_target(calibrated):
    t = worst_case_settling(8, CornerModel("SS", calibrated)).settling_time
    assert 544.5e-12 <= t <= 555.5e-12


def test_calibration_deterministic(calibrated):
    assert calibrate_switch_resistance() == calibrated


def test_calibration_monotone_in_target(calibrated):
    assert calibrate_switch_resistance(1100e-12) > calibrated


def test_calibration_out_of_range():
    from rramc.errors import CalibrationFailed

    with pytest.raises(CalibrationFailed):
        calibrate_switch_resistance(1e-15)


# ---------------------------------------------------------------- exponential fit


def test_fit_recovers_constants():
    ns = [8, 16, 32, 64, 128]
    fit = fit_exponential([(n, 5.223e-10 * math.exp(0.004207 * n)) for n in ns])
    assert fit.a == pytest.approx(5.223e-10, rel=1e-6)
    assert fit.k == pytest.approx(0.004207, rel=1e-6)


def test_fit_constant_data():
    fit = fit_exponential([(n, 3e-10) for n in (1, 2, 3)])
    assert fit.k == pytest.approx(0.0, abs=1e-15)
    assert fit.a == pytest.approx(3e-10)


@given(st.permutations([(8, 5.5e-10), (16, 5.6e-10), (32, 5.9e-10), (64, 6.7e-10), (128, 9.2e-10)]))
def test_fit_order_invariant(pts):
    base = fit_exponential(sorted(pts))
    fit = fit_exponential(pts)
    assert (fit.a, fit.k) == (base.a, base.k)


def test_fit_degenerate():
    with pytest.raises(DegenerateFit):
        fit_exponential([(8, 1e-10), (8, 2e-10)])
    with pytest.raises(DegenerateFit):
        fit_exponential([(8, 1e-10), (16, -1.0)])
