import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from rramc.arch import LineKind
from rramc.errors import DegenerateFit, InvalidParam, IoFailure
from rramc.parasitics import ParasiticRates
from rramc.report import (
    SweepTable,
    emit_report,
    fit_overlay,
    fit_table,
    fits_csv,
    linear_fit,
    parasitics_csv,
    parse_parasitics_csv,
    plots_svg,
    settling_csv,
    sweep_parasitics,
)
from rramc.transient import ExpFit, SettlingResult

SVG = "{http://www.w3.org/2000/svg}"
SIZES = (32, 64, 128)

SETTLING = [
    SettlingResult(n, corner, t, 0.1, 1e-14)
    for corner, ts in (("SS", (5.5e-10, 5.6e-10, 5.9e-10)), ("FF", (2.1e-10, 2.2e-10, 2.4e-10)))
    for n, t in zip((8, 16, 32), ts)
]
EXP = {"SS": ExpFit(5.4e-10, 0.002), "FF": ExpFit(2.0e-10, 0.0045)}


def polylines(text):
    return {p.get("data-series"): p for p in ET.fromstring(text).iter(f"{SVG}polyline")}


def test_sweep_sel_capacitance_example():
    table = sweep_parasitics(SIZES)
    sel = table.series("C_SEL")
    assert [n for n, _ in sel] == list(SIZES)
    for (_, v), want in zip(sel, (186.56e-15, 373.12e-15, 746.24e-15)):
        assert v == pytest.approx(want, rel=1e-12)


def test_sweep_row_count_and_units():
    table = sweep_parasitics(SIZES)
    assert len(table.rows) == len(SIZES) * 6
    assert table.metrics() == ["C_SEL", "C_N", "C_P", "R_SEL", "R_N", "R_P"]
    assert table.unit("C_N") == "F" and table.unit("R_P") == "ohm"


@given(st.integers(1, 1000))
def test_sweep_doubles(n):
    table = sweep_parasitics((n, 2 * n))
    for m in table.metrics():
        (_, a), (_, b) = table.series(m)
        assert b == 2 * a


def test_sweep_rejects_bad_sizes():
    with pytest.raises(InvalidParam):
        sweep_parasitics(())
    with pytest.raises(InvalidParam):
        sweep_parasitics((0, 4))
    with pytest.raises(InvalidParam):
        SweepTable(((4, "C_SEL", 1.0, "F"), (4, "C_SEL", 2.0, "F")))


def test_linear_fit_exact_line():
    fit = linear_fit([(1, 3.0), (2, 5.0), (3, 7.0), (10, 21.0)])
    assert (fit.slope, fit.intercept, fit.r_squared) == (2.0, 1.0, 1.0)


def test_linear_fit_two_points():
    fit = linear_fit([(0, 1.0), (4, 3.0)])
    assert (fit.slope, fit.intercept) == (0.5, 1.0)


def test_linear_fit_degenerate():
    with pytest.raises(DegenerateFit):
        linear_fit([(3, 1.0), (3, 2.0)])


@given(st.lists(st.floats(-1e-3, 1e-3), min_size=5, max_size=5))
def test_linear_fit_noise_bound(noise):
    xs = [8, 16, 32, 64, 128]
    fit = linear_fit([(x, 2.0 * x + 1.0 + e) for x, e in zip(xs, noise)])
    # OLS slope moves by at most sum|dx*e| / sxx
    xm = sum(xs) / 5
    sxx = sum((x - xm) ** 2 for x in xs)
    bound = sum(abs(x - xm) for x in xs) * 1e-3 / sxx
    assert abs(fit.slope - 2.0) <= bound * (1 + 1e-9)
    assert 0 <= fit.r_squared <= 1


def test_fit_table_slopes_equal_rates():
    rates = ParasiticRates()
    fits = fit_table(sweep_parasitics((8, 16, 32, 64, 128), rates))
    assert fits["C_SEL"].slope == rates.c_per_cell[LineKind.SEL]
    assert fits["R_N"].slope == rates.r_per_cell[LineKind.N]
    for f in fits.values():
        assert f.intercept == 0 and f.r_squared == 1


def test_csv_round_trip():
    table = sweep_parasitics((1, 7, 100, 128))
    text = parasitics_csv(table)
    assert text.splitlines()[0] == "n_cells,metric,value,unit"
    assert parse_parasitics_csv(text).rows == table.rows


def test_fits_and_settling_csv_headers():
    table = sweep_parasitics(SIZES)
    assert fits_csv(fit_table(table), table).startswith("metric,slope_per_cell,intercept,r_squared,unit\n")
    lines = settling_csv(SETTLING).splitlines()
    assert lines[0] == "corner,n_cells,settling_time_s,final_value_v,dt_s"
    assert len(lines) == 1 + len(SETTLING)


def test_svg_one_polyline_per_series():
    table = sweep_parasitics(SIZES)
    text = plots_svg(table, (), {})
    lines = polylines(text)
    assert set(lines) == set(table.metrics())
    for m in table.metrics():
        pts = [tuple(map(float, p.split(","))) for p in lines[m].get("data-points").split()]
        assert pts == [(float(n), v) for n, v in table.series(m)]


def test_svg_settling_panel_and_overlays():
    text = plots_svg(sweep_parasitics(SIZES), SETTLING, EXP)
    lines = polylines(text)
    assert {"SS", "FF", "SS fit", "FF fit"} <= set(lines)
    for corner, fit in EXP.items():
        overlay = lines[f"{corner} fit"]
        assert overlay.get("stroke") == lines[corner].get("stroke")
        assert overlay.get("stroke-dasharray")
        for p in overlay.get("data-points").split():
            n, t = map(float, p.split(","))
            assert t == pytest.approx(fit.a * math.exp(fit.k * n), rel=1e-12)
    assert len(list(ET.fromstring(text).iter(f"{SVG}g"))) >= 3


def test_fit_overlay_endpoints():
    pts = fit_overlay(EXP["SS"], 8, 128)
    assert pts[0][0] == 8 and pts[-1][0] == 128
    assert pts[-1][1] == pytest.approx(5.4e-10 * math.exp(0.002 * 128))


def test_emit_report_deterministic(tmp_path):
    table = sweep_parasitics(SIZES)
    a = emit_report(tmp_path / "a", table, fit_table(table), SETTLING, EXP)
    b = emit_report(tmp_path / "b", table, fit_table(table), SETTLING, EXP)
    assert [p.name for p in a] == [
        "parasitics.csv", "parasitic_fits.csv", "settling.csv", "settling_fits.csv", "plots.svg"
    ]
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_emit_report_formats(tmp_path):
    table = sweep_parasitics(SIZES)
    written = emit_report(tmp_path, table, fit_table(table), formats=("svg",))
    assert [p.name for p in written] == ["plots.svg"]


def test_emit_report_path_is_a_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    table = sweep_parasitics(SIZES)
    with pytest.raises(IoFailure):
        emit_report(blocker / "pex", table, fit_table(table))
