import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from rramc.arch import LineKind, derive_geometry
from rramc.errors import SpiceParseError, UnresolvedReference
from rramc.netlist import (
    BULK,
    CellParams,
    DeviceKind,
    Instance,
    Netlist,
    Subcircuit,
    build_array,
    build_cell,
    build_extracted_array,
    connection_sets,
    emit_spice,
    flatten,
    line_net,
    parse_spice,
    strip_parasitics,
)
from rramc.parasitics import ParasiticRates

GOLDEN = Path(__file__).parent / "data" / "array_2x2.sp"

configs = st.builds(
    lambda y, x, b: derive_geometry(2**y, b * 2**x, b),
    st.integers(0, 3), st.integers(0, 3), st.sampled_from([1, 2]),
)


def test_cell_counts():
    cell = build_cell()
    assert len(cell.instances) == 2
    assert len(cell.nets()) == 5
    assert cell.ports == ("SEL", "P", "N", BULK)


def test_cell_memristor_value_and_cards():
    text = emit_spice(Netlist((build_cell(),), "rram_cell"))
    assert "* memristor\nRmem P mid 5.000000e+06\n" in text
    cards = [line for line in text.splitlines() if line[:1] in "RMCX"]
    assert sum(c.startswith("M") for c in cards) == 1
    assert sum(c.startswith("R") for c in cards) == 1


def test_cell_deterministic():
    assert build_cell(CellParams()) == build_cell(CellParams())


def test_array_4x4_counts():
    c = derive_geometry(4, 4, 1)
    net = build_array(c)
    top = net.get(net.top)
    assert len(top.ports) == 4 + 4 + 4 + 1
    flat = flatten(net)
    assert flat.count(DeviceKind.MEMRISTOR) == 16 and flat.count(DeviceKind.NMOS) == 16
    mids = [n for n in flat.nets() if n.endswith(".mid")]
    assert len(mids) == 16


def test_array_1x1_ports():
    net = build_array(derive_geometry(1, 1, 1))
    assert net.get(net.top).ports == ("SEL0", "P0", "N0", BULK)


def test_array_128_cells():
    c = derive_geometry(128, 128, 8)
    net = build_array(c)
    rows = len(net.get(net.top).instances)
    cells = len(net.get("rram_row").instances)
    assert rows * cells == 16384


def test_net_names_zero_padded():
    assert line_net(LineKind.P, 3, 16) == "P03"
    assert line_net(LineKind.SEL, 0, 1) == "SEL0"
    names = [line_net(LineKind.N, j, 128) for j in range(128)]
    assert names == sorted(names)


@settings(max_examples=25, deadline=None)
@given(configs)
def test_flat_device_count_and_reachability(c):
    flat = flatten(build_array(c))
    assert len(flat.devices) == 2 * c.rows * c.cols
    ports = set(flat.ports)
    # every internal net is a cell mid that links a memristor to a transistor
    for net in flat.nets():
        if net in ports:
            continue
        kinds = sorted(d.kind.value for d in flat.devices for _, n in d.terminals if n == net)
        assert kinds == ["memristor", "nmos"]


def test_extracted_sel_line_rc():
    c = derive_geometry(1, 8, 1)
    net = build_extracted_array(c, ParasiticRates())
    row = net.get("rram_row_pex")
    rs = [i for i in row.instances if i.kind is DeviceKind.RESISTOR]
    cs = [i for i in row.instances if i.kind is DeviceKind.CAPACITOR]
    assert len(rs) == 8 and len(cs) == 8
    assert all(i.param("r") == 1.28 for i in rs)
    assert all(i.param("c") == 5.83e-15 for i in cs)


def test_extracted_p_line_total_from_cards():
    c = derive_geometry(128, 1, 1)
    text = emit_spice(build_extracted_array(c, ParasiticRates()))
    total = math.fsum(float(line.split()[3]) for line in text.splitlines() if line.startswith("Cp_"))
    assert total == pytest.approx(317.44e-15, rel=1e-12)


def test_empty_array_rejected():
    with pytest.raises(ValueError):
        derive_geometry(1, 0, 1)


@settings(max_examples=20, deadline=None)
@given(configs)
def test_extracted_minus_parasitics_equals_ideal(c):
    ideal = flatten(build_array(c))
    pex = strip_parasitics(flatten(build_extracted_array(c, ParasiticRates())))
    assert connection_sets(pex) == connection_sets(ideal)


def test_golden_2x2():
    assert emit_spice(build_array(derive_geometry(2, 2, 1))) == GOLDEN.read_text()


def test_emit_idempotent():
    c = derive_geometry(4, 8, 2)
    assert emit_spice(build_array(c)) == emit_spice(build_array(c))


@settings(max_examples=15, deadline=None)
@given(configs)
def test_parse_round_trip(c):
    for net in (build_array(c), build_extracted_array(c, ParasiticRates())):
        text = emit_spice(net)
        back = parse_spice(text)
        assert emit_spice(back) == text
        assert back == net


def test_continuation_lines():
    c = derive_geometry(1, 64, 1)
    text = emit_spice(build_array(c))
    assert any(line.startswith("+ ") for line in text.splitlines())
    assert parse_spice(text) == build_array(c)


def test_unresolved_reference():
    sub = Subcircuit("top", ("a",), (Instance("x", DeviceKind.SUBCKT, ("a",), ref="missing"),))
    with pytest.raises(UnresolvedReference):
        emit_spice(Netlist((sub,), "top"))


@pytest.mark.parametrize(
    "text,line",
    [
        (".SUBCKT a x\nRfoo x\n.ENDS\n", 2),
        ("+ dangling\n", 1),
        (".SUBCKT a x\n.SUBCKT b y\n", 2),
        ("Rfoo a b 1\n", 1),
        (".SUBCKT a x\nRfoo x 0 abc\n.ENDS\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(SpiceParseError) as exc:
        parse_spice(text)
    assert exc.value.line_no == line


def test_custom_memristor_card():
    def card(inst):
        return [f"Y{inst.name} {inst.nodes[0]} {inst.nodes[1]} rram_model"]

    text = emit_spice(Netlist((build_cell(),), "rram_cell"), memristor_card=card)
    assert "Ymem P mid rram_model" in text
