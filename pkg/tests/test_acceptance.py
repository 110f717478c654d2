"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION k PASS|FAIL`` line (with output capture
bypassed, so it shows in a plain ``pytest`` run) and then asserts.
"""

import itertools
import math
import random
import time
from pathlib import Path

import pytest

from rramc.arch import (
    Address,
    CellStateMatrix,
    LineId,
    LineKind,
    derive_geometry,
    plan_read,
    plan_write,
    select_word_columns,
    simulate_protocol,
)
from rramc.cli import cmd_characterize, cmd_generate
from rramc.config import CompilerConfig
from rramc.layout import DB_PER_UM, default_template, density_mbits_per_mm2, emit_gdsii, parse_gdsii, tile_array
from rramc.netlist import build_array
from rramc.parasitics import ParasiticRates
from rramc.report import fit_table, sweep_parasitics
from rramc.transient import (
    CornerModel,
    calibrate_switch_resistance,
    fit_exponential,
    settling_sweep,
    settling_time,
    solve_transient,
    worst_case_settling,
)
from rramc.transient.study import CORNER_SCALE
from rramc.verify import RuleDeck, check_layout, drc, inject_fault

from oracles import expm_error, random_network, rc


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail

    return emit


def test_criterion_1_geometry(verdict):
    start = time.perf_counter()
    geom = derive_geometry(128, 128, 8)
    db = tile_array(geom, default_template())
    x0, y0, x1, y1 = db.bbox()
    density = density_mbits_per_mm2(geom)
    elapsed = time.perf_counter() - start
    w, h = (x1 - x0) / DB_PER_UM, (y1 - y0) / DB_PER_UM
    ok = abs(w - 642.41) <= 1e-3 and abs(h - 294.42) <= 1e-3 and 0.082 <= density <= 0.083 and elapsed < 5
    verdict(1, "geometry", ok, f"bbox {w:.4f} x {h:.4f} um, density {density:.4f} Mb/mm2, {elapsed:.2f} s")


def test_criterion_2_parasitic_scaling(verdict):
    rates = ParasiticRates()
    fits = fit_table(sweep_parasitics((16, 32, 64, 128), rates))
    want = {f"C_{k.value}": rates.c_per_cell[k] for k in LineKind}
    want.update({f"R_{k.value}": rates.r_per_cell[k] for k in LineKind})
    expected = {"C_SEL": 5.83e-15, "C_N": 3.31e-15, "C_P": 2.48e-15, "R_SEL": 1.28, "R_N": 0.14, "R_P": 0.14}
    worst_slope = max(abs(fits[m].slope - expected[m]) / expected[m] for m in expected)
    worst_icpt = max(abs(f.intercept) for f in fits.values())
    ok = want == expected and worst_slope <= 1e-9 and worst_icpt < 1e-18
    verdict(2, "parasitic scaling", ok, f"max slope rel err {worst_slope:.1e}, max |intercept| {worst_icpt:.1e}")


def test_criterion_3_solver_oracle(verdict):
    r, c = 1e3, 1e-9
    tau = r * c
    wf = solve_transient(rc(r, c), 10 * tau, tau / 1000)
    t_rc = settling_time(wf.times, wf.node("out"), 1.0)
    rc_err = abs(t_rc - tau * math.log(100)) / (tau * math.log(100))

    rng = random.Random(2024)
    expm_worst = max(expm_error(random_network(rng)) for _ in range(50))

    dt_worst = 0.0
    for n in (8, 32, 128):
        coarse = worst_case_settling(n, steps_per_tau=500).settling_time
        fine = worst_case_settling(n, steps_per_tau=1000).settling_time
        dt_worst = max(dt_worst, abs(coarse - fine) / fine)
    ok = rc_err <= 0.005 and expm_worst <= 0.005 and dt_worst < 0.002
    verdict(3, "transient solver oracle", ok,
            f"RC err {rc_err:.2e}, expm worst {expm_worst:.2e} over 50 nets, dt halving {dt_worst:.2e}")


def test_criterion_4_settling_shape(verdict):
    start = time.perf_counter()
    sizes = (8, 16, 32, 64, 128)
    r_ss = calibrate_switch_resistance()
    corners = {c: CornerModel(c, r_ss * CORNER_SCALE[c]) for c in ("SS", "TT", "FF")}
    results = settling_sweep(sizes, corners)
    t = {(r.corner, r.n_cells): r.settling_time for r in results}
    elapsed = time.perf_counter() - start
    cal_err = abs(t["SS", 8] - 550e-12) / 550e-12
    monotone = all(t[c, a] <= t[c, b] for c in corners for a, b in zip(sizes, sizes[1:]))
    ordered = all(t["SS", n] >= t["TT", n] >= t["FF", n] for n in sizes)
    ratio = t["SS", 128] / t["SS", 8]
    k = fit_exponential([(n, t["SS", n]) for n in sizes]).k
    ok = cal_err <= 0.01 and monotone and ordered and 1.2 <= ratio <= 4.0 and k > 0 and elapsed < 60
    verdict(4, "settling study shape", ok,
            f"cal err {cal_err:.2e}, t128/t8 {ratio:.3f}, k {k:.3e}, monotone {monotone}, "
            f"SS>=TT>=FF {ordered}, {elapsed:.1f} s")


def test_criterion_5_fit_recovery(verdict):
    a, k = 5.223e-10, 0.004207
    fit = fit_exponential([(n, a * math.exp(k * n)) for n in (8, 16, 32, 64, 128)])
    ea, ek = abs(fit.a - a) / a, abs(fit.k - k) / k
    verdict(5, "exponential fit recovery", ea <= 1e-6 and ek <= 1e-6, f"a rel err {ea:.1e}, k rel err {ek:.1e}")


def _small_configs():
    for m, n in itertools.product((1, 2, 4, 8, 16), repeat=2):
        for b in (1, 2, 4, 8):
            if n % b == 0 and (n // b) & (n // b - 1) == 0:
                yield derive_geometry(m, n, b)


def test_criterion_6_pipeline_consistency(verdict):
    template = default_template()
    configs = list(_small_configs())
    failures = []
    for geom in configs:
        db = tile_array(geom, template)
        if drc(db):
            failures.append(f"drc {geom.rows}x{geom.cols}/{geom.word_bits}")
        if not check_layout(db, template, build_array(geom)).match:
            failures.append(f"lvs {geom.rows}x{geom.cols}/{geom.word_bits}")
        if parse_gdsii(emit_gdsii(db)) != db:
            failures.append(f"gds {geom.rows}x{geom.cols}/{geom.word_bits}")

    geom = derive_geometry(8, 8, 2)
    db, ref, rules = tile_array(geom, template), build_array(geom), RuleDeck()
    missed = 0
    for seed in range(100):
        faulted, _ = inject_fault(db, template, rules, random.Random(seed))
        if not drc(faulted, rules) and check_layout(faulted, template, ref).match:
            missed += 1
    ok = not failures and missed == 0
    verdict(6, "pipeline self-consistency", ok,
            f"{len(configs)} configs, failures {failures[:3]}, undetected faults {missed}/100")


def _read_bias_ok(geom, plan) -> bool:
    levels = plan.final_levels()
    return all(
        abs(levels.get(LineId(LineKind.P, j), 0.0) - levels.get(LineId(LineKind.N, j), 0.0)) < 0.5
        for j in range(geom.cols)
    )


def test_criterion_7_protocol(verdict):
    bad = []
    configs = [g for g in _small_configs() if g.rows <= 8 and g.cols <= 8 and g.word_bits <= 4]
    for geom in configs:
        base = CellStateMatrix.from_rows(["HL"[(i + j) % 2] for j in range(geom.cols)] for i in range(geom.rows))
        for addr, word in itertools.product(range(geom.n_words), range(2**geom.word_bits)):
            a = Address.from_linear(geom, addr)
            read = plan_read(geom, a)
            final, reads = simulate_protocol(geom, base, [plan_write(geom, a, word), read])
            if reads != [word] or not _read_bias_ok(geom, read):
                bad.append((geom.rows, geom.cols, geom.word_bits, addr, word))
                continue
            mine = set(select_word_columns(geom, a.word_select))
            for i, j in itertools.product(range(geom.rows), range(geom.cols)):
                if (i != a.row_bits or j not in mine) and final.states[i][j] is not base.states[i][j]:
                    bad.append((geom.rows, geom.cols, geom.word_bits, addr, word, "disturb"))
                    break
    verdict(7, "protocol correctness", not bad, f"{len(configs)} configs, failures {bad[:3]}")


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_8_determinism(verdict, tmp_path):
    trees = []
    for name in ("run1", "run2"):
        cfg = CompilerConfig(out=str(tmp_path / name))
        assert cmd_generate(cfg) == 0
        assert cmd_characterize(cfg) == 0
        trees.append(_tree(tmp_path / name))
    differing = sorted(k for k in trees[0].keys() | trees[1].keys() if trees[0].get(k) != trees[1].get(k))
    verdict(8, "determinism", not differing and len(trees[0]) > 0,
            f"{len(trees[0])} files compared, differing {differing[:3]}")
