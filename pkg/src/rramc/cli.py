"""``rramc`` command line: generate, verify, characterize, protocol.

Exit codes
    0  success
    2  configuration error
    3  generation or file output failure
    4  DRC violations
    5  LVS mismatch
    6  calibration failed or a simulation did not settle
    7  protocol script parse error
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .arch import Address, CellStateMatrix, plan_read, plan_write, simulate_protocol
from .config import CompilerConfig, coerce, load_config
from .errors import (
    CalibrationFailed,
    ConfigError,
    InvalidAddress,
    IoFailure,
    NotSettled,
    RramcError,
    ScriptError,
)
from .layout import emit_gdsii, parse_gdsii, render_svg, tile_array
from .netlist import build_array, build_extracted_array, emit_spice, parse_spice
from .report import emit_report, fit_table, sweep_parasitics, write_text
from .transient.study import (
    CORNER_SCALE,
    N_REF,
    TARGET_FLOOR,
    CornerModel,
    calibrate_switch_resistance,
    fit_exponential,
    settling_sweep,
)
from .verify import check_layout, drc, inject_fault, violations_csv, violations_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATE = 3
EXIT_DRC = 4
EXIT_LVS = 5
EXIT_SIM = 6
EXIT_SCRIPT = 7

SUBDIRS = ("netlist", "layout", "drc", "lvs", "pex")


def _err(msg: str) -> None:
    print(f"rramc: {msg}", file=sys.stderr)


def _write_bytes(path: Path, data: bytes) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IoFailure(path, exc) from exc
    return path


def _prepare(cfg: CompilerConfig) -> Path:
    out = Path(cfg.out)
    try:
        for sub in SUBDIRS:
            (out / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(out, exc) from exc
    write_text(out / "config.resolved", cfg.resolved_text())
    return out


def cmd_generate(cfg: CompilerConfig) -> int:
    try:
        geom = cfg.geometry()
        rates = cfg.load_rates()
        template = cfg.template()
    except (ConfigError, IoFailure) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        out = _prepare(cfg)
        db = tile_array(geom, template)
        write_text(out / "netlist" / "array.sp", emit_spice(build_array(geom)))
        write_text(out / "netlist" / "array_extracted.sp", emit_spice(build_extracted_array(geom, rates)))
        _write_bytes(out / "layout" / "array.gds", emit_gdsii(db))
        write_text(out / "layout" / "array.svg", render_svg(db))
    except RramcError as exc:
        _err(f"generation failed: {exc}")
        return EXIT_GENERATE
    return EXIT_OK


def cmd_verify(cfg: CompilerConfig) -> int:
    try:
        template = cfg.template()
        rules = cfg.load_rules()
    except (ConfigError, IoFailure) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = Path(cfg.out)
    sp, gds = out / "netlist" / "array.sp", out / "layout" / "array.gds"
    if not (sp.exists() and gds.exists()):
        code = cmd_generate(cfg)
        if code:
            return code
    try:
        _prepare(cfg)
        reference = parse_spice(sp.read_text(encoding="utf-8"))
        db = parse_gdsii(gds.read_bytes())
        if cfg.fault_inject is not None:
            db, fault = inject_fault(db, template, rules, random.Random(cfg.fault_inject), "shrink")
            _write_bytes(out / "layout" / "array_faulted.gds", emit_gdsii(db))
            _err(f"injected {fault.kind} fault on {fault.layer} in cell ({fault.row}, {fault.col})")
        violations = drc(db, rules)
        drc_txt = write_text(out / "drc" / "drc_report.txt", violations_text(violations))
        write_text(out / "drc" / "violations.csv", violations_csv(violations))
        report = check_layout(db, template, reference)
        extracted_sp = out / "netlist" / "array_extracted.sp"
        lines = [report.text()]
        if report.match and extracted_sp.exists():
            pex = check_layout(db, template, parse_spice(extracted_sp.read_text(encoding="utf-8")))
            lines.append(pex.text())
            report = pex if not pex.match else report
        lvs_txt = write_text(out / "lvs" / "lvs_report.txt", "".join(lines))
    except (OSError, RramcError) as exc:
        _err(f"verification could not run: {exc}")
        return EXIT_GENERATE
    if violations:
        _err(f"DRC: {len(violations)} violation(s), see {drc_txt}")
        return EXIT_DRC
    if not report.match:
        _err(f"LVS: mismatch, see {lvs_txt}")
        return EXIT_LVS
    return EXIT_OK


def characterize(cfg: CompilerConfig):
    """Compute every characterization result; no files are touched."""
    rates = cfg.load_rates()
    table = sweep_parasitics(cfg.sizes, rates)
    fits = fit_table(table)
    r_ss = calibrate_switch_resistance(TARGET_FLOOR, N_REF, rates)
    corners = {c: CornerModel(c, r_ss * CORNER_SCALE[c]) for c in cfg.corners()}
    settling = settling_sweep(cfg.sizes, corners, rates, jobs=cfg.jobs)
    exp_fits = {}
    for c in corners:
        pts = [(r.n_cells, r.settling_time) for r in settling if r.corner == c]
        if len(pts) >= 2:
            exp_fits[c] = fit_exponential(pts)
    return table, fits, r_ss, settling, exp_fits


def cmd_characterize(cfg: CompilerConfig) -> int:
    try:
        cfg.geometry()
        cfg.load_rates()
    except (ConfigError, IoFailure) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        table, fits, r_ss, settling, exp_fits = characterize(cfg)
    except (CalibrationFailed, NotSettled) as exc:
        _err(f"characterization failed: {exc}")
        return EXIT_SIM
    try:
        out = _prepare(cfg)
        emit_report(out / "pex", table, fits, settling, exp_fits)
        write_text(
            out / "pex" / "calibration.txt",
            f"n_ref={N_REF}\ntarget_settling_s={TARGET_FLOOR!r}\nss_switch_resistance_ohm={r_ss!r}\n",
        )
    except RramcError as exc:
        _err(str(exc))
        return EXIT_GENERATE
    return EXIT_OK


def parse_script(text: str, geom) -> list:
    """``write <addr> <hexword>`` and ``read <addr>`` lines; ``#`` comments."""
    plans = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        op = line[0].lower()
        try:
            if op == "write" and len(line) == 3:
                addr = Address.from_linear(geom, int(line[1], 0))
                word = int(line[2], 16)
                if not 0 <= word < 2**geom.word_bits:
                    raise ValueError(f"word {line[2]} does not fit in {geom.word_bits} bits")
                plans.append(plan_write(geom, addr, word))
            elif op == "read" and len(line) == 2:
                plans.append(plan_read(geom, Address.from_linear(geom, int(line[1], 0))))
            else:
                raise ValueError(f"expected 'write <addr> <hexword>' or 'read <addr>', got {raw.strip()!r}")
        except (ValueError, InvalidAddress) as exc:
            raise ScriptError(no, str(exc)) from None
    return plans


def protocol_trace(geom, plans) -> str:
    initial = CellStateMatrix.uniform(geom)
    final, reads = simulate_protocol(geom, initial, plans)
    hexw = (geom.word_bits + 3) // 4
    out = [
        f"# rramc protocol trace rows={geom.rows} cols={geom.cols} word_bits={geom.word_bits}",
        f"initial_digest {initial.digest()}",
    ]
    offset = 0.0
    read_iter = iter(reads)
    for k, plan in enumerate(plans):
        addr = plan.target.linear(geom)
        if plan.data is None:
            out.append(f"op {k} read addr={addr} -> 0x{next(read_iter):0{hexw}X}")
        else:
            out.append(f"op {k} write addr={addr} data=0x{plan.data:0{hexw}X}")
        for e in plan.events:
            out.append(f"  {offset + e.time:.6e} {e.line} {e.voltage:.6f}")
        offset += plan.duration
    out.append(f"final_digest {final.digest()}")
    return "\n".join(out) + "\n"


def cmd_protocol(cfg: CompilerConfig, script: str) -> int:
    try:
        geom = cfg.geometry()
        text = Path(script).read_text(encoding="utf-8")
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"{script}: {exc}")
        return EXIT_CONFIG
    try:
        plans = parse_script(text, geom)
    except ScriptError as exc:
        _err(f"{script}: {exc}")
        return EXIT_SCRIPT
    try:
        trace = protocol_trace(geom, plans)
        out = Path(cfg.out)
        write_text(out / "config.resolved", cfg.resolved_text())
        path = write_text(out / "protocol" / "trace.txt", trace)
    except RramcError as exc:
        _err(str(exc))
        return EXIT_GENERATE
    print(path)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--rows", type=int)
    common.add_argument("--cols", type=int)
    common.add_argument("--word-bits", dest="word_bits", type=int)
    common.add_argument("--out", help=f"output directory (fallback: $RRAMC_OUT, then {CompilerConfig.out})")
    common.add_argument("--rates", help="parasitic rates file")
    common.add_argument("--rules", help="DRC rules file")
    common.add_argument("--corner", help="SS, TT, FF, a comma list, or all")
    common.add_argument("--sizes", help="comma-separated line lengths for characterization")
    common.add_argument("--fault-inject", dest="fault_inject", type=int, metavar="SEED",
                        help="verify: shrink one random rect below min width first")
    common.add_argument("--jobs", type=int, help="parallel settling simulations")
    common.add_argument("--cell-width-um", dest="cell_width_um")
    common.add_argument("--cell-height-um", dest="cell_height_um")

    p = argparse.ArgumentParser(prog="rramc", description="RRAM array compiler")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write netlists and layout")
    sub.add_parser("verify", parents=[common], help="run DRC and LVS on generated artifacts")
    sub.add_parser("characterize", parents=[common], help="parasitic and settling sweeps")
    prot = sub.add_parser("protocol", parents=[common], help="run a read/write script")
    prot.add_argument("script")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {
        k: getattr(args, k)
        for k in ("rows", "cols", "word_bits", "out", "rates", "rules", "corner",
                  "fault_inject", "jobs", "cell_width_um", "cell_height_um")
    }
    try:
        if args.sizes is not None:
            overrides["sizes"] = coerce("sizes", args.sizes)
        cfg = load_config(args.config, overrides)
        cfg.template()
    except (ConfigError, IoFailure) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except RramcError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    if args.command == "generate":
        return cmd_generate(cfg)
    if args.command == "verify":
        return cmd_verify(cfg)
    if args.command == "characterize":
        return cmd_characterize(cfg)
    return cmd_protocol(cfg, args.script)


if __name__ == "__main__":
    sys.exit(main())
