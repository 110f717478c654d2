"""Compiler configuration: defaults, key=value config files, flag overrides.

Precedence is command-line flag, then config file, then the ``RRAMC_OUT``
environment variable (output directory only), then built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .arch import ArrayConfig, derive_geometry
from .errors import ConfigError, IoFailure
from .kvfile import format_kv, parse_float, parse_kv
from .layout.template import CellTemplate, default_template
from .parasitics import ParasiticRates
from .transient.study import CORNER_SCALE, DEFAULT_SIZES
from .verify.drc import RuleDeck

ENV_OUT = "RRAMC_OUT"
DEFAULT_OUT = "build"


@dataclass(frozen=True)
class CompilerConfig:
    rows: int = 128
    cols: int = 128
    word_bits: int = 8
    out: str = DEFAULT_OUT
    rates: str | None = None
    rules: str | None = None
    cell_width_um: str | None = None
    cell_height_um: str | None = None
    corner: str = "all"
    sizes: tuple[int, ...] = DEFAULT_SIZES
    fault_inject: int | None = None
    jobs: int = 1
    deterministic: bool = True
    # inline ``rates.<key>`` / ``rules.<key>`` entries; they win over the files
    rate_values: tuple[tuple[str, str], ...] = ()
    rule_values: tuple[tuple[str, str], ...] = ()

    def geometry(self) -> ArrayConfig:
        return derive_geometry(self.rows, self.cols, self.word_bits)

    def corners(self) -> tuple[str, ...]:
        if self.corner == "all":
            return tuple(CORNER_SCALE)
        names = tuple(dict.fromkeys(c.strip().upper() for c in self.corner.split(",") if c.strip()))
        bad = [c for c in names if c not in CORNER_SCALE]
        if bad or not names:
            raise ConfigError(f"unknown corner(s) {', '.join(bad) or self.corner!r}; use SS, TT, FF or all")
        return names

    def template(self) -> CellTemplate:
        return default_template(self.cell_width_um, self.cell_height_um)

    def load_rates(self) -> ParasiticRates:
        if self.rates is None and not self.rate_values:
            return ParasiticRates()
        return ParasiticRates.from_text(_merged(self.rates, self.rate_values), self.rates or "<config>")

    def load_rules(self) -> RuleDeck:
        if self.rules is None and not self.rule_values:
            return RuleDeck()
        return RuleDeck.from_text(_merged(self.rules, self.rule_values), self.rules or "<config>")

    def validate(self) -> "CompilerConfig":
        self.geometry()
        self.corners()
        if not self.sizes or min(self.sizes) < 1:
            raise ConfigError("sizes must be positive integers")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not self.deterministic:
            raise ConfigError("non-deterministic mode is not supported")
        return self

    def resolved_text(self) -> str:
        """Effective settings, with rate and rule files expanded to values.

        The output directory is left out so that identical runs into
        different directories write identical files.
        """
        items = [
            ("rows", self.rows), ("cols", self.cols), ("word_bits", self.word_bits),
            ("corner", ",".join(self.corners())), ("sizes", ",".join(map(str, self.sizes))),
            ("jobs", self.jobs), ("deterministic", "true"),
        ]
        t = self.template()
        items += [("cell_width_um", repr(t.width_um)), ("cell_height_um", repr(t.height_um))]
        if self.fault_inject is not None:
            items.append(("fault_inject", self.fault_inject))
        items += [(f"rates.{k}", v) for k, v in parse_kv(self.load_rates().to_text()).items()]
        rules = self.load_rules()
        for layer in sorted(rules.min_width):
            items.append((f"rules.{layer.lower()}.min_width_um", repr(rules.min_width[layer])))
        for layer in sorted(rules.min_spacing):
            items.append((f"rules.{layer.lower()}.min_spacing_um", repr(rules.min_spacing[layer])))
        return format_kv(items)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc) from exc


def _merged(path: str | None, inline) -> str:
    values = parse_kv(_read(path), path) if path is not None else {}
    values.update(inline)
    return format_kv(values.items())


def _int(value: str, key: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not an integer") from None


def _sizes(value: str, key: str = "sizes") -> tuple[int, ...]:
    parts = [p for p in value.replace(" ", "").split(",") if p]
    if not parts:
        raise ConfigError(f"{key}: empty list")
    return tuple(sorted({_int(p, key) for p in parts}))


def _bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: {value!r} is not a boolean")


_CONVERT = {
    "rows": _int, "cols": _int, "word_bits": _int, "jobs": _int, "fault_inject": _int,
    "sizes": _sizes, "deterministic": _bool,
}
_KNOWN = {f.name for f in fields(CompilerConfig)}


def coerce(key: str, value: str):
    if key not in _KNOWN:
        raise ConfigError(f"unknown config key {key!r}")
    conv = _CONVERT.get(key)
    if conv is not None:
        return conv(value, key)
    if key in ("cell_width_um", "cell_height_um"):
        parse_float(value, key)
    return value


def load_config(config_file: str | None = None, overrides: dict | None = None, environ=None) -> CompilerConfig:
    environ = os.environ if environ is None else environ
    values: dict = {}
    inline: dict[str, list] = {"rates": [], "rules": []}
    if config_file is not None:
        for k, v in parse_kv(_read(config_file), config_file).items():
            group, dot, sub = k.partition(".")
            if dot and group in inline:
                inline[group].append((sub, v))
                continue
            values[k.replace("-", "_")] = coerce(k.replace("-", "_"), v)
    values["rate_values"] = tuple(inline["rates"])
    values["rule_values"] = tuple(inline["rules"])
    if "out" not in values and environ.get(ENV_OUT):
        values["out"] = environ[ENV_OUT]
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return CompilerConfig(**values).validate()
