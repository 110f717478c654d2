"""Plain ``key=value`` text files: one key per line, ``#`` starts a comment."""

from __future__ import annotations

from .errors import ConfigError


def parse_kv(text: str, source: str = "<text>") -> dict[str, str]:
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{no}: expected key=value, got {raw.strip()!r}")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a number") from None


def format_kv(items) -> str:
    return "".join(f"{k}={v}\n" for k, v in items)
