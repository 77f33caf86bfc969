"""``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Values may carry a unit with an
SI prefix (``5 mV``, ``2.5 kHz``, ``62.5 mW``, ``0.1 us``); they are stored in
base SI units. A comma-separated value is a sweep; one sweep per file.
"""

from __future__ import annotations

import math
from dataclasses import fields
from typing import Dict, List, Optional, Tuple

from .model import SystemParams

_PREFIX = {"p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3, "k": 1e3, "M": 1e6, "G": 1e9}
_UNITS = {"V", "W", "Hz", "s", "m", "W/Hz", "Wt", "Wt/Hz"}

PARAM_KEYS = {f.name for f in fields(SystemParams)}
EXTRA_KEYS = {"delta_t_proc", "mode", "alpha", "n_star", "trials", "k_force"}
INT_KEYS = {"n_cycles", "n_star", "trials", "k_force"}


class ConfigError(ValueError):
    def __init__(self, message, line: Optional[int] = None, path: Optional[str] = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


def parse_quantity(text: str) -> float:
    parts = text.strip().split()
    if not parts:
        raise ValueError("empty value")
    value = float(parts[0])
    if len(parts) == 1:
        return value
    if len(parts) > 2:
        raise ValueError(f"cannot parse {text.strip()!r}")
    unit = parts[1]
    if unit in _UNITS:
        return value
    if unit[0] in _PREFIX and unit[1:] in _UNITS:
        return value * _PREFIX[unit[0]]
    raise ValueError(f"unknown unit {unit!r}")


class Config:
    def __init__(self, values: Dict[str, object], sweep: Optional[Tuple[str, List[float]]] = None,
                 path: Optional[str] = None):
        self.values = values
        self.sweep = sweep
        self.path = path

    def get(self, key, default=None):
        return self.values.get(key, default)

    def params_overrides(self):
        out = {k: v for k, v in self.values.items() if k in PARAM_KEYS}
        if "alpha" in self.values:
            if "mu" in self.values:
                raise ConfigError("give either mu or alpha, not both", path=self.path)
            out["mu"] = math.erfc(float(self.values["alpha"]) / math.sqrt(2.0))
        return out


def _convert(key, raw, line, path):
    if key == "mode":
        return raw.strip()
    try:
        v = parse_quantity(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line, path) from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite", line, path)
    if key in INT_KEYS:
        if v != int(v):
            raise ConfigError(f"{key}: expected an integer", line, path)
        return int(v)
    return v


def parse_config(text: str, path: Optional[str] = None) -> Config:
    values: Dict[str, object] = {}
    sweep = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, path)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in PARAM_KEYS and key not in EXTRA_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in values or (sweep and sweep[0] == key):
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        if not raw:
            raise ConfigError(f"{key}: missing value", lineno, path)
        if "," in raw:
            if sweep is not None:
                raise ConfigError("only one swept key is allowed", lineno, path)
            items = [s for s in raw.split(",")]
            if any(not s.strip() for s in items):
                raise ConfigError(f"{key}: empty sweep entry", lineno, path)
            sweep = (key, [_convert(key, s, lineno, path) for s in items])
            continue
        values[key] = _convert(key, raw, lineno, path)
    return Config(values, sweep, path)


def load_config(path: str) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_config(text, path)
