"""Run-configuration parsing: a small INI dialect with strict validation.

Every key is checked against a schema before any computation starts;
unknown sections or keys are rejected.  The parsed configuration is echoed
(with a content hash) into every output artifact.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .geometry import WindowShape
from .bracketing import LayerPair
from .layer_solver import SolverNumerics

__all__ = ["ConfigFileError", "RunConfig", "load_config"]


class ConfigFileError(ValueError):
    pass


_PI_NAMES = {"pi": math.pi, "pi/2": math.pi / 2, "pi/3": math.pi / 3,
             "pi/4": math.pi / 4, "pi/6": math.pi / 6}


def _parse_width(text: str) -> float:
    text = text.strip().lower()
    if text in _PI_NAMES:
        return _PI_NAMES[text]
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigFileError(f"cannot parse layer width {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigFileError(f"cannot parse number list {text!r}") from exc


_SCHEMA: dict[str, dict[str, str]] = {
    "layers": {"d": "width"},
    "window": {"kind": "str", "radius": "float", "cos": "floats",
               "sin": "floats", "scale": "float"},
    "numerics": {"h_rho": "float", "h_z": "float", "edge_zone": "auto_float",
                 "edge_beta": "float", "min_cell": "float", "l": "auto_float",
                 "l_max": "float", "resolve_decay": "float", "k_max": "int",
                 "seed": "int", "threads": "int"},
    "solve": {"count": "int", "half_domain": "bool",
              "export_eigenfunctions": "bool"},
    "critical": {"n": "int", "t_lo": "float", "t_hi": "float",
                 "rel_tol": "float", "sector": "auto_int",
                 "gap_floor": "float"},
    "gap_law": {"t_n": "float", "eps": "floats", "sector": "auto_int",
                "index": "int", "beta": "float"},
    "edge": {"t_n": "float", "eps": "float", "sector": "auto_int",
             "index": "int", "envelope_correction": "bool"},
    "convergence": {"levels": "int", "sector": "int", "self_test": "bool"},
    "window_eigs": {"count": "int", "h": "float", "dump_mesh": "bool"},
    "sweep": {"radii": "floats"},
}

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _convert(kind: str, raw: str) -> Any:
    raw = raw.strip()
    if kind == "width":
        return _parse_width(raw)
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "floats":
        return _floats(raw)
    if kind == "str":
        return raw
    if kind == "bool":
        if raw.lower() not in _BOOL:
            raise ConfigFileError(f"cannot parse boolean {raw!r}")
        return _BOOL[raw.lower()]
    if kind == "auto_float":
        return None if raw.lower() == "auto" else float(raw)
    if kind == "auto_int":
        return None if raw.lower() == "auto" else int(raw)
    raise AssertionError(kind)


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with typed sections."""

    layers: LayerPair
    window: WindowShape
    numerics: SolverNumerics
    threads: int
    sections: dict = field(default_factory=dict)  # parsed per-command blocks
    raw: dict = field(default_factory=dict)       # canonical echo

    def command_block(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    @property
    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigFileError(f"cannot read configuration file {path!r}")

    parsed: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigFileError(f"unknown section [{section}]")
        parsed[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigFileError(f"unknown key {key!r} in [{section}]")
            try:
                parsed[section][key] = _convert(_SCHEMA[section][key], raw)
            except (ValueError, ConfigFileError) as exc:
                raise ConfigFileError(
                    f"bad value for {key!r} in [{section}]: {exc}") from exc

    if "layers" not in parsed or "d" not in parsed["layers"]:
        raise ConfigFileError("missing [layers] d")
    try:
        layers = LayerPair(parsed["layers"]["d"])
    except ValueError as exc:
        raise ConfigFileError(str(exc)) from exc

    win = parsed.get("window", {})
    kind = win.get("kind", "disk")
    if kind == "disk":
        if "radius" not in win:
            raise ConfigFileError("disk window needs a radius")
        shape = WindowShape.disk(win["radius"])
    elif kind == "profile":
        if "cos" not in win:
            raise ConfigFileError("profile window needs cos coefficients")
        shape = WindowShape(cos_coeffs=tuple(win["cos"]),
                            sin_coeffs=tuple(win.get("sin", ())),
                            scale=win.get("scale", 1.0))
    else:
        raise ConfigFileError(f"unknown window kind {kind!r}")

    nums_in = parsed.get("numerics", {})
    threads = int(nums_in.pop("threads", 1))
    if threads < 1:
        raise ConfigFileError("threads must be >= 1")
    rename = {"l": "L", "l_max": "L_max"}
    kwargs = {rename.get(k, k): v for k, v in nums_in.items()}
    try:
        numerics = SolverNumerics(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigFileError(f"bad [numerics]: {exc}") from exc

    blocks = {k: v for k, v in parsed.items()
              if k not in ("layers", "window", "numerics")}
    raw_echo = {sec: {k: v for k, v in kv.items()} for sec, kv in parsed.items()}
    return RunConfig(layers=layers, window=shape, numerics=numerics,
                     threads=threads, sections=blocks, raw=raw_echo)
