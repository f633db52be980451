"""Experiment configuration: one JSON document with fixed sections.

Sections are ``shape``, ``grid``, ``speed``, ``flow``, ``monitors`` and
``output``. Unknown keys are rejected and reported with the line they
appear on, so a misspelled option never falls back to a default silently.
"""

from __future__ import annotations

import copy
import json
import math
import re
from pathlib import Path

from . import speeds
from .flow import SCHEMES, RunConfig
from .grid import MODES

NUM, INT, STR, LIST, BOOL, DICT = "number", "integer", "string", "list", "boolean", "object"

SCHEMA = {
    "shape": {"kind": STR, "radius": NUM, "a": NUM, "c": NUM, "values": LIST},
    "grid": {"mode": STR, "N": INT, "refine": LIST},
    "speed": {"kind": STR, "alpha": NUM, "n": INT, "K0": NUM, "check": DICT},
    "flow": {
        "theta": NUM,
        "t_max": NUM,
        "c_cfl": NUM,
        "r_min": NUM,
        "scheme": STR,
        "max_steps": INT,
        "theta_values": LIST,
        "max_workers": INT,
    },
    "monitors": {"sigmas": LIST, "record_stride": INT, "per_step_tol": NUM, "total_tol": NUM},
    "output": {"write_obj": BOOL, "obj_longitudes": INT},
}
CHECK_SCHEMA = {
    "K_range": LIST,
    "n": INT,
    "samples": INT,
    "radii_box": LIST,
    "gamma": NUM,
    "gamma_hat": NUM,
    "radii_samples": INT,
}

DEFAULTS = {
    "shape": {"kind": "sphere", "radius": 1.0},
    "grid": {"mode": "axisymmetric", "N": 64, "refine": [32, 64, 128, 256]},
    "speed": {"kind": "power", "alpha": 1.0, "check": {"K_range": [0.1, 100.0], "n": 2, "samples": 1000}},
    "flow": {"theta": 1.0, "t_max": 1.0, "c_cfl": 0.2, "r_min": 0.05, "scheme": "ssp_rk2"},
    "monitors": {"sigmas": [0.1], "record_stride": 100, "per_step_tol": 1e-8, "total_tol": 1e-6},
    "output": {"write_obj": True},
}


class ConfigError(ValueError):
    pass


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(source: str, text: str | None, key: str) -> str:
    line = _line_of(text, key)
    return f"{source}:{line}" if line else source


def _type_ok(value, kind: str) -> bool:
    if value is None:
        return True
    if kind == NUM:
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if kind == INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == STR:
        return isinstance(value, str)
    if kind == LIST:
        return isinstance(value, list)
    if kind == BOOL:
        return isinstance(value, bool)
    return isinstance(value, dict)


def _check_keys(data: dict, schema: dict, prefix: str, source: str, text: str | None):
    for key, value in data.items():
        if key not in schema:
            raise ConfigError(f"{_where(source, text, key)}: unknown key {prefix}{key!s}")
        if not _type_ok(value, schema[key]):
            raise ConfigError(f"{_where(source, text, key)}: {prefix}{key} must be a {schema[key]}, got {value!r}")


def validate(data, source: str = "<config>", text: str | None = None) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"{_where(source, text, section)}: unknown section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{_where(source, text, section)}: section {section} must be an object")
        _check_keys(body, SCHEMA[section], f"{section}.", source, text)
    check = data.get("speed", {}).get("check")
    if check:
        _check_keys(check, CHECK_SCHEMA, "speed.check.", source, text)
    return data


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply ``section.key=value`` (value parsed as JSON, else taken as a string)."""
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected key=value")
    path, raw = assignment.split("=", 1)
    parts = path.strip().split(".")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    schema = SCHEMA
    for depth, part in enumerate(parts[:-1]):
        if depth == 0 and part in SCHEMA:
            schema = SCHEMA[part]
        elif depth == 1 and parts[0] == "speed" and part == "check":
            schema = CHECK_SCHEMA
        else:
            raise ConfigError(f"--set {path}: unknown key")
    if len(parts) < 2 or parts[-1] not in schema:
        raise ConfigError(f"--set {path}: unknown key")
    if not _type_ok(value, schema[parts[-1]]):
        raise ConfigError(f"--set {path}: must be a {schema[parts[-1]]}, got {value!r}")
    node = cfg
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return cfg


def load_config(path, overrides=()) -> dict:
    """Read, validate and resolve a config file against the defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validate(data, str(path), text)
    # a new shape/speed kind replaces the default section instead of mixing keys
    base = copy.deepcopy(DEFAULTS)
    for section in ("shape", "speed"):
        if "kind" in data.get(section, {}) and data[section]["kind"] != base[section]["kind"]:
            base[section] = {k: v for k, v in base[section].items() if k == "check"}
    cfg = _merge(base, data)
    for ov in overrides:
        apply_override(cfg, ov)
    _semantic_checks(cfg, str(path), text)
    return cfg


def _semantic_checks(cfg: dict, source: str, text: str | None):
    def fail(key, msg):
        raise ConfigError(f"{_where(source, text, key)}: {msg}")

    shape = cfg["shape"]
    if shape.get("kind") not in ("sphere", "ellipsoid", "custom"):
        fail("kind", f"shape.kind must be sphere, ellipsoid or custom, got {shape.get('kind')!r}")
    if shape["kind"] == "sphere" and not (shape.get("radius") or 0) > 0:
        fail("radius", "shape.radius must be positive")
    if shape["kind"] == "ellipsoid":
        for k in ("a", "c"):
            if not (shape.get(k) or 0) > 0:
                fail(k, f"shape.{k} must be positive for an ellipsoid")
    if shape["kind"] == "custom" and not shape.get("values"):
        fail("values", "shape.values is required for a custom shape")
    if cfg["grid"]["mode"] not in MODES:
        fail("mode", f"grid.mode must be one of {MODES}")
    if cfg["grid"]["N"] < 8:
        fail("N", "grid.N must be >= 8")
    sp = cfg["speed"]
    if sp.get("kind") not in ("power", "log_power"):
        fail("kind", f"speed.kind must be power or log_power, got {sp.get('kind')!r}")
    if sp["kind"] == "power" and sp.get("alpha") is None:
        fail("alpha", "speed.alpha is required for a power speed")
    fl = cfg["flow"]
    if fl["scheme"] not in SCHEMES:
        fail("scheme", f"flow.scheme must be one of {SCHEMES}")
    for k in ("theta", "t_max", "r_min"):
        if not fl[k] > 0:
            fail(k, f"flow.{k} must be positive")
    if not 0 < fl["c_cfl"] <= 1:
        fail("c_cfl", "flow.c_cfl must lie in (0, 1]")
    if any(s < 0 for s in cfg["monitors"]["sigmas"]):
        fail("sigmas", "monitors.sigmas must be nonnegative")
    if cfg["monitors"]["record_stride"] < 1:
        fail("record_stride", "monitors.record_stride must be >= 1")


def build_speed(cfg: dict) -> speeds.SpeedSpec:
    sp = cfg["speed"]
    if sp["kind"] == "power":
        return speeds.power(sp["alpha"])
    return speeds.log_power(sp.get("n") or 2, sp.get("K0"))


def build_run_config(cfg: dict, **changes) -> RunConfig:
    fl, mon = cfg["flow"], cfg["monitors"]
    shape = {k: v for k, v in cfg["shape"].items() if v is not None}
    kwargs = dict(
        shape=shape,
        speed=build_speed(cfg),
        mode=cfg["grid"]["mode"],
        N=cfg["grid"]["N"],
        theta=fl["theta"],
        t_max=fl["t_max"],
        c_cfl=fl["c_cfl"],
        r_min=fl["r_min"],
        sigmas=tuple(float(s) for s in mon["sigmas"]),
        record_stride=mon["record_stride"],
        max_steps=fl.get("max_steps"),
        scheme=fl["scheme"],
    )
    kwargs.update(changes)
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
