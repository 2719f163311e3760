"""Run configuration: TOML text merged over defaults, with unknown keys rejected."""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

COMMANDS = ("spectrum", "pes", "verify", "bsnorm", "oracle")

# free-form entries whose contents are validated by their consumers
_OPEN = {("measure", "components")}

DEFAULTS: dict[str, Any] = {
    "command": "",
    "seed": 0,
    "threads": 1,
    "measure": {"components": []},
    "radial": {
        "kappas": [-1, 1, -2, 2],
        "levels": 5,
        "tol": 1e-12,
        "r_max": 40.0,
        "n_intervals": 200,
        "order": 6,
        "grading": 3.0,
        "cap": 0.0,
    },
    "molecule": {
        "centers": [],
        "weights": [],
        "basis": {"J": 14, "beta": 3.0, "l_max": 1, "alpha0": 0.02},
        "grid": {"radial_n": 80, "angular_n": 110},
    },
    "pes": {
        "separations": [],
        "d_min": 0.05,
        "d_max": 50.0,
        "points": 20,
        "tol": 1e-10,
    },
    "verify": {
        "trials": 100,
        "hardy_a": [0.0, 0.5, 1.0, 5.0],
        "embedding_weight": 0.9,
        "lemma9_alpha": [0.0, 0.25, 0.49],
        "lemma5_weight": 0.9,
        "lemma5_separation": 1.0,
        "rel_tol": 1e-8,
        "ims_tol": 1e-10,
        "ims_points": 400,
    },
    "grid": {
        "L": 30.0,
        "N": 64,
        "cap": 0.0,
        "iterations": 60,
        "seed": 0,
        "lambda": 0.0,
    },
    "oracle": {
        "kappas": [-1],
        "count": 5,
    },
    "output": {"dir": "out"},
}


def _merge(base: dict, user: dict, path: tuple = ()) -> dict:
    out = copy.deepcopy(base)
    for key, val in user.items():
        here = path + (key,)
        if key not in base:
            raise ConfigError(f"ConfigError: unknown key '{'.'.join(here)}'")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"ConfigError: '{'.'.join(here)}' must be a table")
            out[key] = _merge(base[key], val, here)
            continue
        if here not in _OPEN:
            _check_type(base[key], val, here)
        out[key] = val
    return out


def _check_type(default, val, here):
    name = ".".join(here)
    if isinstance(default, bool) or isinstance(val, bool):
        if type(default) is not type(val):
            raise ConfigError(f"ConfigError: '{name}' has the wrong type")
    elif isinstance(default, (int, float)):
        if not isinstance(val, (int, float)):
            raise ConfigError(f"ConfigError: '{name}' must be a number")
        if isinstance(default, int) and not isinstance(default, bool) and not isinstance(val, int):
            raise ConfigError(f"ConfigError: '{name}' must be an integer")
    elif isinstance(default, str) and not isinstance(val, str):
        raise ConfigError(f"ConfigError: '{name}' must be a string")
    elif isinstance(default, list) and not isinstance(val, list):
        raise ConfigError(f"ConfigError: '{name}' must be an array")


def load_config(text: str | None = None, overrides: dict | None = None) -> dict:
    """Parse TOML text, merge it over the defaults and apply flat overrides."""
    user = {}
    if text:
        try:
            user = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"ConfigError: {exc}") from exc
    cfg = _merge(DEFAULTS, user)
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    if cfg["command"] and cfg["command"] not in COMMANDS:
        raise ConfigError(f"ConfigError: unknown command '{cfg['command']}'")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise ConfigError("ConfigError: threads must be a positive integer")
    return cfg


def load_config_file(path: str, overrides: dict | None = None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"ConfigError: cannot read {path}: {exc}") from exc
    return load_config(text, overrides)


# where results go and how many workers run them never change the numbers
RUN_INVARIANT = ("output", "threads")


def physics_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in RUN_INVARIANT}


def canonical_json(cfg: dict) -> str:
    return json.dumps(physics_config(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]
