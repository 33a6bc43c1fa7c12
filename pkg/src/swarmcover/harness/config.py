"""Experiment configuration: defaults, schema validation and object builders.

A config file is a JSON object with the sections below. Every key is optional;
missing keys take the defaults in ``DEFAULTS`` (the reference operating point).
Validation reports every problem with a dotted field path.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import jsonschema

from ..errors import ConfigurationError
from ..gridworld import GridSpace, ObstacleMap, build_grid, load_obstacles, random_pillars
from ..linkbudget import A2AParams, A2GParams, swarm_geometry
from ..planner import METHODS, ORDERINGS
from ..qlearning import ConstantEpsilon, ExponentialDecay, LearningConfig, LinearDecay, Schedule
from ..seeding import Seed

LEARNING_METHODS = ("qlutp", "qlutp-star", "fixed-eps-ql")

DEFAULTS: dict[str, Any] = {
    "grid": {
        "extent_m": [2000.0, 2000.0, 200.0],
        "cell_size_m": 20.0,
        "altitude_band_m": [120.0, 180.0],
    },
    "obstacles": {
        "file": None,
        "pillars": 400,
        "height_range_m": [0.0, 200.0],
    },
    "users": {
        "mode": "fixed-count",
        "counts": [30, 35, 40, 45, 50],
        "intensity": None,
    },
    "radio": {
        "swarm_radius_m": 500.0,
        "altitude_m": 150.0,
        "a2a": {},
        "a2g": {},
    },
    "clustering": {
        "candidate_ns": list(range(1, 11)),
        "coverage_threshold": 0.9,
        "restarts": 10,
        "max_iters": 100,
    },
    "learning": {
        "alpha": 0.6,
        "gamma": 0.6,
        "episodes": 40,
        "max_episodes": 50000,
        "max_steps_per_episode": None,
        "obstacle_handling": "penalize",
        "stop_rule": "stable",
        "confirm_blocks": 1,
        "schedules": {
            "qlutp": {"type": "exponential", "start": 0.9, "floor": 0.05, "rate": 0.1},
            "qlutp-star": {"type": "linear", "start": 0.9, "floor": 0.05, "fraction": 0.7},
            "fixed-eps-ql": {"type": "constant", "epsilon": 0.1},
        },
    },
    "convergence": {
        "scenarios": 10,
        "episodes": 3000,
        "min_leg_steps": 10,
        "max_leg_steps": 20,
        "methods": ["fixed-eps-ql", "qlutp", "qlutp-star"],
    },
    "loss": {
        "ns": [2, 4, 6],
        "users": 40,
        "episodes_per_leg": None,
        "random_walk_cap": 1000000,
    },
    "planner": {
        "methods": list(METHODS),
        "ordering": "nearest-neighbor",
        "start_cell": None,
    },
    "experiment": {
        "master_seed": 0,
        "seeds": 20,
        "jobs": 1,
    },
    "output": {
        "directory": "results",
        "format": "csv+svg",
    },
    "acceptance": {
        "min_coverage_at_n": None,
        "coverage_n": 6,
        "convergence_ordering": False,
        "loss_ordering": False,
    },
}

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_count = {"type": "integer", "minimum": 1}
_pair = {"type": "array", "items": _nonneg, "minItems": 2, "maxItems": 2}


def _section(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


_SCHEDULE = {
    "oneOf": [
        _section({"type": {"const": "constant"}, "epsilon": _prob}, ("type",)),
        _section(
            {"type": {"const": "linear"}, "start": _prob, "floor": _prob, "fraction": _pos},
            ("type",),
        ),
        _section(
            {"type": {"const": "exponential"}, "start": _prob, "floor": _prob, "rate": _nonneg},
            ("type",),
        ),
    ]
}

SCHEMA: dict[str, Any] = _section(
    {
        "grid": _section(
            {
                "extent_m": {"type": "array", "items": _pos, "minItems": 3, "maxItems": 3},
                "cell_size_m": _pos,
                "altitude_band_m": _pair,
            }
        ),
        "obstacles": _section(
            {
                "file": {"type": ["string", "null"]},
                "pillars": {"type": "integer", "minimum": 0},
                "height_range_m": _pair,
            }
        ),
        "users": _section(
            {
                "mode": {"enum": ["fixed-count", "ppp"]},
                "counts": {"type": "array", "items": _count, "minItems": 1},
                "intensity": {"anyOf": [_pos, {"type": "null"}]},
            }
        ),
        "radio": _section(
            {
                "swarm_radius_m": {"anyOf": [_pos, {"type": "null"}]},
                "altitude_m": _nonneg,
                "a2a": _section(
                    {
                        "tx_power_dbm": {"type": "number"},
                        "tx_gain_db": {"type": "number"},
                        "rx_gain_db": {"type": "number"},
                        "threshold_dbm": {"type": "number"},
                        "pathloss_exponent": _pos,
                        "carrier_hz": _pos,
                    }
                ),
                "a2g": _section(
                    {
                        "ref_channel_gain": _pos,
                        "gu_tx_power_w": _pos,
                        "bandwidth_hz": _pos,
                        "noise_density_w_per_hz": _pos,
                        "rate_threshold_bps": _pos,
                    }
                ),
            }
        ),
        "clustering": _section(
            {
                "candidate_ns": {"type": "array", "items": _count, "minItems": 1},
                "coverage_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "restarts": _count,
                "max_iters": _count,
            }
        ),
        "learning": _section(
            {
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "gamma": {"type": "number", "minimum": 0, "maximum": 1},
                "episodes": _count,
                "max_episodes": _count,
                "max_steps_per_episode": {"anyOf": [_count, {"type": "null"}]},
                "obstacle_handling": {"enum": ["mask", "penalize"]},
                "stop_rule": {"enum": ["reach", "stable"]},
                "confirm_blocks": {"type": "integer", "minimum": 0},
                "schedules": _section({m: _SCHEDULE for m in LEARNING_METHODS}),
            }
        ),
        "convergence": _section(
            {
                "scenarios": _count,
                "episodes": _count,
                "min_leg_steps": _count,
                "max_leg_steps": _count,
                "methods": {
                    "type": "array",
                    "items": {"enum": list(LEARNING_METHODS)},
                    "minItems": 1,
                    "uniqueItems": True,
                },
            }
        ),
        "loss": _section(
            {
                "ns": {"type": "array", "items": _count, "minItems": 1},
                "users": _count,
                "episodes_per_leg": {"anyOf": [_count, {"type": "null"}]},
                "random_walk_cap": _count,
            }
        ),
        "planner": _section(
            {
                "methods": {
                    "type": "array",
                    "items": {"enum": list(METHODS)},
                    "minItems": 1,
                    "uniqueItems": True,
                },
                "ordering": {"enum": list(ORDERINGS)},
                "start_cell": {
                    "anyOf": [
                        {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 0},
                            "minItems": 3,
                            "maxItems": 3,
                        },
                        {"type": "null"},
                    ]
                },
            }
        ),
        "experiment": _section(
            {
                "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "seeds": _count,
                "jobs": _count,
            }
        ),
        "output": _section(
            {"directory": {"type": "string", "minLength": 1}, "format": {"enum": ["csv", "csv+svg"]}}
        ),
        "acceptance": _section(
            {
                "min_coverage_at_n": {"anyOf": [{"type": "number", "minimum": 0, "maximum": 1}, {"type": "null"}]},
                "coverage_n": _count,
                "convergence_ordering": {"type": "boolean"},
                "loss_ordering": {"type": "boolean"},
            }
        ),
    }
)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "schedules":
            out[key] = _merge(out[key], value)
        elif key == "schedules" and isinstance(value, dict) and isinstance(out.get(key), dict):
            # a schedule entry replaces the default wholesale (its type may change)
            out[key] = {**out[key], **copy.deepcopy(value)}
        else:
            out[key] = copy.deepcopy(value)
    return out


def _path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        parts += extra[:1]
    elif error.validator == "required":
        parts.append(error.message.split("'")[1])
    return ".".join(parts) or "<root>"


def _semantic_errors(cfg: dict) -> list[str]:
    errors = []
    grid = cfg["grid"]
    lz = grid["extent_m"][2]
    lo, hi = grid["altitude_band_m"]
    if not lo <= hi <= lz:
        errors.append(f"grid.altitude_band_m: band ({lo}, {hi}) must satisfy h_min <= h_max <= L_z={lz}")
    hr = cfg["obstacles"]["height_range_m"]
    if not hr[0] <= hr[1] <= lz:
        errors.append(f"obstacles.height_range_m: ({hr[0]}, {hr[1]}) must lie within [0, L_z={lz}]")
    users = cfg["users"]
    if users["mode"] == "ppp" and users["intensity"] is None:
        errors.append("users.intensity: required when users.mode is 'ppp'")
    for name in LEARNING_METHODS:
        s = cfg["learning"]["schedules"][name]
        if "start" in s and "floor" in s and s["floor"] > s["start"]:
            errors.append(f"learning.schedules.{name}.floor: exceeds start")
    conv = cfg["convergence"]
    if conv["min_leg_steps"] > conv["max_leg_steps"]:
        errors.append("convergence.min_leg_steps: exceeds convergence.max_leg_steps")
    radio = cfg["radio"]
    if radio["swarm_radius_m"] is None:
        try:
            swarm_geometry(A2AParams(**radio["a2a"]), A2GParams(**radio["a2g"]), radio["altitude_m"])
        except (ConfigurationError, ValueError) as exc:
            errors.append(f"radio: {exc}")
    start = cfg["planner"]["start_cell"]
    if start is not None:
        dl = grid["cell_size_m"]
        counts = [int(-(-v // dl)) for v in grid["extent_m"]]
        if any(c >= n for c, n in zip(start, counts)):
            errors.append(f"planner.start_cell: {start} outside grid of shape {counts}")
    return errors


def normalize(raw: dict) -> tuple[dict, list[str]]:
    """Apply defaults and validate. Returns the full config and a list of errors."""
    if not isinstance(raw, dict):
        return copy.deepcopy(DEFAULTS), ["<root>: config must be a JSON object"]
    cfg = _merge(DEFAULTS, raw)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(
        f"{_path(e)}: {e.message}" for e in validator.iter_errors(cfg)
    )
    if not errors:
        errors = _semantic_errors(cfg)
    return cfg, errors


def validate_config(path: str | Path | None) -> dict:
    """Load, default and validate a config file; raise with every problem listed.

    ``None`` or an empty file yields the built-in preset.
    """
    raw: Any = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if text.strip():
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    cfg, errors = normalize(raw)
    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


# settings that change how a run executes but not what it computes
_EXECUTION_ONLY = (("experiment", "jobs"), ("output", "directory"), ("output", "format"))


def config_hash(cfg: dict) -> str:
    """Short digest of the normalized config, written on every result row.

    Worker count and output location/format are left out, since results do
    not depend on them.
    """
    trimmed = copy.deepcopy(cfg)
    for section, key in _EXECUTION_ONLY:
        trimmed.get(section, {}).pop(key, None)
    canon = json.dumps(trimmed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_grid_from(cfg: dict) -> GridSpace:
    g = cfg["grid"]
    return build_grid(g["extent_m"], g["cell_size_m"], g["altitude_band_m"])


def build_obstacles(cfg: dict, grid: GridSpace, seed: Seed, keep_free=()) -> ObstacleMap:
    ob = cfg["obstacles"]
    if ob["file"]:
        return load_obstacles(ob["file"], grid)
    return random_pillars(grid, ob["pillars"], ob["height_range_m"], seed=seed, keep_free=keep_free)


def swarm_radius(cfg: dict) -> float:
    radio = cfg["radio"]
    if radio["swarm_radius_m"] is not None:
        return float(radio["swarm_radius_m"])
    geo = swarm_geometry(A2AParams(**radio["a2a"]), A2GParams(**radio["a2g"]), radio["altitude_m"])
    return geo.swarm_radius_m


def build_schedule(spec: dict) -> Schedule:
    kind = spec["type"]
    args = {k: v for k, v in spec.items() if k != "type"}
    if kind == "constant":
        return ConstantEpsilon(**args)
    if kind == "linear":
        return LinearDecay(**args)
    return ExponentialDecay(**args)


def build_schedules(cfg: dict) -> dict[str, Schedule]:
    return {m: build_schedule(s) for m, s in cfg["learning"]["schedules"].items()}


def build_learning(cfg: dict, seed: Seed = 0) -> LearningConfig:
    lc = cfg["learning"]
    return LearningConfig(
        learning_rate=lc["alpha"],
        discount=lc["gamma"],
        episodes=lc["episodes"],
        max_steps_per_episode=lc["max_steps_per_episode"],
        seed=seed,
        max_episodes=lc["max_episodes"],
        stop_rule=lc["stop_rule"],
        confirm_blocks=lc["confirm_blocks"],
    )
