"""Experiment configuration: JSON schema, validation and defaults.

A configuration is a JSON object::

    {
      "example": "KSMinimal",                  # or {"name": ..., "params": {...}}
      "operation": "suspension-check",
      "parameters": {"pairs": [["0-", "0+"]], "rho": 0.5, "N": 1000},
      "seed": 1,
      "output": {"path": "out.csv", "format": "csv"}
    }

``example`` may also be an inline suspension
(``{"inline": {"base": ..., "map": ..., "time": ...}}``) or, for the
annulus operations, a radial profile
(``{"profile": "linear", "params": {}, "r_in": 1, "r_out": 2}``).

Random pairs (``random_pairs`` in the parameters, the default for the
sweep operations when no explicit ``pairs`` are listed) are drawn from
``numpy.random.Generator(numpy.random.PCG64(seed))``.  The draw order is
documented in :func:`explab.cli.random_pairs`, so sweeps reproduce across
platforms.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ConfigError

OPERATIONS = (
    "simulate",
    "separation-sweep",
    "suspension-check",
    "series",
    "frechet",
    "denjoy-koksma",
    "annulus-period",
    "green-check",
    "robust-criterion",
)

ANNULUS_OPERATIONS = ("annulus-period", "green-check", "robust-criterion")

REQUIRED = object()

# low/high left as None mean "the whole base space or domain"
_RANDOM = {"count": REQUIRED, "low": None, "high": None, "coords": "cartesian"}
DEFAULT_RANDOM_COUNT = 20

# parameter name -> default (REQUIRED when the caller must supply it)
SCHEMA: dict[str, dict[str, Any]] = {
    "simulate": {"point": REQUIRED, "horizon": 10.0, "dt": 1e-3},
    "separation-sweep": {"pairs": None, "random_pairs": None, "threshold": None, "horizon": 10.0,
                         "dt": 1e-3, "mode": "forward", "n_jobs": None},
    "suspension-check": {"pairs": None, "random_pairs": None, "rho": None, "N": 1000, "mode": "forward",
                         "n_jobs": None},
    "series": {"x": REQUIRED, "y": REQUIRED, "N": 1000, "threshold": 1e3},
    "frechet": {"a": REQUIRED, "b": REQUIRED, "horizon": REQUIRED, "dt": 1e-2},
    "denjoy-koksma": {"n": REQUIRED, "grid": 10_000},
    "annulus-period": {"radii": None, "n_radii": 32, "quad_n": 512, "direct": False, "dt": 1e-4},
    "green-check": {"r1": None, "r2": None, "quad_n": 512, "rule": "simpson"},
    "robust-criterion": {"grid_n": 64},
}

_MODES = ("forward", "backward", "bidirectional")
_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class OutputSpec:
    path: Optional[str] = None
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    example: Any
    operation: str
    parameters: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output: OutputSpec = OutputSpec()

    def to_dict(self) -> dict:
        return {
            "example": copy.deepcopy(self.example),
            "operation": self.operation,
            "parameters": copy.deepcopy(self.parameters),
            "seed": self.seed,
            "output": {"path": self.output.path, "format": self.output.format},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _reject_unknown(obj: dict, allowed, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}; allowed: {sorted(allowed)}", f"{path}.{key}" if path else key)


def _number(value, path: str, positive: bool = False, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if integer and not float(value).is_integer():
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value!r}", path)
    return int(value) if integer else float(value)


def _check_example(example, operation: str):
    path = "example"
    if isinstance(example, str):
        if operation in ANNULUS_OPERATIONS:
            raise ConfigError("annulus operations need a profile example {\"profile\": ...}", path)
        return example
    if not isinstance(example, dict):
        raise ConfigError("expected an example name or an object", path)
    if "profile" in example:
        _reject_unknown(example, {"profile", "params", "r_in", "r_out"}, path)
        if not isinstance(example["profile"], str):
            raise ConfigError("profile must be a name", f"{path}.profile")
        out = {"profile": example["profile"], "params": dict(example.get("params", {})),
               "r_in": _number(example.get("r_in", 1.0), f"{path}.r_in", positive=True),
               "r_out": _number(example.get("r_out", 2.0), f"{path}.r_out", positive=True)}
        if operation not in ANNULUS_OPERATIONS:
            raise ConfigError(f"profile examples only serve {list(ANNULUS_OPERATIONS)}", path)
        return out
    if operation in ANNULUS_OPERATIONS:
        raise ConfigError("annulus operations need a profile example {\"profile\": ...}", path)
    if "inline" in example:
        _reject_unknown(example, {"inline"}, path)
        inline = example["inline"]
        if not isinstance(inline, dict):
            raise ConfigError("expected an object", f"{path}.inline")
        _reject_unknown(inline, {"base", "map", "time", "name"}, f"{path}.inline")
        for key in ("base", "map", "time"):
            part = inline.get(key)
            if not isinstance(part, dict) or "kind" not in part:
                raise ConfigError("expected an object with a 'kind'", f"{path}.inline.{key}")
        return copy.deepcopy(example)
    _reject_unknown(example, {"name", "params"}, path)
    if not isinstance(example.get("name"), str):
        raise ConfigError("missing example name", f"{path}.name")
    params = example.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("expected an object", f"{path}.params")
    return {"name": example["name"], "params": copy.deepcopy(params)}


def _check_random(spec, path: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object", path)
    _reject_unknown(spec, _RANDOM, path)
    out = {}
    for key, default in _RANDOM.items():
        if key not in spec:
            if default is REQUIRED:
                raise ConfigError("missing required parameter", f"{path}.{key}")
            out[key] = default
        else:
            out[key] = spec[key]
    out["count"] = _number(out["count"], f"{path}.count", positive=True, integer=True)
    if (out["low"] is None) != (out["high"] is None):
        raise ConfigError("give both low and high or neither", f"{path}.low")
    if out["coords"] not in ("cartesian", "polar"):
        raise ConfigError("coords must be 'cartesian' or 'polar'", f"{path}.coords")
    return out


def _check_parameters(operation: str, params: dict, seed) -> dict:
    schema = SCHEMA[operation]
    if not isinstance(params, dict):
        raise ConfigError("expected an object", "parameters")
    _reject_unknown(params, schema, "parameters")
    out = {}
    for key, default in schema.items():
        if key in params and params[key] is not None:
            out[key] = copy.deepcopy(params[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required parameter for {operation}", f"parameters.{key}")
        else:
            out[key] = default
    for key in ("horizon", "dt", "threshold", "rho"):
        if out.get(key) is not None:
            out[key] = _number(out[key], f"parameters.{key}", positive=True)
    for key in ("N", "n", "grid", "quad_n", "grid_n", "n_radii", "n_jobs"):
        if out.get(key) is not None:
            out[key] = _number(out[key], f"parameters.{key}", positive=True, integer=True)
    if "mode" in out and out["mode"] not in _MODES:
        raise ConfigError(f"mode must be one of {list(_MODES)}", "parameters.mode")
    if "pairs" in schema:
        if out["pairs"] is not None and out["random_pairs"] is not None:
            raise ConfigError("give at most one of 'pairs' or 'random_pairs'", "parameters.pairs")
        if out["pairs"] is None and out["random_pairs"] is None:
            out["random_pairs"] = {"count": DEFAULT_RANDOM_COUNT}
        if out["pairs"] is not None and (not isinstance(out["pairs"], list) or not out["pairs"]):
            raise ConfigError("expected a nonempty list of pairs", "parameters.pairs")
        if out["random_pairs"] is not None:
            out["random_pairs"] = _check_random(out["random_pairs"], "parameters.random_pairs")
            if seed is None:
                raise ConfigError("random pairs need a seed", "seed")
    if operation == "green-check":
        if (out["r1"] is None) != (out["r2"] is None):
            raise ConfigError("give both r1 and r2 or neither", "parameters.r1")
        if out["rule"] not in ("simpson", "trapezoid"):
            raise ConfigError("rule must be 'simpson' or 'trapezoid'", "parameters.rule")
    if operation == "annulus-period" and not isinstance(out["direct"], bool):
        raise ConfigError("expected true or false", "parameters.direct")
    return out


def parse_config_dict(data) -> ExperimentConfig:
    """Validate a decoded JSON object and fill defaults."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    _reject_unknown(data, {"example", "operation", "parameters", "seed", "output"}, "")
    operation = data.get("operation")
    if operation not in OPERATIONS:
        raise ConfigError(f"unknown operation {operation!r}; choose from {list(OPERATIONS)}", "operation")
    if "example" not in data:
        raise ConfigError("missing example", "example")
    seed = data.get("seed")
    if seed is not None:
        seed = _number(seed, "seed", integer=True)
        if seed < 0:
            raise ConfigError("seed must be non-negative", "seed")
    example = _check_example(data["example"], operation)
    params = _check_parameters(operation, data.get("parameters", {}), seed)
    out = data.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("expected an object", "output")
    _reject_unknown(out, {"path", "format"}, "output")
    fmt = out.get("format") or "csv"
    if fmt not in _FORMATS:
        raise ConfigError(f"format must be one of {list(_FORMATS)}", "output.format")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("expected a file path", "output.path")
    return ExperimentConfig(example, operation, params, seed, OutputSpec(path, fmt))


def parse_config(text: str) -> ExperimentConfig:
    """Parse JSON text into a validated :class:`ExperimentConfig`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    return parse_config_dict(data)
