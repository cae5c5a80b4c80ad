"""Run configuration: JSON files with unit-suffixed keys, validated per experiment.

File layout::

    {"experiment": "gate",
     "params": {"beta_rad_per_s": 1.0, "delta_rad_per_s": 10.0, ...},
     "output": {"dir": "results"}}

``experiment`` and ``output`` are optional.  Every key in ``params`` must
belong to the experiment's schema (see :data:`SCHEMAS`); missing keys take
the defaults listed there.  A run is a pure function of the resolved
parameters, and :meth:`RunConfig.config_hash` fingerprints them.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Callable

from .units import ueV_to_rad

__all__ = ["ConfigError", "RunConfig", "SCHEMAS", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


# -- value converters -----------------------------------------------------

def _int(key, v, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(key, f"must be >= {minimum}")
    return v


def _float(key, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(key, "must be positive")
    return float(v)


def integer(minimum=None) -> Callable:
    return lambda k, v: _int(k, v, minimum)


def number(positive=True) -> Callable:
    return lambda k, v: _float(k, v, positive)


def choice(*options) -> Callable:
    def conv(k, v):
        if v not in options:
            raise ConfigError(k, f"must be one of {list(options)}, got {v!r}")
        return v
    return conv


def list_of(conv: Callable, min_len: int = 1) -> Callable:
    def inner(k, v):
        if not isinstance(v, list) or len(v) < min_len:
            raise ConfigError(k, f"expected a list with at least {min_len} entries")
        return [conv(k, x) for x in v]
    return inner


# -- schemas ---------------------------------------------------------------
# config key -> (runner keyword, converter, default)

_GATE_COMMON = {
    "beta_rad_per_s": ("beta", number(), 1.0),
    "delta_rad_per_s": ("delta", number(), 10.0),
    "n_qubits": ("n_qubits", integer(1), 2),
    "k_values": ("ks", list_of(integer(1)), [1, 2]),
    "axis": ("axis", choice("x", "y"), "x"),
    "tol": ("tol", number(), 1e-10),
    "converge_tol": ("converge_tol", number(), 1e-6),
}

SCHEMAS: dict[str, dict[str, tuple[str, Callable, Any]]] = {
    "spectrum": {
        "M_values": ("Ms", list_of(integer(1)), [2, 3]),
        "chi_x_rad_per_s": ("chi_x", number(), 1.0),
        "chi_y_rad_per_s": ("chi_y", number(), 1.0),
        "degeneracy_tol": ("degeneracy_tol", number(), 1e-9),
        "expected_degeneracy": ("expected_degeneracy", integer(1), 2),
    },
    "gate": {
        **_GATE_COMMON,
        "n_max": ("n_max", integer(1), 15),
        "threshold_operator_distance": ("threshold", number(), 1e-6),
        "fock_probe": ("fock_probe", integer(0), 5),
        "magnus_steps_per_loop": ("magnus_steps_per_loop", integer(1), 400),
        "fock_pad": ("pad", integer(0), 30),
    },
    "thermal": {
        **_GATE_COMMON,
        "n_max": ("n_max", integer(1), 60),
        "n_mean": ("n_mean", number(positive=False), 2.0),
        "threshold_trace_distance": ("threshold", number(), 1e-6),
        "seed": ("seed", integer(0), 0),
    },
    "trotter": {
        "M": ("M", integer(1), 2),
        "chi_rad_per_s": ("chi", number(), 1.0),
        "tau_chi_start": ("tau_chi0", number(), 0.05),
        "halvings": ("halvings", integer(1), 2),
        "cycles_start": ("cycles0", integer(1), 1),
        "seed": ("seed", integer(0), 0),
        "ratio_min": ("ratio_min", number(), 3.0),
        "ratio_max": ("ratio_max", number(), 5.0),
        "trotter_guard": ("trotter_guard", number(), 0.05),
        "omega_over_delta": ("omega_over_delta", number(), 100.0),
    },
    "prep": {
        "M": ("M", integer(1), 2),
        "chi_rad_per_s": ("chi", number(), 1.0),
        "init_field_rad_per_s": ("init_field", number(), 1.0),
        "logical_bit": ("logical_bit", choice(0, 1), 0),
        "T_ramp_start_chi": ("T0_chi", number(), 1.0),
        "max_doublings": ("max_doublings", integer(0), 12),
        "threshold_overlap": ("threshold", number(), 0.99),
        "steps": ("steps", integer(10), 50),
        "shape": ("shape", choice("linear", "smoothstep"), "smoothstep"),
        "tol": ("tol", number(), 1e-10),
        "sudden_T_ramp_chi": ("sudden_T_chi", number(), 1e-9),
        "sudden_threshold": ("sudden_threshold", number(), 1e-8),
        "monotone_tol": ("monotone_tol", number(), 1e-3),
    },
    "protect": {
        "M_values": ("Ms", list_of(integer(1)), [2, 3]),
        "max_weights": ("max_weights", list_of(integer(1)), [1, 2]),
        "chi_rad_per_s": ("chi", number(), 1.0),
        "eps_over_chi": ("eps_chi", list_of(number(), 2), [5e-4, 1e-3]),
        "samples": ("samples", integer(1), 2),
        "seed": ("seed", integer(0), 0),
        "axes": ("axes", list_of(choice("x", "y", "z")), ["x", "y", "z"]),
        "scalar_threshold": ("scalar_threshold", number(), 1e-9),
        "exponent_threshold": ("exponent_threshold", number(), 1.5),
    },
    "feasibility": {
        "Q": ("Q", number(), 1e6),
        "omega_c_rad_per_s": ("omega_c", number(), 2 * math.pi * 50e9),
        "lifetime_s": ("gamma", number(), 2e-6),
        "Omega_rad_per_s": ("Omega", number(), 2 * math.pi * 10e6),
        "g": ("g", number(), 1e-2),
        "E_J_ueV": ("E_J", number(), 40.0),
        "delta_over_beta": ("delta_over_beta", number(), 10.0),
        "epsilon": ("epsilon", number(), 0.2),
        "tau_c_target_s": ("tau_c_target_s", number(), 3.2e-6),
        "beta_target_hz": ("beta_target_hz", number(), 48e6),
        "rel_tol": ("rel_tol", number(), 0.02),
        "infidelity_min": ("infidelity_min", number(positive=False), 0.005),
        "infidelity_max": ("infidelity_max", number(), 0.01),
    },
    "schedule": {
        "kind": ("kind", choice("trotter", "prep"), "trotter"),
        "M": ("M", integer(1), 2),
        "beta_rad_per_s": ("beta", number(), 1.0),
        "delta_rad_per_s": ("delta", number(), 100.0),
        "g": ("g", number(), 1e-2),
        "omega_over_delta": ("omega_over_delta", number(), 100.0),
        "tau_s": ("tau", number(), None),
        "cycles": ("cycles", integer(1), 1),
        "trotter_guard": ("trotter_guard", number(), 0.05),
        "seed": ("seed", integer(0), 0),
        "logical_bit": ("logical_bit", choice(0, 1), 0),
        "T_ramp_s": ("T_ramp", number(), None),
        "steps": ("steps", integer(10), 10),
        "shape": ("shape", choice("linear", "smoothstep"), "smoothstep"),
        "init_field_rad_per_s": ("init_field", number(), 1.0),
    },
}


def _pack(kw: dict, a: str, b: str, into: str) -> dict:
    kw[into] = (kw.pop(a), kw.pop(b))
    return kw


def _feasibility_kwargs(kw: dict) -> dict:
    from .device import FeasibilityParams

    fields = ("Q", "omega_c", "gamma", "Omega", "g", "E_J", "delta_over_beta", "epsilon")
    values = {f: kw.pop(f) for f in fields}
    values["E_J"] = ueV_to_rad(values["E_J"])
    try:
        kw["fp"] = FeasibilityParams(**values)
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc
    return _pack(kw, "infidelity_min", "infidelity_max", "infidelity_range")


_POST = {
    "trotter": lambda kw: _pack(kw, "ratio_min", "ratio_max", "ratio_bounds"),
    "feasibility": _feasibility_kwargs,
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    params: dict
    out_dir: str | None = None

    def canonical(self) -> str:
        return json.dumps({"experiment": self.experiment, "params": self.params},
                          sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def kwargs(self) -> dict:
        """Keyword arguments for the matching runner."""
        schema = SCHEMAS[self.experiment]
        kw = {schema[k][0]: v for k, v in self.params.items()}
        post = _POST.get(self.experiment)
        return post(kw) if post else kw


def parse_config(raw: dict, experiment: str) -> RunConfig:
    if experiment not in SCHEMAS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "top level must be a JSON object")
    for key in raw:
        if key not in ("experiment", "params", "output"):
            raise ConfigError(key, "unknown top-level key")
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError("experiment", f"file is for {raw['experiment']!r}, command is {experiment!r}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params", "must be a JSON object")
    schema = SCHEMAS[experiment]
    resolved = {}
    for key, value in params.items():
        if key not in schema:
            raise ConfigError(f"params.{key}", f"not a parameter of {experiment!r}")
        resolved[key] = schema[key][1](f"params.{key}", value)
    for key, (_, _, default) in schema.items():
        resolved.setdefault(key, default)
    out = raw.get("output", {})
    if not isinstance(out, dict) or set(out) - {"dir"}:
        raise ConfigError("output", "only {'dir': <path>} is supported")
    out_dir = out.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output.dir", "must be a string")
    return RunConfig(experiment, resolved, out_dir)


def load_config(path: str, experiment: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(raw, experiment)
