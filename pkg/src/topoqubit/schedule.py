"""Compile row/column couplings and the preparation ramp into flux schedules.

A schedule is an ordered list of time slices.  Coupling slices drive the
selected devices with an ac inter-loop flux and a dc preset that picks the
J_x or J_y interaction; their duration is a whole number of closed phase-space
loops, 2 pi k / delta.  Global-field slices put every device on a dc flux.

Slice ``weight`` carries the interpolation intent of the adiabatic ramp: the
evolution engine scales the slice generator by it.  Coupling schedules use
weight 1 throughout.

JSON layout (version 1; times in s, frequencies in rad/s)::

    {"version": 1,
     "units": {"time": "s", "angular_frequency": "rad/s", "phase": "rad"},
     "spec": {"M", "chi_x", "chi_y", "init_field"},
     "drive": {"g", "E_J", "omega", "omega_c", "delta", "k"},
     "slices": [{"duration_s", "intent", "weight", "devices": [...],
                 "flux": {"phi1", "phi2", "inter": {"mode", "phi" | "omega"}}}],
     "metadata": {"seed", "tool_version", ...}}

Intents are ``row_x:<i>``, ``col_y:<j>``, ``global_x`` and ``idle``; device
numbers in ``devices`` are 1-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Literal

from . import __version__
from .cavity import DriveParams, coupling_preset
from .device import FluxSetting
from .lattice import LatticeSpec, col_devices, row_devices

__all__ = [
    "SCHEDULE_VERSION",
    "ScheduleError",
    "MalformedScheduleError",
    "UnsupportedVersionError",
    "ScheduleInvariantError",
    "TrotterGuardError",
    "SnapError",
    "TimeSlice",
    "Schedule",
    "AdiabaticPlan",
    "ramp",
    "snap_to_loop",
    "trotter_schedule",
    "prep_schedule",
    "validate",
    "emit_json",
    "parse_json",
]

SCHEDULE_VERSION = 1
DEFAULT_TROTTER_GUARD = 0.05
SNAP_TOLERANCE = 0.01
CLOSURE_RTOL = 1e-9


class ScheduleError(ValueError):
    pass


class MalformedScheduleError(ScheduleError):
    pass


class UnsupportedVersionError(ScheduleError):
    pass


class ScheduleInvariantError(ScheduleError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class TrotterGuardError(ScheduleError):
    pass


class SnapError(ScheduleError):
    pass


@dataclass(frozen=True)
class TimeSlice:
    duration: float
    intent: str
    devices: tuple[int, ...]
    flux: FluxSetting
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(int(d) for d in self.devices))

    @property
    def kind(self) -> str:
        return self.intent.split(":")[0]

    @property
    def index(self) -> int | None:
        parts = self.intent.split(":")
        return int(parts[1]) if len(parts) == 2 else None

    def to_dict(self) -> dict:
        return {
            "duration_s": float(self.duration),
            "intent": self.intent,
            "weight": float(self.weight),
            "devices": list(self.devices),
            "flux": self.flux.to_dict(),
        }


@dataclass(frozen=True)
class AdiabaticPlan:
    T_ramp: float
    steps: int
    shape: Literal["linear", "smoothstep"] = "smoothstep"

    def __post_init__(self):
        if not self.T_ramp > 0:
            raise ValueError("T_ramp must be positive")
        if self.steps < 10:
            raise ValueError("an adiabatic plan needs at least 10 steps")
        if self.shape not in ("linear", "smoothstep"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")


def ramp(s: float, shape: str) -> float:
    """Interpolation weight lambda(s) for s in [0, 1]."""
    if shape == "linear":
        return s
    if shape == "smoothstep":
        return 3 * s * s - 2 * s ** 3
    raise ValueError(f"unknown ramp shape {shape!r}")


@dataclass(frozen=True)
class Schedule:
    slices: tuple[TimeSlice, ...]
    drive: DriveParams
    spec: LatticeSpec
    metadata: dict = field(default_factory=dict)
    trotter_guard: float = DEFAULT_TROTTER_GUARD

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.slices)


def snap_to_loop(tau: float, drive: DriveParams) -> tuple[float, int]:
    """Nearest duration 2 pi k / delta (k >= 1); raise if it moves tau by more than 1 %."""
    loop = 2 * math.pi / drive.delta
    k = max(1, round(tau / loop))
    snapped = k * loop
    if abs(snapped - tau) > SNAP_TOLERANCE * tau:
        raise SnapError(f"tau = {tau:.6g} s is not within 1% of a closed loop 2 pi k / delta")
    return snapped, k


def _coupling_flux(axis: str, drive: DriveParams) -> FluxSetting:
    phi_minus, phi_plus = coupling_preset(axis)
    return FluxSetting.ac(drive.omega, phi_minus, phi_plus)


def _cycle(spec: LatticeSpec, drive: DriveParams, tau: float, weight: float = 1.0) -> list[TimeSlice]:
    fx, fy = _coupling_flux("x", drive), _coupling_flux("y", drive)
    out = [TimeSlice(tau, f"row_x:{i}", tuple(row_devices(i, spec.M)), fx, weight)
           for i in range(1, spec.M + 1)]
    out += [TimeSlice(tau, f"col_y:{j}", tuple(col_devices(j, spec.M)), fy, weight)
            for j in range(1, spec.M + 1)]
    return out


def _check_guard(tau: float, spec: LatticeSpec, guard: float):
    product = tau * max(spec.chi_x, spec.chi_y)
    if product > guard * (1 + 1e-12):
        raise TrotterGuardError(f"tau * chi = {product:.4g} exceeds the Trotter guard {guard}")


def trotter_schedule(spec: LatticeSpec, drive: DriveParams, tau: float, cycles: int,
                     trotter_guard: float = DEFAULT_TROTTER_GUARD, seed: int = 0) -> Schedule:
    """``cycles`` repetitions of (rows 1..M with J_x preset, then columns 1..M with J_y)."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    snapped, k = snap_to_loop(tau, drive)
    _check_guard(snapped, spec, trotter_guard)
    slices = []
    for _ in range(cycles):
        slices += _cycle(spec, drive, snapped)
    meta = {
        "seed": seed,
        "tool_version": __version__,
        "kind": "trotter",
        "cycles": cycles,
        "tau_requested_s": float(tau),
        "tau_snapped_s": float(snapped),
        "loops_per_slice": k,
        "tau_relative_change": float((snapped - tau) / tau),
    }
    return Schedule(tuple(slices), replace(drive, k=k), spec, meta, trotter_guard)


def init_flux(logical_bit: int) -> FluxSetting:
    """dc flux of the initialization field: phase 0 for logical 0, pi for logical 1."""
    if logical_bit not in (0, 1):
        raise ValueError("logical_bit must be 0 or 1")
    return FluxSetting.dc(0.0 if logical_bit == 0 else math.pi)


def prep_schedule(logical_bit: int, spec: LatticeSpec, drive: DriveParams, plan: AdiabaticPlan,
                  trotter_guard: float = DEFAULT_TROTTER_GUARD, seed: int = 0) -> Schedule:
    """Ramp from the global x field to the row/column Hamiltonian in ``plan.steps`` steps.

    Step s (midpoint s_mid = (s + 1/2) / steps, lambda = ramp(s_mid)) is a
    global-field slice of weight 1 - lambda followed by one Trotter cycle of
    weight lambda; every slice lasts T_ramp / steps snapped to a closed loop.
    """
    flux0 = init_flux(logical_bit)
    dt, k = snap_to_loop(plan.T_ramp / plan.steps, drive)
    _check_guard(dt, spec, trotter_guard)
    everyone = tuple(range(1, spec.N + 1))
    slices = []
    for s in range(plan.steps):
        lam = ramp((s + 0.5) / plan.steps, plan.shape)
        slices.append(TimeSlice(dt, "global_x", everyone, flux0, 1.0 - lam))
        slices += _cycle(spec, drive, dt, lam)
    meta = {
        "seed": seed,
        "tool_version": __version__,
        "kind": "prep",
        "logical_bit": logical_bit,
        "shape": plan.shape,
        "steps": plan.steps,
        "T_ramp_requested_s": float(plan.T_ramp),
        "step_snapped_s": float(dt),
        "loops_per_slice": k,
        "tau_relative_change": float((dt * plan.steps - plan.T_ramp) / plan.T_ramp),
    }
    return Schedule(tuple(slices), replace(drive, k=k), spec, meta, trotter_guard)


def validate(schedule: Schedule) -> list[str]:
    """List every invariant violation; empty when the schedule is valid."""
    out = []
    spec, drive = schedule.spec, schedule.drive
    chi_max = max(spec.chi_x, spec.chi_y)
    loop = 2 * math.pi / drive.delta
    if not (math.isclose(spec.chi_x, drive.chi, rel_tol=1e-9)
            and math.isclose(spec.chi_y, drive.chi, rel_tol=1e-9)):
        out.append(f"chi mismatch: spec ({spec.chi_x:.6g}, {spec.chi_y:.6g}) vs drive {drive.chi:.6g}")
    row_counts = {i: 0 for i in range(1, spec.M + 1)}
    col_counts = {j: 0 for j in range(1, spec.M + 1)}
    for n, sl in enumerate(schedule.slices):
        where = f"slice {n}"
        if not sl.duration > 0:
            out.append(f"{where}: nonpositive duration")
            continue
        if sl.duration * chi_max > schedule.trotter_guard * (1 + 1e-12):
            out.append(f"{where}: trotter guard (tau*chi = {sl.duration * chi_max:.4g})")
        if not 0.0 <= sl.weight <= 1.0:
            out.append(f"{where}: weight outside [0, 1]")
        kind, idx = sl.kind, sl.index
        if kind in ("row_x", "col_y"):
            axis = "x" if kind == "row_x" else "y"
            if idx is None or not 1 <= idx <= spec.M:
                out.append(f"{where}: intent index out of range")
                continue
            members = row_devices(idx, spec.M) if axis == "x" else col_devices(idx, spec.M)
            (row_counts if axis == "x" else col_counts)[idx] += 1
            if list(sl.devices) != members:
                out.append(f"{where}: membership mismatch for {sl.intent}")
            if sl.flux.mode != "ac":
                out.append(f"{where}: coupling slice needs ac inter-loop flux")
            else:
                pm, pp = coupling_preset(axis)
                if not (math.isclose(math.cos(sl.flux.phi_minus - pm), 1.0, abs_tol=1e-12)
                        and math.isclose(math.cos(2 * (sl.flux.phi_plus - pp)), 1.0, abs_tol=1e-12)):
                    out.append(f"{where}: flux preset does not select {axis}")
                if not math.isclose(sl.flux.omega, drive.omega, rel_tol=1e-12):
                    out.append(f"{where}: ac frequency differs from drive omega")
                k = sl.duration / loop
                if round(k) < 1 or abs(k - round(k)) > CLOSURE_RTOL * max(1.0, k):
                    out.append(f"{where}: geometric closure (duration is {k:.6g} loops)")
        elif kind == "global_x":
            if list(sl.devices) != list(range(1, spec.N + 1)):
                out.append(f"{where}: membership mismatch for global_x")
            if sl.flux.mode != "dc" or sl.flux.phi1 != 0.0 or sl.flux.phi2 != 0.0:
                out.append(f"{where}: global field needs dc flux with phi1 = phi2 = 0")
        elif kind == "idle":
            if sl.devices:
                out.append(f"{where}: idle slice lists active devices")
        else:
            out.append(f"{where}: unknown intent {sl.intent!r}")
    counts = set(row_counts.values()) | set(col_counts.values())
    if len(counts) > 1:
        out.append(f"row/column balance: counts {sorted(counts)}")
    return out


def _to_dict(schedule: Schedule) -> dict:
    spec, drive = schedule.spec, schedule.drive
    return {
        "version": SCHEDULE_VERSION,
        "units": {"time": "s", "angular_frequency": "rad/s", "phase": "rad"},
        "spec": {"M": spec.M, "chi_x": float(spec.chi_x), "chi_y": float(spec.chi_y),
                 "init_field": float(spec.init_field)},
        "drive": {"g": float(drive.g), "E_J": float(drive.E_J), "omega": float(drive.omega),
                  "omega_c": float(drive.omega_c), "delta": float(drive.delta), "k": int(drive.k)},
        "trotter_guard": float(schedule.trotter_guard),
        "slices": [s.to_dict() for s in schedule.slices],
        "metadata": dict(schedule.metadata),
    }


def emit_json(schedule: Schedule) -> bytes:
    """Canonical serialization: fixed key order, repr floats, trailing newline."""
    return (json.dumps(_to_dict(schedule), indent=2) + "\n").encode("utf-8")


def parse_json(raw: bytes | str, check: bool = True) -> Schedule:
    """Inverse of :func:`emit_json`; raises a distinct error per failure kind."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedScheduleError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedScheduleError("top level must be an object")
    if doc.get("version") != SCHEDULE_VERSION:
        raise UnsupportedVersionError(f"unsupported schedule version {doc.get('version')!r}")
    try:
        sp, dr = doc["spec"], doc["drive"]
        spec = LatticeSpec(int(sp["M"]), sp["chi_x"], sp["chi_y"], sp.get("init_field", 1.0))
        drive = DriveParams(g=dr["g"], E_J=dr["E_J"], omega=dr["omega"], omega_c=dr["omega_c"],
                            k=int(dr["k"]))
        if not math.isclose(dr["delta"], drive.delta, rel_tol=1e-12):
            raise MalformedScheduleError("drive.delta disagrees with omega_c - omega")
        slices = [TimeSlice(s["duration_s"], s["intent"], tuple(s["devices"]),
                            FluxSetting.from_dict(s["flux"]), s.get("weight", 1.0))
                  for s in doc["slices"]]
        schedule = Schedule(tuple(slices), drive, spec, dict(doc.get("metadata", {})),
                            doc.get("trotter_guard", DEFAULT_TROTTER_GUARD))
    except MalformedScheduleError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedScheduleError(f"bad schedule field: {exc!r}") from exc
    if check:
        violations = validate(schedule)
        if violations:
            raise ScheduleInvariantError(violations)
    return schedule
