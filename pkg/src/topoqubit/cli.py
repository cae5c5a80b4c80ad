"""Command-line entry point: ``topoqubit-sim <command> --config <file> [--out <dir>]``.

Exit codes: 0 pass, 1 threshold failure, 2 configuration error, 3 guard or
resource error.  Each command prints a single PASS/FAIL line on stdout and
writes ``<command>.json`` (plus ``<command>_<table>.csv`` for time series)
into the output directory.  Every artifact carries the config hash and the
tool version and no timestamps, so identical configs give identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import warnings
from dataclasses import replace

import numpy as np

from . import __version__, experiments
from .cavity import DriveParams
from .config import ConfigError, RunConfig, load_config, parse_config
from .evolution import PropagationError
from .lattice import DimensionGuardError, LatticeSpec
from .schedule import (
    AdiabaticPlan,
    ScheduleError,
    SnapError,
    TrotterGuardError,
    emit_json,
    parse_json,
    prep_schedule,
    trotter_schedule,
    validate,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3

RUNNERS = {
    "spectrum": experiments.spectrum_run,
    "gate": experiments.gate_check,
    "thermal": experiments.thermal_check,
    "trotter": experiments.trotter_audit,
    "prep": experiments.prep_run,
    "protect": experiments.protection_run,
    "feasibility": experiments.feasibility_run,
}

GUARD_ERRORS = (DimensionGuardError, TrotterGuardError, SnapError, PropagationError,
                MemoryError, RuntimeError)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_atomic(path: str, content: str | bytes):
    """Write via a temporary file in the target directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    data = content.encode() if isinstance(content, str) else content
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _stamp(cfg: RunConfig) -> dict:
    return {"tool_version": __version__, "config_hash": cfg.config_hash()}


def write_result(result: experiments.RunResult, cfg: RunConfig, out_dir: str,
                 warned: list[str]) -> list[str]:
    stamp = _stamp(cfg)
    doc = {**stamp, "config": {"experiment": cfg.experiment, "params": cfg.params},
           "warnings": warned, "result": result.to_dict()}
    paths = [os.path.join(out_dir, f"{cfg.experiment}.json")]
    write_atomic(paths[0], json.dumps(doc, indent=2, default=_json_default) + "\n")
    for name, table in sorted(result.tables.items()):
        path = os.path.join(out_dir, f"{cfg.experiment}_{name}.csv")
        header = f"# tool_version={stamp['tool_version']} config_hash={stamp['config_hash']}\n"
        write_atomic(path, header + table)
        paths.append(path)
    return paths


def _error(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def run_experiment(command: str, config_path: str | None, out: str | None) -> int:
    try:
        cfg = load_config(config_path, command) if config_path else parse_config({}, command)
        kwargs = cfg.kwargs()
    except ConfigError as exc:
        return _error(EXIT_CONFIG, str(exc))
    out_dir = out or cfg.out_dir or "."
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = RUNNERS[command](**kwargs)
        except GUARD_ERRORS as exc:
            return _error(EXIT_GUARD, f"{type(exc).__name__}: {exc}")
        except ValueError as exc:
            return _error(EXIT_CONFIG, f"config key 'params': {exc}")
    warned = [str(w.message) for w in caught]
    for w in warned:
        print(f"warning: {w}", file=sys.stderr)
    write_result(result, cfg, out_dir, warned)
    print(f"{'PASS' if result.passed else 'FAIL'} {command}: {result.summary}")
    return EXIT_PASS if result.passed else EXIT_FAIL


def compile_schedule(spec_path: str, out_path: str) -> int:
    try:
        cfg = load_config(spec_path, "schedule")
        kw = cfg.kwargs()
        if kw["kind"] == "trotter" and kw["tau"] is None:
            raise ConfigError("params.tau_s", "required for kind 'trotter'")
        if kw["kind"] == "prep" and kw["T_ramp"] is None:
            raise ConfigError("params.T_ramp_s", "required for kind 'prep'")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            drive = DriveParams.from_rates(kw["beta"], kw["delta"], g=kw["g"],
                                           omega_over_delta=kw["omega_over_delta"])
        spec = LatticeSpec(kw["M"], drive.chi, drive.chi, kw["init_field"])
    except ConfigError as exc:
        return _error(EXIT_CONFIG, str(exc))
    except ValueError as exc:
        return _error(EXIT_CONFIG, f"config key 'params': {exc}")
    try:
        if kw["kind"] == "trotter":
            sched = trotter_schedule(spec, drive, kw["tau"], kw["cycles"], kw["trotter_guard"], kw["seed"])
        else:
            plan = AdiabaticPlan(kw["T_ramp"], kw["steps"], kw["shape"])
            sched = prep_schedule(kw["logical_bit"], spec, drive, plan, kw["trotter_guard"], kw["seed"])
    except (TrotterGuardError, SnapError) as exc:
        return _error(EXIT_GUARD, f"{type(exc).__name__}: {exc}")
    sched = replace(sched, metadata={**sched.metadata, "config_hash": cfg.config_hash()})
    problems = validate(sched)
    if problems:
        print("FAIL schedule compile: " + "; ".join(problems))
        return EXIT_FAIL
    write_atomic(out_path, emit_json(sched))
    print(f"PASS schedule compile: {len(sched.slices)} slices, "
          f"total {sched.total_duration:.6g} s -> {out_path}")
    return EXIT_PASS


def validate_schedule(path: str) -> int:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        sched = parse_json(raw, check=False)
    except FileNotFoundError:
        return _error(EXIT_CONFIG, f"schedule file not found: {path}")
    except ScheduleError as exc:
        return _error(EXIT_CONFIG, str(exc))
    problems = validate(sched)
    if problems:
        print(f"FAIL schedule validate: {len(problems)} violation(s): " + "; ".join(problems))
        return EXIT_FAIL
    print(f"PASS schedule validate: {len(sched.slices)} slices, total {sched.total_duration:.6g} s")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoqubit-sim",
                                     description="Simulator for flux-driven charge-qubit lattices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON run configuration (defaults if omitted)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
    sched = sub.add_parser("schedule", help="compile or validate flux schedules")
    ssub = sched.add_subparsers(dest="action", required=True)
    comp = ssub.add_parser("compile", help="compile a schedule from a spec file")
    comp.add_argument("--spec", required=True, help="JSON schedule spec")
    comp.add_argument("--out", required=True, help="schedule JSON to write")
    val = ssub.add_parser("validate", help="check a schedule file against its invariants")
    val.add_argument("schedule", help="schedule JSON file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schedule":
        if args.action == "compile":
            return compile_schedule(args.spec, args.out)
        return validate_schedule(args.schedule)
    return run_experiment(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
