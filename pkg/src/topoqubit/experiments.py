"""Reproducible experiment runners shared by the CLI, the demos and the tests.

Each runner takes plain numbers and returns a :class:`RunResult`: a pass
flag, a one-line summary and JSON-ready data (no wall-clock values, so that
identical inputs give identical artifacts).  Time series are attached as CSV
text in ``tables``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cavity import (
    DriveParams,
    closed_form_propagator,
    effective_hamiltonian,
    full_flux_generator,
    interaction_generator,
)
from .device import FeasibilityParams, feasibility_report
from .evolution import (
    adiabatic_evolve,
    compare_channels,
    evolve_columns,
    probe_states,
    reduced_channel,
    trotter_evolve,
)
from .lattice import (
    LatticeSpec,
    ground_space,
    init_hamiltonian,
    protection_diagnostic,
    spectrum,
    target_hamiltonian,
)
from .quantum import (
    HilbertSpace,
    QuantumState,
    coherent_state,
    converge_in_fock,
    expm_i,
    fidelity,
    fock_state,
    thermal_state,
)
from .schedule import DEFAULT_TROTTER_GUARD, AdiabaticPlan, trotter_schedule

__all__ = [
    "RunResult",
    "spectrum_run",
    "gate_check",
    "thermal_check",
    "trotter_audit",
    "prep_run",
    "protection_run",
    "feasibility_run",
    "ld_rwa_audit",
    "effective_vs_exact",
]


@dataclass
class RunResult:
    name: str
    passed: bool
    summary: str
    data: dict
    tables: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"experiment": self.name, "passed": self.passed, "summary": self.summary, **self.data}


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _fock_index(space: HilbertSpace) -> np.ndarray:
    """Fock number of every basis index (boson factor is last)."""
    return np.arange(space.dim) % (space.n_max + 1)


# ---------------------------------------------------------------- lattice

def spectrum_run(Ms: Sequence[int] = (2, 3), chi_x: float = 1.0, chi_y: float = 1.0,
                 degeneracy_tol: float = 1e-9, expected_degeneracy: int = 2) -> RunResult:
    """Ground multiplet and gap of the row/column Hamiltonian for each M."""
    per_M, ok = [], True
    for M in Ms:
        spec = LatticeSpec(M, chi_x, chi_y)
        rep = spectrum(target_hamiltonian(spec), degeneracy_tol)
        if rep.gap == 0.0:
            warnings.warn(f"M={M}: spectrum is fully degenerate, gap reported as 0", stacklevel=2)
        chi = max(chi_x, chi_y)
        entry = {"M": M, "dim": 2 ** spec.N, **rep.to_dict(), "gap_over_chi": rep.gap / chi}
        ok &= rep.ground_degeneracy == expected_degeneracy and rep.gap > 0
        per_M.append(entry)
    summary = ", ".join(f"M={e['M']}: degeneracy {e['ground_degeneracy']}, gap/chi {e['gap_over_chi']:.6g}"
                        for e in per_M)
    rows = [(e["M"], k, ev) for e in per_M for k, ev in enumerate(e["eigenvalues"])]
    return RunResult("spectrum", bool(ok), summary, {"runs": per_M},
                     {"eigenvalues": _csv(["M", "index", "eigenvalue_rad_per_s"], rows)})


# ---------------------------------------------------------------- gate

def gate_check(beta: float = 1.0, delta: float = 10.0, n_qubits: int = 2, n_max: int = 15,
               ks: Sequence[int] = (1, 2), axis: str = "x", tol: float = 1e-10,
               threshold: float = 1e-6, fock_probe: int = 5, magnus_steps_per_loop: int = 400,
               converge_tol: float = 1e-6, pad: int = 30) -> RunResult:
    """Integrate the drive-level interaction over closed loops t = 2 pi k / delta.

    The numerical propagator is compared on the columns with Fock number
    <= ``fock_probe`` (and on coherent alpha = 1 inputs) against the closed
    form, against exp(i chi t J^2) (x) 1, and against the Magnus-4 stepper.
    The Fock cutoff starts at ``n_max`` and is raised in steps of 5 until the
    low-Fock block moves by less than ``converge_tol``.
    """
    drive = DriveParams.from_rates(beta, delta).with_preset(axis)
    devices = list(range(n_qubits))
    ks = sorted(ks)
    times = [2 * math.pi * k / drive.delta for k in ks]
    cache: dict[int, tuple] = {}

    def inputs(space):
        fock = _fock_index(space)
        cols = np.flatnonzero(fock <= fock_probe)
        eye = np.eye(space.dim, dtype=complex)
        coh = coherent_state(1.0, space.n_max)
        extra = [np.kron(eye[:2 ** n_qubits, q], coh) for q in range(2 ** n_qubits)]
        return np.column_stack([eye[:, cols]] + extra), len(cols)

    def numeric(n):
        if n not in cache:
            space = HilbertSpace.qubits(n_qubits, n)
            Y0, n_cols = inputs(space)
            Ys, n_steps, _, drift = evolve_columns(interaction_generator(devices, drive, space), Y0,
                                                   0.0, times[-1], tol, t_eval=times)
            cache[n] = (space, Y0, n_cols, Ys, n_steps, drift)
        return cache[n]

    def low_block(n):
        space, _, n_cols, Ys, _, _ = numeric(n)
        rows = np.flatnonzero(_fock_index(space) <= n_max)
        return np.stack([Y[rows, :n_cols] for Y in Ys])

    _, n_used = converge_in_fock(low_block, n_max, tol=converge_tol)
    space, Y0, n_cols, Ys, n_steps, drift = numeric(n_used)
    U_eff_gen = effective_hamiltonian(axis, devices, drive.chi, space)
    H = interaction_generator(devices, drive, space)

    per_k, ok = [], True
    for k, t, Y in zip(ks, times, Ys):
        Ucf = closed_form_propagator(axis, devices, drive, t, space, pad).data
        Ueff = expm_i(U_eff_gen, t).data
        Ym, _, _, _ = evolve_columns(H, Y0, 0.0, t, tol, method="magnus4",
                                     steps=magnus_steps_per_loop * k)
        ref_cf, ref_eff = Ucf @ Y0, Ueff @ Y0
        entry = {
            "k": k,
            "t_s": t,
            "distance_closed_form": float(np.linalg.norm(Y[:, :n_cols] - ref_cf[:, :n_cols], 2)),
            "distance_effective": float(np.linalg.norm(Y[:, :n_cols] - ref_eff[:, :n_cols], 2)),
            "distance_magnus4": float(np.linalg.norm(Y[:, :n_cols] - Ym[:, :n_cols], 2)),
            "coherent_input_distance": float(np.max(np.linalg.norm(Y[:, n_cols:] - ref_cf[:, n_cols:], axis=0))),
        }
        ok &= all(entry[key] <= threshold for key in
                  ("distance_closed_form", "distance_effective", "distance_magnus4",
                   "coherent_input_distance"))
        per_k.append(entry)
    worst = max(max(e["distance_closed_form"], e["distance_effective"]) for e in per_k)
    data = {
        "beta_rad_per_s": drive.beta, "delta_rad_per_s": drive.delta, "chi_rad_per_s": drive.chi,
        "axis": axis, "n_qubits": n_qubits, "n_max_requested": n_max, "n_max_used": n_used,
        "tol": tol, "threshold": threshold, "fock_probe": fock_probe,
        "dop853_steps": n_steps, "norm_drift": drift, "loops": per_k,
    }
    summary = f"worst operator distance {worst:.3e} (threshold {threshold:g}, n_max used {n_used})"
    return RunResult("gate", bool(ok), summary, data)


def thermal_check(beta: float = 1.0, delta: float = 10.0, n_qubits: int = 2, n_mean: float = 2.0,
                  ks: Sequence[int] = (1, 2), axis: str = "x", n_max: int = 60, tol: float = 1e-10,
                  threshold: float = 1e-6, seed: int = 0, converge_tol: float = 1e-6) -> RunResult:
    """Qubit output maps for a vacuum vs a thermal cavity, at closed and open loops.

    Closed loops are t = 2 pi k / delta; the open-loop contrast is taken at
    the midpoint of the k-th loop, t = (2k - 1) pi / delta.
    """
    drive = DriveParams.from_rates(beta, delta).with_preset(axis)
    devices = list(range(n_qubits))
    ks = sorted(ks)
    closed = [2 * math.pi * k / drive.delta for k in ks]
    opened = [(2 * k - 1) * math.pi / drive.delta for k in ks]
    times = sorted(set(closed + opened))
    probes = probe_states(n_qubits, seed=seed)

    def run(n):
        space = HilbertSpace.qubits(n_qubits, n)
        H = interaction_generator(devices, drive, space, sparse=True)
        Us, _, _, _ = evolve_columns(H, np.eye(space.dim, dtype=complex), 0.0, times[-1], tol,
                                     t_eval=times)
        vac, th = fock_state(0, n), thermal_state(n_mean, n)
        dist = {t: compare_channels(reduced_channel(U, vac, space), reduced_channel(U, th, space), probes)
                for t, U in zip(times, Us)}
        return np.array([dist[t] for t in closed] + [dist[t] for t in opened])

    values, n_used = converge_in_fock(run, n_max, tol=converge_tol)
    per_k, ok = [], True
    for i, k in enumerate(ks):
        c, o = float(values[i]), float(values[len(ks) + i])
        entry = {"k": k, "t_closed_s": closed[i], "t_open_s": opened[i],
                 "closed_loop_distance": c, "open_loop_distance": o}
        ok &= c <= threshold and o > c
        per_k.append(entry)
    worst = max(e["closed_loop_distance"] for e in per_k)
    data = {"beta_rad_per_s": drive.beta, "delta_rad_per_s": drive.delta, "n_mean": n_mean,
            "n_max_requested": n_max, "n_max_used": n_used, "tol": tol, "threshold": threshold,
            "seed": seed, "n_probes": len(probes), "loops": per_k}
    summary = (f"closed-loop worst trace distance {worst:.3e} (threshold {threshold:g}); "
               f"open-loop min {min(e['open_loop_distance'] for e in per_k):.3e}")
    return RunResult("thermal", bool(ok), summary, data)


# ---------------------------------------------------------------- trotter

def trotter_audit(M: int = 2, chi: float = 1.0, tau_chi0: float = 0.05, halvings: int = 2,
                  cycles0: int = 1, seed: int = 0, ratio_bounds: tuple[float, float] = (3.0, 5.0),
                  trotter_guard: float = DEFAULT_TROTTER_GUARD,
                  omega_over_delta: float = 100.0) -> RunResult:
    """Alternating row/column slices against exp(-i H_target t) at fixed total coupling time.

    The drive is chosen so that one closed loop has tau chi = tau_chi0 / 2^halvings,
    so every rung tau chi = tau_chi0 / 2^h is a whole number of loops.
    """
    loop_tau_chi = tau_chi0 / 2 ** halvings
    delta = 2 * math.pi * chi / loop_tau_chi
    beta = math.sqrt(chi * delta / 4.0)
    drive = DriveParams.from_rates(beta, delta, omega_over_delta=omega_over_delta)
    spec = LatticeSpec(M, drive.chi, drive.chi)
    space = spec.space()
    rng = np.random.default_rng(seed)
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    psi0 = QuantumState.normalized(space, v)
    H = target_hamiltonian(spec)

    rungs = []
    for h in range(halvings + 1):
        tau = tau_chi0 / 2 ** h / drive.chi
        cycles = cycles0 * 2 ** h
        sched = trotter_schedule(spec, drive, tau, cycles, trotter_guard, seed)
        out = trotter_evolve(sched, psi0).state
        total = cycles * sched.slices[0].duration
        exact = QuantumState.normalized(space, expm_i(H, total).data @ psi0.data)
        rungs.append({"tau_s": sched.slices[0].duration, "tau_chi": sched.slices[0].duration * drive.chi,
                      "cycles": cycles, "loops_per_slice": sched.metadata["loops_per_slice"],
                      "total_coupling_time_s": total, "infidelity": 1.0 - fidelity(out, exact)})
    ratios = [rungs[i]["infidelity"] / rungs[i + 1]["infidelity"] for i in range(halvings)]
    lo, hi = ratio_bounds
    ok = len(ratios) >= 2 and all(lo <= r <= hi for r in ratios)
    data = {"M": M, "chi_rad_per_s": drive.chi, "delta_rad_per_s": drive.delta,
            "beta_rad_per_s": drive.beta, "seed": seed, "ratio_bounds": list(ratio_bounds),
            "rungs": rungs, "halving_ratios": ratios}
    summary = "halving ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f" (accept [{lo:g}, {hi:g}])"
    table = _csv(["tau_s", "tau_chi", "cycles", "infidelity"],
                 [(r["tau_s"], r["tau_chi"], r["cycles"], r["infidelity"]) for r in rungs])
    return RunResult("trotter", bool(ok), summary, data, {"infidelity_vs_tau": table})


# ---------------------------------------------------------------- preparation

def prep_run(M: int = 2, chi: float = 1.0, init_field: float = 1.0, logical_bit: int = 0,
             T0_chi: float = 1.0, max_doublings: int = 12, threshold: float = 0.99,
             steps: int = 50, shape: str = "smoothstep", tol: float = 1e-10,
             sudden_T_chi: float = 1e-9, sudden_threshold: float = 1e-8,
             monotone_tol: float = 1e-3) -> RunResult:
    """Doubling ladder of ramp times from the initialization field to the lattice Hamiltonian."""
    spec = LatticeSpec(M, chi, chi, init_field)
    H1 = init_hamiltonian(-1 if logical_bit == 0 else 1, spec)
    Ht = target_hamiltonian(spec)
    s = 1 / math.sqrt(2)
    local = np.array([s, s]) if logical_bit == 0 else np.array([s, -s])
    v = np.array([1.0 + 0j])
    for _ in range(spec.N):
        v = np.kron(v, local)
    psi0 = QuantumState(spec.space(), v)
    G = ground_space(Ht)
    static = float(np.sum(np.abs(G.conj().T @ psi0.data) ** 2))

    sudden = adiabatic_evolve(H1, Ht, AdiabaticPlan(sudden_T_chi / chi, steps, shape), psi0, tol)
    sudden_dev = abs(sudden.overlap - static)

    ladder, reached, last = [], None, None
    T = T0_chi / chi
    for _ in range(max_doublings + 1):
        res = adiabatic_evolve(H1, Ht, AdiabaticPlan(T, steps, shape), psi0, tol)
        ladder.append({"T_ramp_s": T, "T_ramp_chi": T * chi, "overlap": res.overlap})
        last = res
        if res.overlap >= threshold:
            reached = T
            break
        T *= 2
    overlaps = [r["overlap"] for r in ladder]
    monotone = all(b >= a - monotone_tol for a, b in zip(overlaps, overlaps[1:]))
    ok = reached is not None and sudden_dev <= sudden_threshold
    data = {"M": M, "chi_rad_per_s": chi, "init_field_rad_per_s": init_field,
            "logical_bit": logical_bit, "shape": shape, "steps": steps, "threshold": threshold,
            "static_projection": static, "sudden_overlap": sudden.overlap,
            "sudden_deviation": sudden_dev, "sudden_threshold": sudden_threshold,
            "ladder": ladder, "T_ramp_reached_s": reached, "monotone_within_tol": monotone}
    tables = {"ladder": _csv(["T_ramp_s", "overlap"], [(r["T_ramp_s"], r["overlap"]) for r in ladder])}
    if last is not None:
        tables["overlap_vs_lambda"] = last.to_csv()
    reach = "not reached" if reached is None else f"T_ramp chi = {reached * chi:g}"
    summary = (f"overlap {overlaps[-1]:.6f} ({reach}, threshold {threshold:g}); "
               f"sudden deviation {sudden_dev:.2e}")
    return RunResult("prep", bool(ok), summary, data, tables)


# ---------------------------------------------------------------- protection

def protection_run(Ms: Sequence[int] = (2, 3), chi: float = 1.0, max_weights: Sequence[int] = (1, 2),
                   eps_chi: Sequence[float] = (5e-4, 1e-3), samples: int = 2, seed: int = 0,
                   axes: Sequence[str] = ("x", "y", "z"), scalar_threshold: float = 1e-9,
                   exponent_threshold: float = 1.5) -> RunResult:
    """Pauli-scalar checks on the ground doublet and splitting-vs-field exponents."""
    if len(max_weights) != len(Ms):
        raise ValueError("max_weights needs one entry per M")
    runs, ok = [], True
    for M, w in zip(Ms, max_weights):
        spec = LatticeSpec(M, chi, chi)
        rep = protection_diagnostic(target_hamiltonian(spec), w, [e * chi for e in eps_chi],
                                    samples=samples, seed=seed, axes=axes)
        d = rep.to_dict()
        d.pop("checks")
        runs.append({"M": M, "max_weight": w, "n_strings": len(rep.checks), **d})
        ok &= rep.max_deviation <= scalar_threshold and rep.min_exponent > exponent_threshold
    summary = "; ".join(f"M={r['M']}: max |POP - cP| {r['max_scalar_deviation']:.2e}, "
                        f"min exponent {r['min_exponent']:.3f}" for r in runs)
    data = {"chi_rad_per_s": chi, "scalar_threshold": scalar_threshold,
            "exponent_threshold": exponent_threshold, "runs": runs}
    return RunResult("protect", bool(ok), summary, data)


# ---------------------------------------------------------------- feasibility

def feasibility_run(fp: FeasibilityParams | None = None, tau_c_target_s: float = 3.2e-6,
                    beta_target_hz: float = 48e6, rel_tol: float = 0.02,
                    infidelity_range: tuple[float, float] = (0.005, 0.01)) -> RunResult:
    fp = fp or FeasibilityParams.benchmark_defaults()
    rep = feasibility_report(fp)
    d = rep.to_dict()
    beta_hz = d["beta_over_2pi_hz"]
    checks = {
        "tau_c": abs(d["tau_c_s"] - tau_c_target_s) <= rel_tol * tau_c_target_s,
        "beta": abs(beta_hz - beta_target_hz) <= rel_tol * beta_target_hz,
        "infidelity": infidelity_range[0] <= d["nonuniformity_infidelity"] <= infidelity_range[1],
    }
    data = {"report": d, "text": rep.text(), "checks": checks, "targets": {
        "tau_c_s": tau_c_target_s, "beta_hz": beta_target_hz, "rel_tol": rel_tol,
        "infidelity_range": list(infidelity_range)}}
    summary = (f"tau_c {d['tau_c_s'] * 1e6:.3f} us, beta/2pi {beta_hz / 1e6:.2f} MHz, "
               f"infidelity {d['nonuniformity_infidelity'] * 100:.3f} %")
    return RunResult("feasibility", all(checks.values()), summary, data)


# ---------------------------------------------------------------- approximation audits

def ld_rwa_audit(gs: Sequence[float] = (0.02, 0.01, 0.005), E_J: float = 20.0, delta: float = 1.0,
                 omega_over_delta: int = 100, n_max: int = 15, axis: str = "x",
                 tol: float = 1e-10) -> RunResult:
    """Unexpanded junction cosines vs the linearized rotating-wave interaction.

    One device, cavity vacuum, qubit in |0>, both propagated in the frame
    rotating at omega_c and compared after one loop t = 2 pi / delta.  With
    E_J and delta fixed, beta = g E_J / 2 shrinks with g.
    """
    omega = omega_over_delta * delta
    t = 2 * math.pi / delta
    rows = []
    for g in gs:
        drive = DriveParams(g=g, E_J=E_J, omega=omega, omega_c=omega + delta).with_preset(axis)
        space = HilbertSpace.qubits(1, n_max)
        psi0 = np.zeros(space.dim, dtype=complex)
        psi0[0] = 1.0
        full, n_full, _, _ = evolve_columns(full_flux_generator([0], drive, space), psi0, 0.0, t, tol)
        rwa, _, _, _ = evolve_columns(interaction_generator([0], drive, space), psi0, 0.0, t, tol)
        overlap = abs(np.vdot(rwa, full)) ** 2 / (np.vdot(rwa, rwa).real * np.vdot(full, full).real)
        rows.append({"g": g, "beta_rad_per_s": drive.beta, "infidelity": float(1.0 - overlap),
                     "steps_full": n_full})
    inf = [r["infidelity"] for r in rows]
    ok = all(b < a for a, b in zip(inf, inf[1:]))
    summary = "infidelity " + ", ".join(f"g={r['g']:g}: {r['infidelity']:.3e}" for r in rows)
    data = {"E_J_rad_per_s": E_J, "delta_rad_per_s": delta, "omega_rad_per_s": omega,
            "n_max": n_max, "tol": tol, "runs": rows}
    return RunResult("ld_rwa", bool(ok), summary, data,
                     {"infidelity_vs_g": _csv(["g", "infidelity"], [(r["g"], r["infidelity"]) for r in rows])})


def effective_vs_exact(ratios: Sequence[float] = (5, 10, 20), chi: float = 1.0,
                       chi_t: float = math.pi / 2, n_qubits: int = 2, n_max: int = 15,
                       axis: str = "x", grid: int = 200, seed: int = 0) -> RunResult:
    """Worst qubit-output infidelity of exp(i chi t J^2) against the exact drive dynamics.

    Exact dynamics is the closed-form propagator with the cavity in vacuum and
    traced out.  At loop closures the two coincide, so the metric is the
    maximum over a uniform grid of times in (0, T] with chi T = ``chi_t``.
    """
    devices = list(range(n_qubits))
    space = HilbertSpace.qubits(n_qubits, n_max)
    probes = probe_states(n_qubits, seed=seed)
    vac = fock_state(0, n_max)
    T = chi_t / chi
    rows = []
    for r in ratios:
        delta = chi * r * r / 4.0
        drive = DriveParams.from_rates(delta / r, delta).with_preset(axis)
        Heff = effective_hamiltonian(axis, devices, drive.chi, space.subspace(range(n_qubits)))
        worst = 0.0
        for t in np.linspace(0.0, T, grid + 1)[1:]:
            exact = reduced_channel(closed_form_propagator(axis, devices, drive, t, space), vac, space)
            Ue = expm_i(Heff, t).data
            for p in probes:
                ideal = QuantumState.normalized(p.space, Ue @ p.data)
                worst = max(worst, 1.0 - fidelity(exact(p), ideal))
        rows.append({"delta_over_beta": r, "delta_rad_per_s": delta, "max_infidelity": worst})
    inf = [x["max_infidelity"] for x in rows]
    ok = all(b < a for a, b in zip(inf, inf[1:]))
    summary = "max infidelity " + ", ".join(f"delta/beta={x['delta_over_beta']:g}: "
                                            f"{x['max_infidelity']:.3e}" for x in rows)
    data = {"chi_rad_per_s": chi, "chi_t": chi_t, "grid": grid, "n_max": n_max, "runs": rows}
    return RunResult("effective_vs_exact", bool(ok), summary, data)
