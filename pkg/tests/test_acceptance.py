"""Acceptance suite: ten numbered criteria, one PASS/FAIL line each.

Every test prints ``ACCEPTANCE <n> <PASS|FAIL> <name>: <detail> [elapsed / bound]``
straight to the terminal and then asserts the same condition, so a run of
``pytest tests/test_acceptance.py -s`` or ``-v`` doubles as the report.
Runtime bounds are part of each criterion.
"""

import math
import time

import numpy as np
import pytest

import oracles
from topoqubit.cavity import DriveParams, full_flux_hamiltonian, interaction_hamiltonian
from topoqubit.device import DeviceParams, FluxSetting, charge_hamiltonian
from topoqubit.evolution import propagate, reduced_channel
from topoqubit.experiments import (
    feasibility_run,
    gate_check,
    ld_rwa_audit,
    prep_run,
    protection_run,
    spectrum_run,
    thermal_check,
    trotter_audit,
)
from topoqubit.lattice import LatticeSpec, init_hamiltonian, target_hamiltonian
from topoqubit.quantum import HilbertSpace, QuantumState, hermiticity_defect, partial_trace, thermal_state
from topoqubit.schedule import AdiabaticPlan, emit_json, parse_json, prep_schedule, trotter_schedule


@pytest.fixture
def report(capsys):
    def emit(n, name, ok, detail, start, bound):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < bound
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'} {name}: {detail} "
                  f"[{elapsed:.1f} s / {bound:g} s]")
        assert ok, f"criterion {n} ({name}) failed: {detail}, {elapsed:.1f} s"
    return emit


def test_01_degeneracy(report):
    start = time.perf_counter()
    res = spectrum_run(Ms=(2, 3), degeneracy_tol=1e-9)
    degs = {r["M"]: r["ground_degeneracy"] for r in res.data["runs"]}
    oracle = {M: oracles.degeneracy(oracles.compass_spectrum(M), 1e-9) for M in (2, 3)}
    dims = {r["M"]: r["dim"] for r in res.data["runs"]}
    ok = degs == oracle == {2: 2, 3: 2} and dims == {2: 16, 3: 512}
    report(1, "degeneracy", ok, f"package {degs}, oracle {oracle}, dims {dims}", start, 10)


def test_02_gap_vs_size(report):
    start = time.perf_counter()
    res = spectrum_run(Ms=(2, 3))
    gaps = {r["M"]: r["gap_over_chi"] for r in res.data["runs"]}
    ref = {M: (lambda w: w[2] - w[0])(oracles.compass_spectrum(M)) for M in (2, 3)}
    ok = all(g > 0 for g in gaps.values()) and all(np.isclose(gaps[M], ref[M]) for M in ref)
    report(2, "gap-vs-size", ok, f"gap/chi M=2 {gaps[2]:.5f} | M=3 {gaps[3]:.5f}", start, 10)


def test_03_geometric_gate(report):
    start = time.perf_counter()
    res = gate_check(n_qubits=2, n_max=15, ks=(1, 2), tol=1e-10, threshold=1e-6)
    worst_cf = max(r["distance_closed_form"] for r in res.data["loops"])
    worst_eff = max(r["distance_effective"] for r in res.data["loops"])
    ok = worst_cf <= 1e-6 and worst_eff <= 1e-6
    report(3, "geometric gate", ok,
           f"closed form {worst_cf:.2e}, effective {worst_eff:.2e} "
           f"(n_max used {res.data['n_max_used']})", start, 60)


def test_04_thermal_insensitivity(report):
    start = time.perf_counter()
    res = thermal_check(n_mean=2.0, ks=(1, 2), threshold=1e-6)
    loops = res.data["loops"]
    closed = max(r["closed_loop_distance"] for r in loops)
    ok = closed <= 1e-6 and all(r["open_loop_distance"] > r["closed_loop_distance"] for r in loops)
    opened = ", ".join(f"k={r['k']} {r['open_loop_distance']:.3f}" for r in loops)
    report(4, "thermal insensitivity", ok, f"closed {closed:.2e}, open {opened}", start, 120)


def test_05_trotter_audit(report):
    start = time.perf_counter()
    res = trotter_audit(M=2, tau_chi0=0.05, halvings=2)
    ratios = res.data["halving_ratios"]
    ok = len(ratios) >= 2 and all(3 <= r <= 5 for r in ratios)
    report(5, "trotter audit", ok, "halving ratios " + ", ".join(f"{r:.3f}" for r in ratios), start, 60)


def test_06_preparation(report):
    start = time.perf_counter()
    res = prep_run(M=2, threshold=0.99, sudden_threshold=1e-8)
    d = res.data
    reached = d["T_ramp_reached_s"]
    ok = reached is not None and d["ladder"][-1]["overlap"] >= 0.99 and d["sudden_deviation"] <= 1e-8
    report(6, "preparation", ok,
           f"T_ramp {reached} s (chi=1) overlap {d['ladder'][-1]['overlap']:.6f}, "
           f"sudden deviation {d['sudden_deviation']:.1e}", start, 300)


def test_07_protection(report):
    start = time.perf_counter()
    res = protection_run(Ms=(2, 3), max_weights=(1, 2), eps_chi=(5e-4, 1e-3), samples=2, seed=0)
    runs = {r["M"]: r for r in res.data["runs"]}
    ok = (runs[2]["max_weight"] == 1 and runs[3]["max_weight"] == 2
          and all(r["max_scalar_deviation"] <= 1e-9 and r["min_exponent"] > 1.5 for r in runs.values()))
    detail = "; ".join(f"M={M} w<={r['max_weight']} dev {r['max_scalar_deviation']:.1e} "
                       f"exponent {r['min_exponent']:.3f}" for M, r in runs.items())
    report(7, "protection", ok, detail, start, 300)


def test_08_feasibility(report):
    start = time.perf_counter()
    res = feasibility_run()
    d = res.data["report"]
    ok = (abs(d["tau_c_s"] - 3.2e-6) <= 0.02 * 3.2e-6
          and abs(d["beta_over_2pi_hz"] - 48e6) <= 0.02 * 48e6
          and 0.005 <= d["nonuniformity_infidelity"] <= 0.01)
    report(8, "feasibility", ok,
           f"tau_c {d['tau_c_s'] * 1e6:.3f} us, beta/2pi {d['beta_over_2pi_hz'] / 1e6:.2f} MHz, "
           f"infidelity {100 * d['nonuniformity_infidelity']:.3f}%", start, 1)


def test_09_ld_rwa(report):
    start = time.perf_counter()
    res = ld_rwa_audit(gs=(0.02, 0.01, 0.005))
    inf = [r["infidelity"] for r in res.data["runs"]]
    ok = inf[0] > inf[1] > inf[2]
    report(9, "LD/RWA audit", ok, "infidelity " + ", ".join(f"{x:.2e}" for x in inf), start, 300)


def _invariant_suite(seed: int) -> list[str]:
    """Randomized checks; returns the list of failures (empty means pass)."""
    rng = np.random.default_rng(seed)
    bad = []

    # Hermiticity of every model Hamiltonian on random parameters
    sp = HilbertSpace.qubits(2, n_max=6)
    beta, delta = rng.uniform(0.2, 1.0), rng.uniform(8.0, 12.0)
    drive = DriveParams.from_rates(beta, delta).with_preset(rng.choice(["x", "y"]))
    t = rng.uniform(0.0, 2.0)
    mats = {
        "interaction": interaction_hamiltonian(t, [0, 1], drive, sp).data,
        "full_flux": full_flux_hamiltonian(t, [0, 1], drive, sp).data,
        "target": target_hamiltonian(LatticeSpec(2, *rng.uniform(0.2, 2.0, 2))).data,
        "init": init_hamiltonian(-1, LatticeSpec(2, 1.0, 1.0, rng.uniform(0.2, 2.0))).data,
        "charge": charge_hamiltonian(DeviceParams(10.0, rng.uniform(0.0, 1.0), rng.uniform(0, 1)),
                                     FluxSetting.dc(*rng.uniform(-math.pi, math.pi, 3)), 7).data,
    }
    bad += [f"hermiticity {k}" for k, H in mats.items() if hermiticity_defect(H) > 1e-12]

    # unitarity and norm drift of the propagator on a random drive
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    B = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    A, B = A + A.conj().T, B + B.conj().T
    space6 = HilbertSpace((6,), ("charge",))
    psi = QuantumState.normalized(space6, rng.normal(size=6) + 1j * rng.normal(size=6))
    tol = 1e-9
    res = propagate(lambda s: A + math.sin(3 * s) * B, psi, 0.0, 0.7, tol=tol, return_unitary=True)
    U = res.unitary.data
    if np.max(np.abs(U.conj().T @ U - np.eye(6))) > 1e-8:
        bad.append("unitarity")
    if res.norm_drift > 10 * tol or abs(np.linalg.norm(res.state.data) - 1) > 10 * tol:
        bad.append("norm drift")

    # partial trace and the reduced channel preserve the trace
    big = HilbertSpace.qubits(2, n_max=3)
    G = rng.normal(size=(big.dim, big.dim)) + 1j * rng.normal(size=(big.dim, big.dim))
    rho = QuantumState(big, G @ G.conj().T / np.trace(G @ G.conj().T))
    for keep in ([0], [1], [2], [0, 1]):
        if abs(np.trace(partial_trace(rho, keep).data) - 1) > 1e-12:
            bad.append(f"partial trace keep={keep}")
    Hb = rng.normal(size=(big.dim, big.dim))
    Hb = Hb + Hb.T
    w, V = np.linalg.eigh(Hb)
    ch = reduced_channel((V * np.exp(-1j * w)) @ V.conj().T, thermal_state(1.0, 3), big)
    q = QuantumState.normalized(HilbertSpace.qubits(2), rng.normal(size=4) + 1j * rng.normal(size=4))
    if abs(np.trace(ch(q).data) - 1) > 1e-12:
        bad.append("reduced channel trace")
    return bad


def _round_trip_failures(seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    M = int(rng.integers(1, 4))
    chi = 1.0
    delta = 2 * math.pi * chi / 0.0125
    drive = DriveParams.from_rates(math.sqrt(chi * delta / 4), delta)
    spec = LatticeSpec(M, drive.chi, drive.chi)
    loop = 2 * math.pi / delta
    k = int(rng.integers(1, 5))
    if rng.random() < 0.5:
        s = trotter_schedule(spec, drive, k * loop, int(rng.integers(1, 4)), seed=seed)
    else:
        s = prep_schedule(int(rng.integers(0, 2)), spec, drive, AdiabaticPlan(10 * k * loop, 10), seed=seed)
    raw = emit_json(s)
    return [] if emit_json(parse_json(raw)) == raw else [f"round trip seed {seed}"]


def test_10_plumbing(report):
    start = time.perf_counter()
    failures = []
    for seed in range(20):
        failures += _round_trip_failures(seed)
    for seed in range(5):
        failures += _invariant_suite(seed)
    detail = "20 schedule round trips, 5 invariant suites" + (f"; failures {failures}" if failures else "")
    report(10, "plumbing", not failures, detail, start, 60)
