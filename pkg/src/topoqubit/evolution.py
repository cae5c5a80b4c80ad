"""Time evolution: Schroedinger propagation, Trotterized schedules, adiabatic ramps.

Two independent propagation routes are available:

* ``"dop853"``: adaptive 8th-order Runge-Kutta (scipy), the default.
* ``"magnus4"``: fixed-step fourth-order Magnus exponentials, i.e. a
  piecewise-constant effective Hamiltonian per step.  Unitary by construction.

Every generator must be expressed in a single frame for a whole propagation;
the callers in this package document which frame they use.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .lattice import ground_space, to_sites
from .quantum import (
    HilbertSpace,
    OperatorMatrix,
    QuantumState,
    collective_op,
    eigensolve_hermitian,
    trace_distance,
)
from .schedule import AdiabaticPlan, Schedule, ramp, validate

__all__ = [
    "PropagationError",
    "StepUnderflowError",
    "NormDriftError",
    "PropagationResult",
    "AdiabaticResult",
    "evolve_columns",
    "propagate",
    "propagator",
    "trotter_evolve",
    "adiabatic_evolve",
    "probe_states",
    "reduced_channel",
    "compare_channels",
]

MIN_RTOL = 2.5e-14


class PropagationError(RuntimeError):
    pass


class StepUnderflowError(PropagationError):
    pass


class NormDriftError(PropagationError):
    pass


@dataclass(frozen=True, eq=False)
class PropagationResult:
    state: QuantumState | None
    unitary: OperatorMatrix | None
    n_steps: int
    error_estimate: float | None
    norm_drift: float
    wall_time: float


def _as_matrix_fn(H_of_t):
    def H(t):
        h = H_of_t(t)
        return h.data if isinstance(h, OperatorMatrix) else h
    return H


def _check_tol(tol: float):
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")


def _magnus4(H, Y0, t0, t1, steps):
    h = (t1 - t0) / steps
    c = math.sqrt(3) / 6
    Y = np.array(Y0, dtype=complex)
    for n in range(steps):
        ta = t0 + n * h
        H1 = np.asarray(_dense(H(ta + (0.5 - c) * h)))
        H2 = np.asarray(_dense(H(ta + (0.5 + c) * h)))
        K = 0.5 * h * (H1 + H2) + 1j * (math.sqrt(3) / 12) * h * h * (H1 @ H2 - H2 @ H1)
        w, v = scipy.linalg.eigh(0.5 * (K + K.conj().T))
        Y = v @ (np.exp(-1j * w)[:, None] * (v.conj().T @ Y))
    return Y


def _dense(m):
    return m.toarray() if hasattr(m, "toarray") else m


def _default_steps(H, t0, t1) -> int:
    norm = max(np.linalg.norm(_dense(H(t)), 2) for t in np.linspace(t0, t1, 5))
    return max(100, int(math.ceil(4 * norm * abs(t1 - t0))))


def evolve_columns(H_of_t: Callable, Y0: np.ndarray, t0: float, t1: float, tol: float = 1e-10,
                   method: str = "dop853", steps: int | None = None,
                   t_eval: Sequence[float] | None = None, estimate_error: bool = False):
    """Solve i dY/dt = H(t) Y for a vector or a block of column vectors.

    Returns ``(Y, n_steps, error_estimate, norm_drift)``; with ``t_eval`` the
    first item is a list of solutions at those times.
    """
    _check_tol(tol)
    H = _as_matrix_fn(H_of_t)
    Y0 = np.asarray(Y0, dtype=complex)
    shape = Y0.shape
    d = shape[0]
    m = 1 if Y0.ndim == 1 else shape[1]
    norms0 = np.linalg.norm(Y0.reshape(d, m), axis=0)

    if method == "dop853":
        rtol = max(tol * 1e-2, MIN_RTOL)

        def rhs(t, y):
            return (-1j * (H(t) @ y.reshape(d, m))).ravel()

        sol = solve_ivp(rhs, (t0, t1), Y0.ravel(), method="DOP853", rtol=rtol, atol=rtol * 1e-2,
                        t_eval=None if t_eval is None else sorted(t_eval))
        if sol.status != 0:
            raise StepUnderflowError(sol.message)
        cols = [sol.y[:, j].reshape(shape) for j in range(sol.y.shape[1])]
        n_steps = len(sol.t) if t_eval is None else int(sol.nfev // 12)
        finals = cols if t_eval is not None else [cols[-1]]
        err = None
    elif method == "magnus4":
        n = steps or _default_steps(H, t0, t1)
        if t_eval is None:
            finals = [_magnus4(H, Y0.reshape(d, m), t0, t1, n).reshape(shape)]
        else:
            finals, prev, Y = [], t0, Y0.reshape(d, m)
            for te in sorted(t_eval):
                sub = max(1, round(n * (te - prev) / (t1 - t0)))
                Y = _magnus4(H, Y, prev, te, sub)
                finals.append(Y.reshape(shape))
                prev = te
        n_steps = n
        err = None
        if estimate_error and t_eval is None:
            coarse = _magnus4(H, Y0.reshape(d, m), t0, t1, max(1, n // 2)).reshape(shape)
            err = float(np.max(np.abs(coarse - finals[-1]))) / 15.0
    else:
        raise ValueError(f"unknown method {method!r}")

    drift = max(float(np.max(np.abs(np.linalg.norm(Y.reshape(d, m), axis=0) - norms0)))
                for Y in finals)
    if method == "dop853":
        err = drift
    if drift > 10 * tol:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds 10 * tol = {10 * tol:.1e}")
    return (finals if t_eval is not None else finals[0]), n_steps, err, drift


def propagate(H_of_t: Callable, state: QuantumState, t0: float, t1: float, tol: float = 1e-10,
              method: str = "dop853", steps: int | None = None,
              return_unitary: bool = False) -> PropagationResult:
    """Evolve a pure state under the time-dependent Hermitian generator ``H_of_t``."""
    if not state.is_pure:
        raise ValueError("propagate expects a pure state")
    start = time.perf_counter()
    if return_unitary:
        U, n, err, drift = evolve_columns(H_of_t, np.eye(state.space.dim), t0, t1, tol, method, steps)
        final = U @ state.data
        unitary = OperatorMatrix(state.space, U)
        defect = float(np.max(np.abs(U.conj().T @ U - np.eye(len(U)))))
        if defect > max(1e-8, 100 * tol):
            raise NormDriftError(f"accumulated unitary defect {defect:.3e}")
    else:
        final, n, err, drift = evolve_columns(H_of_t, state.data, t0, t1, tol, method, steps)
        unitary = None
    final = QuantumState.normalized(state.space, final)
    return PropagationResult(final, unitary, n, err, drift, time.perf_counter() - start)


def propagator(H_of_t: Callable, space: HilbertSpace, t0: float, t1: float, tol: float = 1e-10,
               method: str = "dop853", columns: Sequence[int] | None = None,
               t_eval: Sequence[float] | None = None, steps: int | None = None):
    """Columns of U(t1, t0) (all columns unless ``columns`` is given).

    With ``t_eval`` a list of column blocks is returned, one per time.
    """
    eye = np.eye(space.dim, dtype=complex)
    Y0 = eye if columns is None else eye[:, list(columns)]
    Y, _, _, _ = evolve_columns(H_of_t, Y0, t0, t1, tol, method, steps, t_eval)
    return Y


def _slice_key(sl):
    return (sl.kind, sl.index)


def trotter_evolve(schedule: Schedule, state: QuantumState,
                   return_unitary: bool = False) -> PropagationResult:
    """Apply effective-level slice unitaries of a schedule in order.

    Row slice i: exp(+i w chi_x tau (J_x^row)^2); column slice j: likewise
    with chi_y and J_y.  Global-field slice: exp(-i w tau H_field) with
    H_field = -init_field cos(phi) sum sigma^x.  Idle slices do nothing.
    """
    start = time.perf_counter()
    violations = validate(schedule)
    if violations:
        raise ValueError("invalid schedule: " + "; ".join(violations))
    spec = schedule.spec
    space = state.space
    if space.n_qubits != spec.N or space.boson_index is not None or len(space.dims) != spec.N:
        raise ValueError(f"state must live on {spec.N} qubits without a boson factor")
    eig_cache: dict = {}

    def generator(sl):
        key = _slice_key(sl)
        if key not in eig_cache:
            sites = to_sites(sl.devices)
            if sl.kind == "global_x":
                J = collective_op("x", sites, space).data
                eig_cache[key] = scipy.linalg.eigh(J)
            else:
                axis = "x" if sl.kind == "row_x" else "y"
                J = collective_op(axis, sites, space).data
                eig_cache[key] = scipy.linalg.eigh(J @ J)
        return eig_cache[key]

    Y = state.data.copy() if not return_unitary else np.eye(space.dim, dtype=complex)
    for sl in schedule.slices:
        if sl.kind == "idle":
            continue
        w, v = generator(sl)
        if sl.kind == "row_x":
            phases = np.exp(1j * sl.weight * spec.chi_x * sl.duration * w)
        elif sl.kind == "col_y":
            phases = np.exp(1j * sl.weight * spec.chi_y * sl.duration * w)
        else:
            field = -spec.init_field * math.cos(sl.flux.phi)
            phases = np.exp(-1j * sl.weight * sl.duration * field * w)
        if Y.ndim == 1:
            Y = v @ (phases * (v.conj().T @ Y))
        else:
            Y = v @ (phases[:, None] * (v.conj().T @ Y))
    if return_unitary:
        unitary = OperatorMatrix(space, Y)
        final = Y @ state.data
    else:
        unitary, final = None, Y
    drift = abs(float(np.linalg.norm(final)) - 1.0)
    return PropagationResult(QuantumState.normalized(space, final), unitary, len(schedule.slices),
                             None, drift, time.perf_counter() - start)


@dataclass(frozen=True, eq=False)
class AdiabaticResult:
    propagation: PropagationResult
    overlap: float
    lambdas: np.ndarray
    target_overlaps: np.ndarray
    instantaneous_overlaps: np.ndarray

    def to_csv(self) -> str:
        rows = ["lambda,target_ground_overlap,instantaneous_ground_overlap"]
        rows += [f"{lam!r},{a!r},{b!r}" for lam, a, b in
                 zip(self.lambdas.tolist(), self.target_overlaps.tolist(),
                     self.instantaneous_overlaps.tolist())]
        return "\n".join(rows) + "\n"


def _ground_overlap(G: np.ndarray, psi: np.ndarray) -> float:
    return float(np.sum(np.abs(G.conj().T @ psi) ** 2))


def adiabatic_evolve(H_init: OperatorMatrix, H_target: OperatorMatrix, plan: AdiabaticPlan,
                     state0: QuantumState, tol: float = 1e-10,
                     degeneracy_tol: float = 1e-9) -> AdiabaticResult:
    """Propagate under (1 - lambda(t/T)) H_init + lambda(t/T) H_target.

    Reports the final weight in the ground space of ``H_target`` and, at
    ``plan.steps + 1`` equally spaced times, the weights in the target and the
    instantaneous ground spaces.
    """
    A, B = H_init.data, H_target.data
    w0, _ = eigensolve_hermitian(H_init)
    e0 = H_init.expect(state0).real
    if e0 - w0[0] > 1e-9 * max(1.0, w0[-1] - w0[0]):
        raise ValueError("state0 is not a ground state of H_init")
    T = plan.T_ramp

    def H(t):
        lam = ramp(min(max(t / T, 0.0), 1.0), plan.shape)
        return (1.0 - lam) * A + lam * B

    start = time.perf_counter()
    times = np.linspace(0.0, T, plan.steps + 1)
    states, n, _, drift = evolve_columns(H, state0.data, 0.0, T, tol, t_eval=times)
    final = QuantumState.normalized(state0.space, states[-1])
    prop = PropagationResult(final, None, n, drift, drift, time.perf_counter() - start)
    G_target = ground_space(H_target, degeneracy_tol)
    lambdas = np.array([ramp(t / T, plan.shape) for t in times])
    target = np.array([_ground_overlap(G_target, s) for s in states])
    inst = []
    for lam, s in zip(lambdas, states):
        Hl = OperatorMatrix(H_init.space, (1 - lam) * A + lam * B)
        inst.append(_ground_overlap(ground_space(Hl, degeneracy_tol), s))
    return AdiabaticResult(prop, _ground_overlap(G_target, final.data), lambdas, target,
                           np.array(inst))


def probe_states(n_qubits: int, seed: int = 0, n_random: int = 2) -> list[QuantumState]:
    """Six uniform single-qubit-basis product states plus seeded random pure states."""
    space = HilbertSpace.qubits(n_qubits)
    s = 1 / math.sqrt(2)
    basis = [np.array([1, 0]), np.array([0, 1]), np.array([s, s]), np.array([s, -s]),
             np.array([s, 1j * s]), np.array([s, -1j * s])]
    out = []
    for b in basis:
        v = np.array([1.0 + 0j])
        for _ in range(n_qubits):
            v = np.kron(v, b)
        out.append(QuantumState.normalized(space, v))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        out.append(QuantumState.normalized(space, v))
    return out


def reduced_channel(U, env_state: np.ndarray, space: HilbertSpace) -> Callable[[QuantumState], QuantumState]:
    """Map rho_q -> Tr_env[U (rho_q (x) env) U^dag] for qubits listed first in ``space``."""
    U = U.data if isinstance(U, OperatorMatrix) else np.asarray(U)
    nq = space.n_qubits
    if space.qubit_indices != tuple(range(nq)):
        raise ValueError("qubit factors must come first")
    dq = 2 ** nq
    de = space.dim // dq
    env = np.asarray(env_state, dtype=complex)
    if env.ndim == 1:
        env = np.outer(env, env.conj())
    if env.shape != (de, de):
        raise ValueError("environment state does not match the non-qubit factors")
    p, vecs = scipy.linalg.eigh(0.5 * (env + env.conj().T))
    keep = p > 1e-15
    p, vecs = p[keep], vecs[:, keep]
    qspace = space.subspace(range(nq))

    def channel(probe: QuantumState) -> QuantumState:
        if probe.space != qspace:
            raise ValueError("probe does not live on the qubit factors")
        if probe.is_pure:
            pq, vq = np.array([1.0]), probe.data[:, None]
        else:
            pq, vq = scipy.linalg.eigh(probe.data)
            pq, vq = np.clip(pq, 0, None), vq
        rho = np.zeros((dq, dq), dtype=complex)
        for a, va in zip(pq, vq.T):
            if a < 1e-15:
                continue
            inputs = np.kron(va[:, None], vecs)
            out = (U @ inputs).reshape(dq, de, -1)
            rho += a * np.einsum("iek,jek,k->ij", out, out.conj(), p)
        rho = 0.5 * (rho + rho.conj().T)
        return QuantumState(qspace, rho / np.trace(rho).real)

    return channel


def _as_channel(c):
    if callable(c):
        return c
    U = c.data if isinstance(c, OperatorMatrix) else np.asarray(c)

    def channel(probe: QuantumState) -> QuantumState:
        if probe.is_pure:
            return QuantumState.normalized(probe.space, U @ probe.data)
        rho = U @ probe.data @ U.conj().T
        return QuantumState(probe.space, 0.5 * (rho + rho.conj().T))

    return channel


def compare_channels(channel_a, channel_b, probes: Sequence[QuantumState]) -> float:
    """Worst-case trace distance between two channels' outputs over the probes.

    Each channel is a callable state -> state (see :func:`reduced_channel`) or
    a unitary acting directly on the probes' space.
    """
    channel_a, channel_b = _as_channel(channel_a), _as_channel(channel_b)
    worst = 0.0
    for probe in probes:
        worst = max(worst, trace_distance(channel_a(probe), channel_b(probe)))
    return worst
