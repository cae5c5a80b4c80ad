"""Two-SQUID charge device: charge-basis and two-level Hamiltonians.

The device is a Cooper-pair box shared by two SQUIDs (four junctions).  Three
flux loops fix the junction phases relative to each other::

    phi^1 - phi^2 = 2 phi1,   phi^2 - phi^3 = 2 phi,   phi^3 - phi^4 = 2 phi2

and the mean junction phase is the variable conjugate to the Cooper-pair
number.  Offsets of the individual junctions from that mean are fixed in the
symmetric gauge (offsets sum to zero), see :func:`junction_offsets`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .quantum import PAULI, HilbertSpace, OperatorMatrix, eigensolve_hermitian

__all__ = [
    "DeviceParams",
    "FluxSetting",
    "TwoLevelParams",
    "FeasibilityParams",
    "FeasibilityReport",
    "junction_offsets",
    "tunneling_phasor",
    "charge_hamiltonian",
    "two_level_params",
    "two_level_hamiltonian",
    "reduction_consistency_check",
    "feasibility_report",
]


@dataclass(frozen=True)
class DeviceParams:
    """Charging energy ``E_c``, per-junction ``E_J`` (rad/s) and gate charge ``n_bar``."""

    E_c: float
    E_J: float
    n_bar: float = 0.5

    def __post_init__(self):
        if self.E_c <= 0:
            raise ValueError("E_c must be positive")
        # E_J = 0 is kept as the diagonal (uncoupled) limit
        if self.E_J < 0:
            raise ValueError("E_J must be non-negative")
        if not 0.0 <= self.n_bar <= 1.0:
            raise ValueError("n_bar must lie in [0, 1]")
        if self.E_c < 5 * self.E_J:
            warnings.warn("E_c < 5 E_J: outside the charge regime", stacklevel=2)

    @property
    def E_ce(self) -> float:
        return 2.0 * self.E_c * (1.0 - 2.0 * self.n_bar)


@dataclass(frozen=True)
class FluxSetting:
    """Flux program of one device.

    ``phi1``/``phi2`` are the dc phases of the two SQUID loops.  The inter-SQUID
    loop is either dc with phase ``phi`` or ac with phase ``omega * t``.
    """

    phi1: float = 0.0
    phi2: float = 0.0
    mode: Literal["dc", "ac"] = "dc"
    phi: float = 0.0
    omega: float | None = None

    def __post_init__(self):
        if self.mode not in ("dc", "ac"):
            raise ValueError(f"flux mode must be 'dc' or 'ac', got {self.mode!r}")
        if self.mode == "ac" and (self.omega is None or self.omega <= 0):
            raise ValueError("ac flux needs a positive drive frequency omega")

    @classmethod
    def dc(cls, phi: float, phi1: float = 0.0, phi2: float = 0.0) -> "FluxSetting":
        return cls(phi1=phi1, phi2=phi2, mode="dc", phi=phi)

    @classmethod
    def ac(cls, omega: float, phi_minus: float, phi_plus: float) -> "FluxSetting":
        return cls(phi1=phi_plus + phi_minus, phi2=phi_plus - phi_minus, mode="ac", omega=omega)

    @property
    def phi_plus(self) -> float:
        return 0.5 * (self.phi1 + self.phi2)

    @property
    def phi_minus(self) -> float:
        return 0.5 * (self.phi1 - self.phi2)

    def to_dict(self) -> dict:
        inter = {"mode": self.mode}
        if self.mode == "dc":
            inter["phi"] = float(self.phi)
        else:
            inter["omega"] = float(self.omega)
        return {"phi1": float(self.phi1), "phi2": float(self.phi2), "inter": inter}

    @classmethod
    def from_dict(cls, d: dict) -> "FluxSetting":
        inter = d["inter"]
        if inter["mode"] == "dc":
            return cls.dc(inter["phi"], d["phi1"], d["phi2"])
        if inter["mode"] == "ac":
            return cls(phi1=d["phi1"], phi2=d["phi2"], mode="ac", omega=inter["omega"])
        raise ValueError(f"unknown inter-loop mode {inter['mode']!r}")


@dataclass(frozen=True)
class TwoLevelParams:
    E_ce: float
    E_Phi: float


def junction_offsets(phi: float, phi1: float = 0.0, phi2: float = 0.0) -> np.ndarray:
    """Phase offsets of junctions 1..4 from the mean phase, symmetric gauge."""
    p_plus, p_minus = 0.5 * (phi1 + phi2), 0.5 * (phi1 - phi2)
    return np.array([
        phi + 2 * p_plus + p_minus,
        phi - p_minus,
        -phi - p_minus,
        -phi - 2 * p_plus + p_minus,
    ])


def tunneling_phasor(phi: float, phi1: float = 0.0, phi2: float = 0.0,
                     gauge_shift: float = 0.0) -> complex:
    """Sum of the four junction phasors; the |n> -> |n+1> amplitude is -E_J/2 times this."""
    return complex(np.sum(np.exp(1j * (junction_offsets(phi, phi1, phi2) + gauge_shift))))


def charge_hamiltonian(params: DeviceParams, flux: FluxSetting, n_charges: int = 5,
                       gauge_shift: float = 0.0) -> OperatorMatrix:
    """E_c (n - n_bar)^2 - E_J sum_l cos(phi^l) in the charge basis.

    The basis runs over n = -K..K with ``n_charges = 2K + 1``.  ``gauge_shift``
    moves all four junction offsets by a common constant, which is a diagonal
    unitary in the charge basis.
    """
    if flux.mode != "dc":
        raise ValueError("charge_hamiltonian needs a dc flux setting")
    if n_charges < 3 or n_charges % 2 == 0:
        raise ValueError("n_charges must be odd and >= 3")
    k = n_charges // 2
    n = np.arange(-k, k + 1)
    H = np.diag(params.E_c * (n - params.n_bar) ** 2).astype(complex)
    amp = -0.5 * params.E_J * tunneling_phasor(flux.phi, flux.phi1, flux.phi2, gauge_shift)
    idx = np.arange(n_charges - 1)
    H[idx + 1, idx] = amp
    H[idx, idx + 1] = np.conj(amp)
    return OperatorMatrix(HilbertSpace((n_charges,), ("charge",)), H, hermitian=True)


def two_level_params(params: DeviceParams, flux: FluxSetting) -> TwoLevelParams:
    if flux.mode != "dc":
        raise ValueError("two-level reduction needs a dc flux setting")
    if flux.phi1 != 0.0 or flux.phi2 != 0.0:
        raise ValueError("two-level reduction only holds for phi1 = phi2 = 0; use charge_hamiltonian")
    return TwoLevelParams(E_ce=params.E_ce, E_Phi=params.E_J * math.cos(flux.phi))


def two_level_hamiltonian(params: DeviceParams, flux: FluxSetting) -> OperatorMatrix:
    """-E_ce sigma^z - 2 E_Phi sigma^x with E_ce = 2E_c(1 - 2 n_bar), E_Phi = E_J cos(phi)."""
    tl = two_level_params(params, flux)
    H = -tl.E_ce * PAULI["z"] - 2.0 * tl.E_Phi * PAULI["x"]
    return OperatorMatrix(HilbertSpace.qubits(1), H, hermitian=True)


def reduction_consistency_check(params: DeviceParams, flux: FluxSetting,
                                n_charges: int = 5) -> float:
    """Largest gap between the two lowest charge levels and the two-level spectrum.

    Both pairs are centred on their mean before comparing.  Projecting
    E_c (n - n_bar)^2 onto {|0>, |1>} gives a sigma^z splitting of
    E_c (1 - 2 n_bar) / 2, which is the two-level formula evaluated at E_c / 4;
    the comparison is made against that two-level Hamiltonian.
    """
    if not 0.3 < params.n_bar < 0.7:
        raise ValueError("n_bar must lie in (0.3, 0.7) for the two-state restriction")
    if params.E_J > 0 and params.E_c / params.E_J < 10:
        raise ValueError("E_c / E_J must be >= 10 (charge regime)")
    w_charge, _ = eigensolve_hermitian(charge_hamiltonian(params, flux, n_charges))
    reduced = DeviceParams(params.E_c / 4.0, params.E_J, params.n_bar)
    w_two, _ = eigensolve_hermitian(two_level_hamiltonian(reduced, flux))
    low = w_charge[:2] - w_charge[:2].mean()
    return float(np.max(np.abs(low - (w_two - w_two.mean()))))


@dataclass(frozen=True)
class FeasibilityParams:
    """Inputs of the feasibility arithmetic (angular frequencies in rad/s, times in s).

    ``Omega`` is the vacuum Rabi frequency and ``gamma`` the device lifetime.
    """

    Q: float
    omega_c: float
    gamma: float
    Omega: float
    g: float
    E_J: float
    delta_over_beta: float
    epsilon: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.g > 0.1:
            warnings.warn("g > 0.1: Lamb-Dicke expansion is questionable", stacklevel=2)

    @classmethod
    def benchmark_defaults(cls) -> "FeasibilityParams":
        from .units import hz_to_rad, ueV_to_rad

        return cls(Q=1e6, omega_c=hz_to_rad(50e9), gamma=2e-6, Omega=hz_to_rad(10e6),
                   g=1e-2, E_J=ueV_to_rad(40.0), delta_over_beta=10.0, epsilon=0.2)


@dataclass(frozen=True)
class FeasibilityReport:
    params: FeasibilityParams
    tau_c: float
    beta: float
    delta: float
    omega: float
    chi: float
    gate_time: float
    n_operations: float
    nonuniformity_infidelity: float
    beta_half_coupling: float
    flags: dict

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        two_pi = 2 * math.pi
        return {
            "inputs": asdict(self.params),
            "tau_c_s": self.tau_c,
            "beta_rad_per_s": self.beta,
            "beta_over_2pi_hz": self.beta / two_pi,
            "delta_rad_per_s": self.delta,
            "omega_rad_per_s": self.omega,
            "chi_rad_per_s": self.chi,
            "chi_over_2pi_hz": self.chi / two_pi,
            "gate_time_s": self.gate_time,
            "n_operations": self.n_operations,
            "nonuniformity_infidelity": self.nonuniformity_infidelity,
            "alternative_reading": {
                "note": "if the quoted coupling is 2g rather than g, beta halves",
                "beta_over_2pi_hz": self.beta_half_coupling / two_pi,
            },
            "flags": dict(self.flags),
            "ok": self.ok,
        }

    def text(self) -> str:
        d = self.to_dict()
        lines = [
            f"cavity decay time tau_c      = {d['tau_c_s'] * 1e6:.3f} us",
            f"beta / 2pi                   = {d['beta_over_2pi_hz'] / 1e6:.2f} MHz "
            f"(with g -> g/2: {d['alternative_reading']['beta_over_2pi_hz'] / 1e6:.2f} MHz)",
            f"delta / 2pi                  = {d['delta_rad_per_s'] / 2 / math.pi / 1e6:.1f} MHz",
            f"chi / 2pi                    = {d['chi_over_2pi_hz'] / 1e6:.2f} MHz",
            f"closed-loop gate time (k=1)  = {d['gate_time_s'] * 1e9:.2f} ns",
            f"operations within coherence  = {d['n_operations']:.0f}",
            f"nonuniformity infidelity     = {d['nonuniformity_infidelity'] * 100:.2f} %",
        ]
        lines += [f"flag {k:<24} = {'ok' if v else 'VIOLATED'}" for k, v in self.flags.items()]
        return "\n".join(lines)


def feasibility_report(fp: FeasibilityParams) -> FeasibilityReport:
    """Timescale and coupling arithmetic for a parameter set; never raises on physics."""
    tau_c = fp.Q / fp.omega_c
    beta = fp.g * fp.E_J / 2.0
    delta = fp.delta_over_beta * beta
    omega = fp.omega_c - delta
    chi = 4.0 * beta ** 2 / delta
    gate_time = 2.0 * math.pi / delta
    coherence = min(tau_c, fp.gamma)
    gap = chi
    flags = {
        "lamb_dicke": fp.g <= 0.1,
        "beta_much_less_delta": delta >= 5 * beta,
        "delta_much_less_omega": omega >= 5 * delta,
        "strong_coupling": fp.Omega * coherence >= 10.0,
    }
    return FeasibilityReport(
        params=fp, tau_c=tau_c, beta=beta, delta=delta, omega=omega, chi=chi,
        gate_time=gate_time, n_operations=coherence / gate_time,
        nonuniformity_infidelity=math.exp(-gap / (fp.epsilon * chi)),
        beta_half_coupling=beta / 2.0, flags=flags,
    )
