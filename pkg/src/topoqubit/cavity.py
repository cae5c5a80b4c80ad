"""Flux-driven coupling of devices to a single cavity mode.

All Hamiltonians except :func:`full_flux_hamiltonian` live in the frame
rotating at the cavity frequency (interaction picture w.r.t. omega_c a^dag a).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .device import DeviceParams
from .quantum import (
    PAULI,
    SIGMA_PLUS,
    HilbertSpace,
    OperatorMatrix,
    boson_ops,
    collective_op,
    embed,
)

__all__ = [
    "DriveParams",
    "EffectiveCoupling",
    "eta_xi",
    "coupling_preset",
    "interaction_hamiltonian",
    "interaction_generator",
    "coupling_operator",
    "effective_hamiltonian",
    "closed_form_propagator",
    "full_flux_hamiltonian",
    "full_flux_generator",
]


@dataclass(frozen=True)
class DriveParams:
    """Cavity drive bookkeeping (angular frequencies in rad/s).

    ``g_per_device`` optionally overrides ``g`` device by device (disorder knob).
    """

    g: float
    E_J: float
    omega: float
    omega_c: float
    phi_plus: float = 0.0
    phi_minus: float = 0.0
    k: int = 1
    g_per_device: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.g <= 0 or self.E_J <= 0 or self.omega <= 0:
            raise ValueError("g, E_J and omega must be positive")
        if self.delta <= 0:
            raise ValueError("detuning delta = omega_c - omega must be positive")
        if self.k < 1:
            raise ValueError("loop index k must be >= 1")
        if self.g_per_device is not None:
            object.__setattr__(self, "g_per_device", tuple(float(x) for x in self.g_per_device))
        if self.delta < 5 * self.beta:
            warnings.warn("delta < 5 beta: large-detuning condition is weak", stacklevel=2)
        if self.omega < 5 * self.delta:
            warnings.warn("omega < 5 delta: rotating-wave condition is weak", stacklevel=2)

    @classmethod
    def from_rates(cls, beta: float, delta: float, g: float = 1e-2,
                   omega_over_delta: float = 100.0, **kw) -> "DriveParams":
        """Build from the interaction rate beta and detuning delta."""
        omega = omega_over_delta * delta
        return cls(g=g, E_J=2.0 * beta / g, omega=omega, omega_c=omega + delta, **kw)

    @property
    def delta(self) -> float:
        return self.omega_c - self.omega

    @property
    def beta(self) -> float:
        return self.g * self.E_J / 2.0

    @property
    def chi(self) -> float:
        return 4.0 * self.beta ** 2 / self.delta

    @property
    def loop_time(self) -> float:
        """Duration of ``k`` closed phase-space loops, 2 pi k / delta."""
        return 2.0 * math.pi * self.k / self.delta

    def betas(self, n_devices: int) -> np.ndarray:
        if self.g_per_device is None:
            return np.full(n_devices, self.beta)
        if len(self.g_per_device) < n_devices:
            raise ValueError("g_per_device is shorter than the device list")
        return np.asarray(self.g_per_device[:n_devices]) * self.E_J / 2.0

    def with_preset(self, axis: str, branch: int = 0) -> "DriveParams":
        """Copy with the flux preset for ``axis`` (``branch`` is the phi_plus period index)."""
        phi_minus, phi_plus = coupling_preset(axis, branch)
        return replace(self, phi_minus=phi_minus, phi_plus=phi_plus)

    def effective_coupling(self) -> "EffectiveCoupling":
        return EffectiveCoupling(self.chi, self.chi)


@dataclass(frozen=True)
class EffectiveCoupling:
    chi_x: float
    chi_y: float


def eta_xi(phi_plus: float, phi_minus: float) -> tuple[complex, complex]:
    eta = cmath.exp(-1j * phi_minus) + cmath.exp(-1j * (2 * phi_plus - phi_minus))
    xi = cmath.exp(-1j * phi_minus) + cmath.exp(1j * (2 * phi_plus + phi_minus))
    return eta, xi


def coupling_preset(axis: str, k: int = 0) -> tuple[float, float]:
    """(phi_minus, phi_plus) selecting a J_x (``"x"``) or J_y (``"y"``) coupling."""
    axis = axis.lower()
    if axis == "x":
        return 0.0, k * math.pi
    if axis == "y":
        return math.pi / 2, k * math.pi + math.pi / 2
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def _require_boson(space: HilbertSpace):
    if space.boson_index is None:
        raise ValueError("space has no boson factor")


def _spin_operator(devices: Sequence[int], drive: DriveParams, space: HilbertSpace) -> np.ndarray:
    """A = sum_j beta_j (eta sigma_j^+ + xi^* sigma_j^-) on the full space."""
    eta, xi = eta_xi(drive.phi_plus, drive.phi_minus)
    local = eta * SIGMA_PLUS + np.conj(xi) * SIGMA_PLUS.conj().T
    A = np.zeros((space.dim, space.dim), dtype=complex)
    for beta_j, site in zip(drive.betas(len(devices)), devices):
        if space.labels[site] != "qubit":
            raise ValueError(f"factor {site} is not a qubit")
        A += beta_j * embed(local, site, space).data
    return A


def interaction_generator(devices: Sequence[int], drive: DriveParams, space: HilbertSpace,
                          sparse: bool = False) -> Callable[[float], np.ndarray]:
    """Return t -> H_int(t) as a plain (or sparse) matrix, for fast propagation.

    H_int(t) = i a^dag e^{i delta t} A - i a e^{-i delta t} A^dag with
    A = sum_j beta_j (eta sigma_j^+ + xi^* sigma_j^-); this is the expanded
    form of i beta sum_j sigma_j^+ (eta a^dag e^{i delta t} - xi a e^{-i delta t}) + h.c.
    """
    devices = list(devices)
    if not devices:
        raise ValueError("device subset must be non-empty")
    _require_boson(space)
    a, ad, _ = boson_ops(space)
    A = _spin_operator(devices, drive, space)
    up = 1j * ad.data @ A
    down = -1j * a.data @ A.conj().T
    delta = drive.delta
    if sparse:
        up, down = scipy.sparse.csr_matrix(up), scipy.sparse.csr_matrix(down)

    def H(t: float):
        return cmath.exp(1j * delta * t) * up + cmath.exp(-1j * delta * t) * down

    return H


def interaction_hamiltonian(t: float, devices: Sequence[int], drive: DriveParams,
                            space: HilbertSpace) -> OperatorMatrix:
    """Drive-induced spin-boson interaction at time ``t`` (cavity frame)."""
    return OperatorMatrix(space, interaction_generator(devices, drive, space)(t), hermitian=True)


def coupling_operator(axis: str, devices: Sequence[int], space: HilbertSpace,
                      drive: DriveParams | None = None) -> OperatorMatrix:
    """Beta-weighted collective operator L = sum_j beta_j sigma_j^axis (J_axis if no drive)."""
    weights = None if drive is None else drive.betas(len(list(devices)))
    return collective_op(axis, devices, space, weights)


def effective_hamiltonian(axis: str, devices: Sequence[int], chi: float,
                          space: HilbertSpace) -> OperatorMatrix:
    """-chi J_axis^2 over the device subset."""
    axis = axis.lower()
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if chi <= 0:
        raise ValueError("chi must be positive")
    J = collective_op(axis, devices, space)
    return OperatorMatrix(space, -chi * (J.data @ J.data), hermitian=True)


def _preset_axis(drive: DriveParams) -> str | None:
    """Axis whose collective operator the drive's flux preset produces, if any."""
    eta, xi = eta_xi(drive.phi_plus, drive.phi_minus)
    local = eta * SIGMA_PLUS + np.conj(xi) * SIGMA_PLUS.conj().T
    for axis in ("x", "y"):
        if np.allclose(local, 2.0 * PAULI[axis], atol=1e-12):
            return axis
    return None


def closed_form_propagator(axis: str, devices: Sequence[int], drive: DriveParams, t: float,
                           space: HilbertSpace, pad: int = 30) -> OperatorMatrix:
    """Exact propagator of the preset-reduced interaction from 0 to ``t``.

    With L the beta-weighted collective operator, H(t) = 2i(a^dag e^{i delta t}
    - a e^{-i delta t}) L.  Second-order Magnus terminates, giving

        U(t) = D(alpha(t) L) exp(i Theta(t) L^2),
        alpha(t) = -2i (e^{i delta t} - 1) / delta,
        Theta(t) = 4 (delta t - sin(delta t)) / delta^2,

    where D(z) = exp(z a^dag - z^* a).  At t = 2 pi k / delta the displacement
    closes and U = exp(i chi t J^2) with chi = 4 beta^2 / delta.

    The displacement is built in a Fock space enlarged by ``pad`` and then
    cropped, so matrix elements between low Fock states are untruncated.
    """
    axis = axis.lower()
    if _preset_axis(drive) != axis:
        raise ValueError(f"drive flux preset does not select the {axis!r} coupling")
    _require_boson(space)
    devices = list(devices)
    big = space.with_cutoff(space.n_max + pad)
    L = coupling_operator(axis, devices, big, drive).data
    a, ad, _ = boson_ops(big)
    delta = drive.delta
    alpha = -2j * (cmath.exp(1j * delta * t) - 1.0) / delta
    theta = 4.0 * (delta * t - math.sin(delta * t)) / delta ** 2
    gen = (alpha * ad.data - np.conj(alpha) * a.data) @ L
    U_big = scipy.linalg.expm(gen)
    w, v = scipy.linalg.eigh(L @ L)
    U_big = U_big @ ((v * np.exp(1j * theta * w)) @ v.conj().T)
    return OperatorMatrix(space, _crop_boson(U_big, big, space))


def _crop_boson(U: np.ndarray, big: HilbertSpace, small: HilbertSpace) -> np.ndarray:
    n = len(big.dims)
    b = big.boson_index
    T = U.reshape(big.dims + big.dims)
    keep = small.dims[b]
    sl = [slice(None)] * (2 * n)
    sl[b] = slice(0, keep)
    sl[b + n] = slice(0, keep)
    return T[tuple(sl)].reshape(small.dim, small.dim)


def full_flux_generator(devices: Sequence[int], drive: DriveParams, space: HilbertSpace,
                        device: DeviceParams | None = None,
                        frame: str = "cavity") -> Callable[[float], np.ndarray]:
    """Return t -> H(t) for devices with the unexpanded junction cosines.

    Each device contributes -(E_J/2)(S_j sigma_j^+ + S_j^dag sigma_j^-), with
    S_j = xi e^{i phi_j} + eta e^{-i phi_j} and the inter-loop phase operator
    phi_j = omega t + g_j (a + a^dag).  With phi1 = phi2 = 0 this is
    -2 E_J cos[omega t + g (a + a^dag)] sigma^x.  Devices sit at the charge
    degeneracy point, so there is no sigma^z term.

    ``frame="lab"`` adds omega_c a^dag a; ``frame="cavity"`` rotates it away
    (a -> a e^{-i omega_c t}), which is the frame of :func:`interaction_hamiltonian`.
    """
    devices = list(devices)
    if not devices:
        raise ValueError("device subset must be non-empty")
    if device is not None and device.E_ce != 0.0:
        raise ValueError("devices must sit at the degeneracy point (n_bar = 1/2)")
    if frame not in ("cavity", "lab"):
        raise ValueError("frame must be 'cavity' or 'lab'")
    _require_boson(space)
    b = space.boson_index
    nb = space.dims[b]
    a_loc = np.diag(np.sqrt(np.arange(1, nb)), 1).astype(complex)
    xv, xvec = scipy.linalg.eigh(a_loc + a_loc.conj().T)
    eta, xi = eta_xi(drive.phi_plus, drive.phi_minus)
    gs = drive.betas(len(devices)) * 2.0 / drive.E_J
    sp_ops = [embed(SIGMA_PLUS, s, space).data for s in devices]
    number = np.arange(nb)
    _, _, n_op = boson_ops(space)
    E_J, omega, omega_c = drive.E_J, drive.omega, drive.omega_c

    def boson_fn(values, t):
        local = (xvec * values) @ xvec.conj().T
        if frame == "cavity":
            r = np.exp(1j * omega_c * t * number)
            local = (r[:, None] * local) * r.conj()[None, :]
        return embed(local, b, space).data

    def H(t: float) -> np.ndarray:
        total = np.zeros((space.dim, space.dim), dtype=complex)
        for g_j, sp in zip(gs, sp_ops):
            phase = omega * t + g_j * xv
            S = xi * boson_fn(np.exp(1j * phase), t) + eta * boson_fn(np.exp(-1j * phase), t)
            term = S @ sp
            total += -0.5 * E_J * (term + term.conj().T)
        if frame == "lab":
            total += omega_c * n_op.data
        return total

    return H


def full_flux_hamiltonian(t: float, devices: Sequence[int], drive: DriveParams,
                          space: HilbertSpace, device: DeviceParams | None = None,
                          frame: str = "cavity") -> OperatorMatrix:
    """Unexpanded-cosine device-cavity Hamiltonian at time ``t``."""
    H = full_flux_generator(devices, drive, space, device, frame)(t)
    return OperatorMatrix(space, H, hermitian=True)
