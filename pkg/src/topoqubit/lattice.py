"""Row/column lattice Hamiltonian, its spectrum and ground-space diagnostics.

Devices are numbered 1..N along the physical array (N = M^2).  Row i of the
logical lattice holds devices (i-1)M+1 .. iM and column j holds devices
j, j+M, .., j+(M-1)M.  :func:`to_sites` is the single place where these
1-based device numbers become 0-based tensor factor indices.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import (
    PAULI,
    HilbertSpace,
    OperatorMatrix,
    collective_op,
    eigensolve_hermitian,
    embed,
    pauli_strings,
)

__all__ = [
    "DimensionGuardError",
    "LatticeSpec",
    "SpectrumReport",
    "ProtectionReport",
    "row_devices",
    "col_devices",
    "to_sites",
    "target_hamiltonian",
    "init_hamiltonian",
    "spectrum",
    "ground_space",
    "protection_diagnostic",
]

MAX_DENSE_DIM = 4096


class DimensionGuardError(ValueError):
    """Problem too large for dense diagonalization."""


@dataclass(frozen=True)
class LatticeSpec:
    """M x M logical lattice with row (x) and column (y) couplings.

    ``init_field`` is the magnitude of the global x field used to initialize
    the devices.
    """

    M: int
    chi_x: float
    chi_y: float
    init_field: float = 1.0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.chi_x <= 0 or self.chi_y <= 0:
            raise ValueError("chi_x and chi_y must be positive")
        if self.init_field <= 0:
            raise ValueError("init_field must be positive")

    @property
    def N(self) -> int:
        return self.M * self.M

    def space(self) -> HilbertSpace:
        return HilbertSpace.qubits(self.N)

    def check_dense(self):
        if self.M > 3:
            raise DimensionGuardError(f"M = {self.M} exceeds the dense diagonalization guard (M <= 3)")


def row_devices(i: int, M: int) -> list[int]:
    if not 1 <= i <= M:
        raise IndexError(f"row {i} out of range 1..{M}")
    return [(i - 1) * M + j for j in range(1, M + 1)]


def col_devices(j: int, M: int) -> list[int]:
    if not 1 <= j <= M:
        raise IndexError(f"column {j} out of range 1..{M}")
    return [j + i * M for i in range(M)]


def to_sites(devices: Sequence[int]) -> list[int]:
    """Convert 1-based device numbers to 0-based factor indices."""
    return [d - 1 for d in devices]


def _check_space(spec: LatticeSpec, space: HilbertSpace | None) -> HilbertSpace:
    if space is None:
        spec.check_dense()
        return spec.space()
    if space.n_qubits != spec.N or space.boson_index is not None or len(space.dims) != spec.N:
        raise ValueError(f"space must hold exactly {spec.N} qubits and no boson")
    return space


def _square(J: OperatorMatrix) -> np.ndarray:
    return J.data @ J.data


def target_hamiltonian(spec: LatticeSpec, space: HilbertSpace | None = None) -> OperatorMatrix:
    """-chi_x sum_rows (J_x^row)^2 - chi_y sum_cols (J_y^col)^2."""
    space = _check_space(spec, space)
    H = np.zeros((space.dim, space.dim), dtype=complex)
    for r in range(1, spec.M + 1):
        H -= spec.chi_x * _square(collective_op("x", to_sites(row_devices(r, spec.M)), space))
    for c in range(1, spec.M + 1):
        H -= spec.chi_y * _square(collective_op("y", to_sites(col_devices(c, spec.M)), space))
    return OperatorMatrix(space, H, hermitian=True)


def init_hamiltonian(sign: int, spec: LatticeSpec, space: HilbertSpace | None = None) -> OperatorMatrix:
    """sign * init_field * sum_all sigma^x.

    sign = -1 corresponds to inter-loop phase 0 and has ground state
    ``|+>^N``; sign = +1 corresponds to phase pi with ground state ``|->^N``.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    space = _check_space(spec, space)
    J = collective_op("x", range(spec.N), space)
    return OperatorMatrix(space, sign * spec.init_field * J.data, hermitian=True)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    ground_degeneracy: int
    gap: float
    degeneracy_tol: float
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "ground_degeneracy": int(self.ground_degeneracy),
            "gap": float(self.gap),
            "degeneracy_tol": float(self.degeneracy_tol),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue_rad_per_s"])
        for k, e in enumerate(self.eigenvalues):
            w.writerow([k, repr(float(e))])
        return buf.getvalue()


def spectrum(H: OperatorMatrix, degeneracy_tol: float = 1e-9) -> SpectrumReport:
    """Eigenvalues, ground multiplet size and gap above it.

    Levels within ``degeneracy_tol`` times the spectral range of the minimum
    form the ground multiplet.
    """
    if H.shape[0] > MAX_DENSE_DIM:
        raise DimensionGuardError(f"dimension {H.shape[0]} exceeds {MAX_DENSE_DIM}")
    w, v = eigensolve_hermitian(H)
    span = w[-1] - w[0]
    cutoff = degeneracy_tol * span if span > 0 else 0.0
    deg = int(np.sum(w - w[0] <= cutoff))
    gap = float(w[deg] - w[0]) if deg < len(w) else 0.0
    return SpectrumReport(w, deg, gap, degeneracy_tol, v)


def ground_space(H: OperatorMatrix, degeneracy_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) of the ground multiplet."""
    rep = spectrum(H, degeneracy_tol)
    return rep.eigenvectors[:, :rep.ground_degeneracy]


@dataclass(frozen=True)
class PauliCheck:
    operator: str
    weight: int
    scalar_deviation: float


@dataclass(frozen=True, eq=False)
class ProtectionReport:
    checks: list[PauliCheck]
    eps_values: list[float]
    splittings: dict[str, list[list[float]]]
    seed: int

    @property
    def max_deviation(self) -> float:
        return max(c.scalar_deviation for c in self.checks)

    def exponents(self) -> dict[str, list[float]]:
        """Two-point power-law exponents of splitting vs eps, per axis and sample."""
        e0, e1 = self.eps_values[0], self.eps_values[-1]
        out = {}
        for axis, rows in self.splittings.items():
            out[axis] = [math.log(s[-1] / s[0]) / math.log(e1 / e0) for s in rows]
        return out

    @property
    def min_exponent(self) -> float:
        return min(min(v) for v in self.exponents().values())

    def to_dict(self) -> dict:
        return {
            "max_scalar_deviation": self.max_deviation,
            "checks": [{"operator": c.operator, "weight": c.weight,
                        "scalar_deviation": c.scalar_deviation} for c in self.checks],
            "eps_values": list(self.eps_values),
            "splittings": self.splittings,
            "exponents": self.exponents(),
            "min_exponent": self.min_exponent,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def protection_diagnostic(H: OperatorMatrix, max_weight: int, eps_values: Sequence[float],
                          samples: int = 1, seed: int = 0, axes: Sequence[str] = ("x", "y", "z"),
                          degeneracy_tol: float = 1e-9) -> ProtectionReport:
    """Check that low-weight Paulis act as scalars on the doubly degenerate ground space.

    For every Pauli string of weight <= ``max_weight`` the deviation
    ||P O P - c P|| with c = tr(P O P) / 2 is recorded.  Then random local
    fields eps * sum_j h_j sigma_j^axis (h_j uniform in [-1, 1]) are added and
    the ground-doublet splitting is tabulated against eps.
    """
    space = H.space
    G = ground_space(H, degeneracy_tol)
    if G.shape[1] != 2:
        raise ValueError(f"ground space is {G.shape[1]}-fold, expected a doublet")
    checks = []
    for p in pauli_strings(space.qubit_indices, max_weight):
        block = G.conj().T @ p.apply(G, space)
        c = np.trace(block) / 2
        dev = float(np.linalg.norm(block - c * np.eye(2), 2))
        checks.append(PauliCheck(str(p), p.weight, dev))

    rng = np.random.default_rng(seed)
    splittings: dict[str, list[list[float]]] = {}
    for axis in axes:
        rows = []
        for _ in range(samples):
            h = rng.uniform(-1.0, 1.0, space.n_qubits)
            V = sum(hj * embed(PAULI[axis], s, space).data
                    for hj, s in zip(h, space.qubit_indices))
            row = []
            for eps in eps_values:
                w, _ = eigensolve_hermitian(H.data + eps * V)
                row.append(float(w[1] - w[0]))
            rows.append(row)
        splittings[axis] = rows
    return ProtectionReport(checks, [float(e) for e in eps_values], splittings, seed)
