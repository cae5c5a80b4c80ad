"""Dense linear algebra on composed qubit/boson Hilbert spaces.

Conventions used throughout the package:

* hbar = 1; every energy is an angular frequency (rad/s) and every time is
  in seconds.
* Qubit basis: ``|0>`` is the +1 eigenstate of sigma^z, and
  sigma^+ = (sigma^x + i sigma^y) / 2 = ``|0><1|``.
* A boson factor is a Fock space hard-truncated at ``n_max``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "PAULI",
    "HilbertSpace",
    "OperatorMatrix",
    "QuantumState",
    "PauliString",
    "NotHermitianError",
    "embed",
    "collective_op",
    "boson_ops",
    "partial_trace",
    "eigensolve_hermitian",
    "expm_i",
    "state_distance",
    "fidelity",
    "trace_distance",
    "pauli_strings",
    "fock_state",
    "coherent_state",
    "thermal_state",
    "product_state",
    "converge_in_fock",
]

HERMITIAN_RTOL = 1e-12

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


class NotHermitianError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


def hermiticity_defect(mat: np.ndarray) -> float:
    """Return max|H - H^dagger| relative to max|H| (0 for the zero matrix)."""
    scale = np.max(np.abs(mat)) if mat.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(mat - mat.conj().T)) / scale)


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of qubit and (at most one) boson factors.

    A ``"charge"`` factor (Cooper-pair number basis) is also accepted so the
    single-device charge Hamiltonian can reuse the same operator type.
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.dims:
            raise ValueError("a Hilbert space needs at least one factor")
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have equal length")
        for d, lab in zip(self.dims, self.labels):
            if lab not in ("qubit", "boson", "charge"):
                raise ValueError(f"unknown factor label {lab!r}")
            if d < 2:
                raise ValueError("every factor needs dimension >= 2")
            if lab == "qubit" and d != 2:
                raise ValueError("qubit factors have dimension 2")
        if self.labels.count("boson") > 1:
            raise ValueError("at most one boson factor is supported")

    @classmethod
    def qubits(cls, n: int, n_max: int | None = None) -> "HilbertSpace":
        """``n`` qubits, followed by a boson truncated at ``n_max`` if given."""
        dims = [2] * n
        labels = ["qubit"] * n
        if n_max is not None:
            dims.append(n_max + 1)
            labels.append("boson")
        return cls(tuple(dims), tuple(labels))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def boson_index(self) -> int | None:
        return self.labels.index("boson") if "boson" in self.labels else None

    @property
    def n_max(self) -> int | None:
        b = self.boson_index
        return None if b is None else self.dims[b] - 1

    @property
    def qubit_indices(self) -> tuple[int, ...]:
        return tuple(k for k, lab in enumerate(self.labels) if lab == "qubit")

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_indices)

    def with_cutoff(self, n_max: int) -> "HilbertSpace":
        b = self.boson_index
        if b is None:
            raise ValueError("space has no boson factor")
        dims = list(self.dims)
        dims[b] = n_max + 1
        return HilbertSpace(tuple(dims), self.labels)

    def subspace(self, keep: Sequence[int]) -> "HilbertSpace":
        keep = sorted(keep)
        return HilbertSpace(tuple(self.dims[k] for k in keep),
                            tuple(self.labels[k] for k in keep))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator on a :class:`HilbertSpace`.

    When ``hermitian`` is set the matrix is checked on construction.
    """

    space: HilbertSpace
    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        data = _frozen(self.data)
        object.__setattr__(self, "data", data)
        d = self.space.dim
        if data.shape != (d, d):
            raise ValueError(f"operator shape {data.shape} does not match space dimension {d}")
        if self.hermitian:
            defect = hermiticity_defect(data)
            if defect > HERMITIAN_RTOL:
                raise NotHermitianError(f"hermiticity defect {defect:.3e} exceeds {HERMITIAN_RTOL}")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self):
        return self.data.shape

    def _check(self, other: "OperatorMatrix"):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.data + other.data,
                                  self.hermitian and other.hermitian)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.data - other.data,
                                  self.hermitian and other.hermitian)
        return NotImplemented

    def __neg__(self):
        return OperatorMatrix(self.space, -self.data, self.hermitian)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            herm = self.hermitian and np.imag(scalar) == 0
            return OperatorMatrix(self.space, self.data * scalar, herm)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.data @ other.data)
        return self.data @ np.asarray(other)

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.data.conj().T, self.hermitian)

    def as_hermitian(self) -> "OperatorMatrix":
        """Return the same operator with its Hermiticity verified."""
        return OperatorMatrix(self.space, self.data, True)

    def expect(self, state: "QuantumState") -> complex:
        if state.is_pure:
            v = state.data
            return complex(np.vdot(v, self.data @ v))
        return complex(np.trace(self.data @ state.data))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure (vector) or mixed (density matrix) state on a space."""

    space: HilbertSpace
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        object.__setattr__(self, "data", data)
        d = self.space.dim
        if data.shape == (d,):
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"pure state norm {norm:.12f} differs from 1")
        elif data.shape == (d, d):
            if hermiticity_defect(data) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(data).real
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace {tr:.12f} differs from 1")
            if np.linalg.eigvalsh(0.5 * (data + data.conj().T))[0] < -1e-10:
                raise ValueError("density matrix has negative eigenvalues")
        else:
            raise ValueError(f"state shape {data.shape} does not match space dimension {d}")

    @classmethod
    def normalized(cls, space: HilbertSpace, vec) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex)
        return cls(space, vec / np.linalg.norm(vec))

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def as_mixed(self) -> "QuantumState":
        return QuantumState(self.space, self.density())


def embed(op_local, site: int, space: HilbertSpace) -> OperatorMatrix:
    """Place a single-factor operator at ``site`` with identities elsewhere."""
    op_local = np.asarray(op_local, dtype=complex)
    if not 0 <= site < len(space.dims):
        raise IndexError(f"site {site} out of range for {len(space.dims)} factors")
    d = space.dims[site]
    if op_local.shape != (d, d):
        raise ValueError(f"local operator shape {op_local.shape} does not match factor dimension {d}")
    left = int(np.prod(space.dims[:site]))
    right = int(np.prod(space.dims[site + 1:]))
    data = np.kron(np.kron(np.eye(left), op_local), np.eye(right))
    herm = hermiticity_defect(op_local) <= HERMITIAN_RTOL
    return OperatorMatrix(space, data, herm)


def _check_qubit_site(site: int, space: HilbertSpace):
    if not 0 <= site < len(space.dims):
        raise IndexError(f"site {site} out of range")
    if space.labels[site] != "qubit":
        raise ValueError(f"factor {site} is a boson, not a qubit")


def collective_op(axis: str, devices: Iterable[int], space: HilbertSpace,
                  weights: Sequence[float] | None = None) -> OperatorMatrix:
    """J_axis = sum over ``devices`` of sigma^axis (optionally weighted)."""
    devices = list(devices)
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    if not devices:
        raise ValueError("collective operator needs at least one device")
    if weights is None:
        weights = [1.0] * len(devices)
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for w, site in zip(weights, devices):
        _check_qubit_site(site, space)
        total += w * embed(PAULI[axis], site, space).data
    return OperatorMatrix(space, total, hermitian=True)


def boson_ops(space: HilbertSpace) -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """Truncated (a, a^dagger, a^dagger a) embedded in ``space``."""
    b = space.boson_index
    if b is None:
        raise ValueError("space has no boson factor")
    d = space.dims[b]
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    return (embed(a, b, space), embed(a.conj().T, b, space),
            embed(np.diag(np.arange(d)).astype(complex), b, space))


def partial_trace(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    """Reduced density matrix on the factors listed in ``keep``."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    space = state.space
    n = len(space.dims)
    if any(not 0 <= k < n for k in keep):
        raise IndexError("keep index out of range")
    traced = [k for k in range(n) if k not in keep]
    dk = int(np.prod([space.dims[k] for k in keep]))
    if state.is_pure:
        psi = state.data.reshape(space.dims)
        psi = np.transpose(psi, keep + traced).reshape(dk, -1)
        rho = psi @ psi.conj().T
    else:
        rho = state.data.reshape(space.dims + space.dims)
        perm = keep + traced
        rho = np.transpose(rho, perm + [p + n for p in perm])
        dt = space.dim // dk
        rho = np.einsum("ajbj->ab", rho.reshape(dk, dt, dk, dt))
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(space.subspace(keep), rho)


def _hermitian_data(H) -> np.ndarray:
    if isinstance(H, OperatorMatrix):
        data = H.data
    else:
        data = np.asarray(H, dtype=complex)
    defect = hermiticity_defect(data)
    if defect > HERMITIAN_RTOL:
        raise NotHermitianError(f"hermiticity defect {defect:.3e} exceeds {HERMITIAN_RTOL}")
    return data


def eigensolve_hermitian(H) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    data = _hermitian_data(H)
    return scipy.linalg.eigh(0.5 * (data + data.conj().T))


def expm_i(H, t: float) -> OperatorMatrix | np.ndarray:
    """exp(-i H t) through the eigendecomposition of Hermitian ``H``.

    Returns an :class:`OperatorMatrix` when given one, else an ndarray.
    """
    w, v = eigensolve_hermitian(H)
    U = (v * np.exp(-1j * w * t)) @ v.conj().T
    if isinstance(H, OperatorMatrix):
        return OperatorMatrix(H.space, U)
    return U


def fidelity(s1: QuantumState, s2: QuantumState) -> float:
    """Uhlmann fidelity (squared convention, so orthogonal pure states give 0)."""
    if s1.space != s2.space:
        raise ValueError("states live on different spaces")
    if s1.is_pure and s2.is_pure:
        f = abs(np.vdot(s1.data, s2.data)) ** 2
    elif s1.is_pure or s2.is_pure:
        psi, rho = (s1.data, s2.data) if s1.is_pure else (s2.data, s1.data)
        f = np.real(np.vdot(psi, rho @ psi))
    else:
        w, v = scipy.linalg.eigh(s1.data)
        sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        inner = sq @ s2.data @ sq
        f = np.sum(np.sqrt(np.clip(scipy.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0, None))) ** 2
    return float(min(max(f, 0.0), 1.0))


def trace_distance(s1: QuantumState, s2: QuantumState) -> float:
    if s1.space != s2.space:
        raise ValueError("states live on different spaces")
    if s1.is_pure and s2.is_pure:
        # sqrt(1 - |<a|b>|^2) as the norm of b's component orthogonal to a,
        # which keeps full precision when the states nearly coincide
        a, b = s1.data, s2.data
        return float(min(np.linalg.norm(b - np.vdot(a, b) * a), 1.0))
    diff = s1.density() - s2.density()
    w = scipy.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(min(0.5 * np.sum(np.abs(w)), 1.0))


def state_distance(s1: QuantumState, s2: QuantumState) -> tuple[float, float]:
    """(fidelity, trace distance) between two states."""
    return fidelity(s1, s2), trace_distance(s1, s2)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Paulis, e.g. ``((0, 'x'), (3, 'z'))``."""

    sites: tuple[tuple[int, str], ...]

    def __post_init__(self):
        sites = tuple(sorted((int(s), a) for s, a in self.sites))
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ValueError("a Pauli string needs weight >= 1")
        idx = [s for s, _ in sites]
        if len(set(idx)) != len(idx):
            raise ValueError("repeated device index in Pauli string")
        if any(a not in ("x", "y", "z") for _, a in sites):
            raise ValueError("axes must be x, y or z")

    @property
    def weight(self) -> int:
        return len(self.sites)

    def __str__(self) -> str:
        return " ".join(f"{a.upper()}{s}" for s, a in self.sites)

    def to_operator(self, space: HilbertSpace) -> OperatorMatrix:
        mats = []
        lookup = dict(self.sites)
        for k, d in enumerate(space.dims):
            if k in lookup:
                _check_qubit_site(k, space)
                mats.append(PAULI[lookup[k]])
            else:
                mats.append(np.eye(d))
        return OperatorMatrix(space, functools.reduce(np.kron, mats), hermitian=True)

    def apply(self, vectors: np.ndarray, space: HilbertSpace) -> np.ndarray:
        """Apply to state vectors stored as columns without forming the matrix."""
        vectors = np.asarray(vectors, dtype=complex)
        cols = vectors.reshape(space.dim, -1)
        t = cols.reshape(space.dims + (cols.shape[1],))
        for site, axis in self.sites:
            _check_qubit_site(site, space)
            t = np.moveaxis(np.tensordot(PAULI[axis], t, axes=([1], [site])), 0, site)
        return t.reshape(vectors.shape)


def pauli_strings(sites: Sequence[int], max_weight: int) -> Iterator[PauliString]:
    """Every Pauli string on ``sites`` with weight 1..max_weight."""
    for w in range(1, max_weight + 1):
        for chosen in itertools.combinations(sites, w):
            for axes in itertools.product("xyz", repeat=w):
                yield PauliString(tuple(zip(chosen, axes)))


def fock_state(n: int, n_max: int) -> np.ndarray:
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(alpha: complex, n_max: int) -> np.ndarray:
    """Coherent-state amplitudes truncated at n_max and renormalized."""
    n = np.arange(n_max + 1)
    logfact = np.cumsum(np.log(np.maximum(n, 1)))
    amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * alpha ** n
    return amp / np.linalg.norm(amp)


def thermal_state(n_mean: float, n_max: int) -> np.ndarray:
    """Truncated, renormalized thermal density matrix with mean occupation n_mean."""
    if n_mean == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
    else:
        q = n_mean / (1.0 + n_mean)
        p = q ** np.arange(n_max + 1)
        p /= p.sum()
    return np.diag(p).astype(complex)


def product_state(locals_: Sequence, space: HilbertSpace) -> QuantumState:
    """Pure product state from one local vector per factor."""
    if len(locals_) != len(space.dims):
        raise ValueError("need one local vector per factor")
    vecs = [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in locals_]
    return QuantumState(space, functools.reduce(np.kron, vecs))


def converge_in_fock(compute: Callable[[int], np.ndarray | float], n_max: int,
                     step: int = 5, tol: float = 1e-6, n_limit: int = 200):
    """Raise the Fock cutoff until ``compute`` moves by less than ``tol``.

    Returns ``(value, n_max_used)`` where ``value`` is computed at the larger
    cutoff of the final accepted pair.
    """
    prev = np.asarray(compute(n_max))
    n = n_max
    while n + step <= n_limit:
        cur = np.asarray(compute(n + step))
        if np.max(np.abs(cur - prev)) < tol:
            return cur, n + step
        prev, n = cur, n + step
    raise RuntimeError(f"Fock cutoff did not converge below n_max={n_limit}")
