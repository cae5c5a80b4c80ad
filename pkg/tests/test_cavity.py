import cmath
import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

import oracles
from topoqubit.cavity import (
    DriveParams,
    closed_form_propagator,
    coupling_operator,
    coupling_preset,
    effective_hamiltonian,
    eta_xi,
    full_flux_generator,
    full_flux_hamiltonian,
    interaction_generator,
    interaction_hamiltonian,
)
from topoqubit.device import DeviceParams
from topoqubit.evolution import evolve_columns
from topoqubit.quantum import PAULI, SIGMA_MINUS, SIGMA_PLUS, HilbertSpace, boson_ops, coherent_state, expm_i


def drive_for(beta=1.0, delta=10.0, axis="x"):
    return DriveParams.from_rates(beta, delta).with_preset(axis)


def test_drive_derived_quantities():
    d = DriveParams.from_rates(2.0, 20.0, g=0.01, omega_over_delta=50)
    assert np.isclose(d.beta, 2.0) and np.isclose(d.delta, 20.0)
    assert np.isclose(d.chi, 4 * 4 / 20)
    assert np.isclose(d.omega, 1000.0) and np.isclose(d.E_J, 400.0)
    assert np.isclose(replace(d, k=3).loop_time, 3 * 2 * math.pi / 20)
    d2 = DriveParams(g=0.01, E_J=100.0, omega=100.0, omega_c=110.0, g_per_device=(0.01, 0.02))
    assert np.allclose(d2.betas(2), [0.5, 1.0])
    with pytest.raises(ValueError):
        d2.betas(3)


def test_drive_validation_and_warnings():
    with pytest.raises(ValueError):
        DriveParams(g=0.01, E_J=1.0, omega=10.0, omega_c=9.0)
    with pytest.raises(ValueError):
        DriveParams(g=-0.01, E_J=1.0, omega=10.0, omega_c=11.0)
    with pytest.warns(UserWarning, match="large-detuning"):
        DriveParams.from_rates(1.0, 2.0)
    with pytest.warns(UserWarning, match="rotating-wave"):
        DriveParams.from_rates(0.1, 2.0, omega_over_delta=2)


@pytest.mark.parametrize("axis", ["x", "y"])
@pytest.mark.parametrize("branch", [0, 1, -2])
def test_presets_select_axis(axis, branch):
    phi_minus, phi_plus = coupling_preset(axis, branch)
    eta, xi = eta_xi(phi_plus, phi_minus)
    local = eta * SIGMA_PLUS + np.conj(xi) * SIGMA_MINUS
    assert np.allclose(local, 2 * PAULI[axis])


def test_interaction_is_hermitian_and_sparse_matches_dense():
    sp = HilbertSpace.qubits(2, n_max=6)
    d = drive_for(axis="y")
    dense = interaction_generator([0, 1], d, sp)
    sparse = interaction_generator([0, 1], d, sp, sparse=True)
    for t in (0.0, 0.13, 1.7):
        H = interaction_hamiltonian(t, [0, 1], d, sp)
        assert np.allclose(H.data, H.data.conj().T)
        assert np.allclose(dense(t), sparse(t).toarray())


def test_interaction_preset_form():
    """With a preset, H(t) = 2i beta (a^dag e^{i delta t} - a e^{-i delta t}) J_axis."""
    sp = HilbertSpace.qubits(2, n_max=5)
    d = drive_for(beta=0.7, delta=9.0, axis="x")
    a, ad, _ = boson_ops(sp)
    J = coupling_operator("x", [0, 1], sp).data
    t = 0.4
    expected = 2j * 0.7 * (cmath.exp(1j * 9.0 * t) * ad.data - cmath.exp(-1j * 9.0 * t) * a.data) @ J
    assert np.allclose(interaction_hamiltonian(t, [0, 1], d, sp).data, expected)


def test_effective_hamiltonian_form_and_guards():
    sp = HilbertSpace.qubits(3)
    J = coupling_operator("y", [0, 2], sp).data
    assert np.allclose(effective_hamiltonian("y", [0, 2], 0.5, sp).data, -0.5 * J @ J)
    with pytest.raises(ValueError):
        effective_hamiltonian("z", [0], 0.5, sp)
    with pytest.raises(ValueError):
        effective_hamiltonian("x", [0], -1.0, sp)


def test_closed_form_phase_against_quadrature():
    beta, delta, t = 0.8, 6.0, 0.77
    sp = HilbertSpace.qubits(1, n_max=10)
    U = closed_form_propagator("x", [0], drive_for(beta, delta), t, sp).data
    plus = np.array([1, 1]) / math.sqrt(2)
    vac = np.zeros(11)
    vac[0] = 1
    amp = np.vdot(np.kron(plus, vac), U @ np.kron(plus, vac))
    theta = oracles.geometric_phase_quadrature(delta, t)
    assert np.isclose(cmath.phase(amp), theta * beta ** 2)
    alpha_mod = 4 * abs(math.sin(delta * t / 2)) / delta
    assert np.isclose(abs(amp), math.exp(-(alpha_mod * beta) ** 2 / 2))


@pytest.mark.parametrize("axis", ["x", "y"])
@pytest.mark.parametrize("k", [1, 3])
def test_closed_form_reduces_to_effective_at_closure(axis, k):
    sp = HilbertSpace.qubits(2, n_max=8)
    d = drive_for(axis=axis)
    t = 2 * math.pi * k / d.delta
    U = closed_form_propagator(axis, [0, 1], d, t, sp).data
    Ueff = expm_i(effective_hamiltonian(axis, [0, 1], d.chi, sp), t).data
    assert np.allclose(U, Ueff, atol=1e-12)


def test_closed_form_requires_matching_preset():
    sp = HilbertSpace.qubits(1, n_max=4)
    with pytest.raises(ValueError):
        closed_form_propagator("y", [0], drive_for(axis="x"), 1.0, sp)


@pytest.mark.parametrize("t_frac", [0.37, 1.0])
def test_numeric_matches_closed_form(t_frac):
    """Pinning test: integrated drive vs closed form, vacuum, |3> and coherent inputs."""
    sp = HilbertSpace.qubits(1, n_max=25)
    d = drive_for(beta=1.0, delta=10.0, axis="y")
    t = t_frac * 2 * math.pi / d.delta
    U = closed_form_propagator("y", [0], d, t, sp).data
    eye = np.eye(2)
    inputs = []
    for q in range(2):
        for n in (0, 3):
            v = np.zeros(26)
            v[n] = 1
            inputs.append(np.kron(eye[q], v))
        inputs.append(np.kron(eye[q], coherent_state(1.0, 25)))
    Y0 = np.column_stack(inputs)
    Y, _, _, _ = evolve_columns(interaction_generator([0], d, sp), Y0, 0.0, t, 1e-10)
    assert np.linalg.norm(Y - U @ Y0, 2) < 1e-6


def test_full_flux_lab_frame_is_unexpanded_cosine():
    sp = HilbertSpace.qubits(1, n_max=8)
    d = DriveParams(g=0.05, E_J=2.0, omega=40.0, omega_c=44.0).with_preset("x")
    a, ad, n = boson_ops(HilbertSpace((9,), ("boson",)))
    X = a.data + ad.data
    t = 0.31
    cos_op = scipy.linalg.cosm(d.omega * t * np.eye(9) + d.g * X)
    expected = -2 * d.E_J * np.kron(PAULI["x"], cos_op) + d.omega_c * np.kron(np.eye(2), n.data)
    H = full_flux_hamiltonian(t, [0], d, sp, frame="lab")
    assert np.allclose(H.data, expected, atol=1e-12)


def test_full_flux_frames_are_related_by_cavity_rotation():
    sp = HilbertSpace.qubits(1, n_max=10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = DriveParams(g=0.05, E_J=2.0, omega=10.0, omega_c=11.0).with_preset("x")
    psi0 = np.kron(np.array([1, 0]), np.eye(11)[0])
    t = 0.7
    lab, _, _, _ = evolve_columns(full_flux_generator([0], d, sp, frame="lab"), psi0, 0.0, t, 1e-10)
    cav, _, _, _ = evolve_columns(full_flux_generator([0], d, sp, frame="cavity"), psi0, 0.0, t, 1e-10)
    _, _, n = boson_ops(sp)
    rot = np.exp(-1j * d.omega_c * t * np.diag(n.data).real)
    assert np.allclose(lab, rot * cav, atol=1e-8)


def test_full_flux_guards():
    sp = HilbertSpace.qubits(1, n_max=3)
    d = drive_for()
    with pytest.raises(ValueError):
        full_flux_generator([0], d, sp, device=DeviceParams(10.0, 0.1, n_bar=0.3))
    with pytest.raises(ValueError):
        full_flux_generator([0], d, sp, frame="rotating")
    with pytest.raises(ValueError):
        interaction_generator([], d, sp)
    with pytest.raises(ValueError):
        interaction_generator([0], d, HilbertSpace.qubits(1))
