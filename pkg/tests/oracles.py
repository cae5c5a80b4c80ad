"""Independent reference implementations used as test oracles.

Nothing here imports the package.  The spin Hamiltonian is assembled element
by element from bit manipulations and diagonalized with numpy, and the device
phasor uses a different gauge (first junction offset pinned to zero).
"""

import math

import numpy as np
from scipy import integrate


def compass_hamiltonian(M, chi_x, chi_y):
    """-chi_x sum_rows (sum sigma^x)^2 - chi_y sum_cols (sum sigma^y)^2, by brute force.

    Basis index bits: qubit 0 is the most significant bit, bit value 0 is
    the +1 eigenstate of sigma^z.
    """
    N = M * M
    dim = 2 ** N
    H = np.zeros((dim, dim), dtype=complex)

    def bit(s, q):
        return (s >> (N - 1 - q)) & 1

    def flip(s, q):
        return s ^ (1 << (N - 1 - q))

    rows = [[r * M + c for c in range(M)] for r in range(M)]
    cols = [[r * M + c for r in range(M)] for c in range(M)]
    for s in range(dim):
        for group in rows:
            for a in group:
                for b in group:
                    if a == b:
                        H[s, s] -= chi_x
                    else:
                        H[flip(flip(s, a), b), s] -= chi_x
        for group in cols:
            for a in group:
                for b in group:
                    if a == b:
                        H[s, s] -= chi_y
                        continue
                    # sigma^y|0> = i|1>, sigma^y|1> = -i|0>
                    phase = 1.0
                    for q in (b, a):
                        phase *= 1j if bit(s, q) == 0 else -1j
                    H[flip(flip(s, a), b), s] -= chi_y * phase
    return H


def compass_spectrum(M, chi_x=1.0, chi_y=1.0):
    return np.linalg.eigvalsh(compass_hamiltonian(M, chi_x, chi_y))


def degeneracy(eigs, rel_tol=1e-9):
    span = eigs[-1] - eigs[0]
    return int(np.sum(eigs - eigs[0] <= rel_tol * span))


def pinned_gauge_offsets(phi, phi1, phi2):
    """Junction phases with the first one fixed at zero, from the three loop constraints."""
    o1 = 0.0
    o2 = o1 - 2 * phi1
    o3 = o2 - 2 * phi
    o4 = o3 - 2 * phi2
    return np.array([o1, o2, o3, o4])


def charge_box_spectrum(E_c, E_J, n_bar, phi, phi1, phi2, K):
    n = np.arange(-K, K + 1)
    amp = -0.5 * E_J * np.sum(np.exp(1j * pinned_gauge_offsets(phi, phi1, phi2)))
    H = np.diag(E_c * (n - n_bar) ** 2).astype(complex)
    for i in range(len(n) - 1):
        H[i + 1, i] = amp
        H[i, i + 1] = np.conj(amp)
    return np.linalg.eigvalsh(H)


def geometric_phase_quadrature(delta, t):
    """Double integral of Im[f(s) f(s')^*] over s' < s for f(s) = 2i e^{i delta s}."""
    val, _ = integrate.dblquad(lambda sp, s: 4.0 * math.sin(delta * (s - sp)), 0.0, t,
                               lambda s: 0.0, lambda s: s, epsabs=1e-13, epsrel=1e-12)
    return val


def feasibility_numbers(Q, f_c_hz, g, E_J_ueV, delta_over_beta, epsilon):
    """Hand arithmetic for the feasibility paragraph, in SI units."""
    hbar = 1.054571817e-34
    e = 1.602176634e-19
    omega_c = 2 * math.pi * f_c_hz
    E_J = E_J_ueV * 1e-6 * e / hbar
    beta = g * E_J / 2
    return {
        "tau_c_s": Q / omega_c,
        "beta_over_2pi_hz": beta / (2 * math.pi),
        "infidelity": math.exp(-1.0 / epsilon),
    }
