"""Walk through one row coupling: drive, closed loop, effective gate, thermal cavity.

Run with ``python3 demos/geometric_gate.py``.  Takes about half a minute.
"""

import math

import numpy as np

from topoqubit.cavity import DriveParams, closed_form_propagator, effective_hamiltonian, interaction_generator
from topoqubit.evolution import compare_channels, evolve_columns, probe_states, reduced_channel
from topoqubit.quantum import HilbertSpace, expm_i, thermal_state

beta, delta = 1.0, 10.0
drive = DriveParams.from_rates(beta, delta).with_preset("x")
space = HilbertSpace.qubits(2, n_max=25)
loop = 2 * math.pi / delta
print(f"beta={beta}, delta={delta}, chi=4 beta^2/delta={drive.chi:.3f}, one loop t={loop:.4f}")

# integrate the spin-boson drive over one loop, starting with the cavity in vacuum
H = interaction_generator([0, 1], drive, space)
U_num, n_steps, _, _ = evolve_columns(H, np.eye(space.dim), 0.0, loop, tol=1e-10)
U_cf = closed_form_propagator("x", [0, 1], drive, loop, space).data
qubits = HilbertSpace.qubits(2)
U_eff = np.kron(expm_i(effective_hamiltonian("x", [0, 1], drive.chi, qubits), loop).data, np.eye(26))

cols = np.arange(space.dim).reshape(4, 26)[:, :6].ravel()  # Fock <= 5 inputs
print(f"numeric vs closed form   {np.linalg.norm((U_num - U_cf)[:, cols], 2):.2e}  ({n_steps} steps)")
print(f"numeric vs exp(i chi t J^2) (x) 1   {np.linalg.norm((U_num - U_eff)[:, cols], 2):.2e}")

# thermal cavity at a closed loop vs half way round the second loop
probes = probe_states(2, seed=0)
thermal = thermal_state(2.0, 25)
vacuum = np.zeros(26)
vacuum[0] = 1
for label, t in (("closed", 2 * loop), ("open", 1.5 * loop)):
    U = closed_form_propagator("x", [0, 1], drive, t, space).data
    d = compare_channels(reduced_channel(U, vacuum, space), reduced_channel(U, thermal, space), probes)
    print(f"{label:>6} loop t={t:.4f}: vacuum vs n_th=2 worst trace distance {d:.2e}")
