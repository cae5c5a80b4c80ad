"""Lattice tour: the protected doublet, Trotterized rows/columns and state preparation.

Run with ``python3 demos/lattice_walkthrough.py``.  A few seconds.
"""

from topoqubit.experiments import prep_run, protection_run, spectrum_run, trotter_audit
from topoqubit.lattice import LatticeSpec, spectrum, target_hamiltonian

for M in (2, 3):
    rep = spectrum(target_hamiltonian(LatticeSpec(M, 1.0, 1.0)))
    low = ", ".join(f"{e:.4f}" for e in rep.eigenvalues[:4])
    print(f"M={M}: lowest levels {low}  degeneracy {rep.ground_degeneracy}  gap {rep.gap:.5f}")

print(spectrum_run().summary)

# local perturbations only split the doublet at second order or beyond
print(protection_run(samples=1).summary)

# rows then columns, each slice an integer number of closed loops
audit = trotter_audit()
for r in audit.data["rungs"]:
    print(f"tau chi={r['tau_chi']:.4f} cycles={r['cycles']:>2} infidelity {r['infidelity']:.3e}")
print(audit.summary)

# switch off the transverse field, switch on the row/column couplings
prep = prep_run(logical_bit=1)
for r in prep.data["ladder"]:
    print(f"T_ramp chi={r['T_ramp_chi']:>5g}  overlap with ground doublet {r['overlap']:.6f}")
print(prep.summary)
