"""Three polarization qubits onto one photon's four paths, and back.

The circuit route iterates C-path / C-path-2 gates with a Disentangler after
each (no ancillas, resources linear in n); the teleportation route spends a
Bell pair plus n-1 ancilla photons and Bell measurements.  Both leave the
third photon's path amplitudes carrying the full 8-coefficient structure, and
the inverse transform reassembles the three-photon state.
"""

import numpy as np

from qubusim import path_pol_vector, pol_qubit, polarization_vector, remove_photon, tensor
from qubusim.analysis import alpha_for_beta2
from qubusim.pipelines import from_qudit, to_qudit_circuit, to_qudit_teleport

rng = np.random.default_rng(1)
singles = []
for i in range(3):
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    singles.append(v / np.linalg.norm(v))
kron = np.kron(np.kron(singles[0], singles[1]), singles[2])

state = tensor(
    tensor(pol_qubit("1", "t1", *singles[0]), pol_qubit("2", "t2", *singles[1])),
    pol_qubit("3", "t3", *singles[2]),
)

theta = 0.05
alpha = alpha_for_beta2(40.0, theta)

out, rep = to_qudit_circuit(state, ["1", "2", "3"], alpha, theta)
rails = list(rep.extras["rails"])
print("circuit route:")
print(f"  gates: {dict(rep.gates)}")
print(f"  rails (bit-ordered): {rails}")
probe = remove_photon(remove_photon(out, "1"), "2")
vec = path_pol_vector(probe, "3", rails)
print(f"  max |qudit amplitude - kron coefficient| = {np.max(np.abs(vec - kron)):.2e}")

state2 = tensor(
    tensor(pol_qubit("1", "t1", *singles[0]), pol_qubit("2", "t2", *singles[1])),
    pol_qubit("3", "t3", *singles[2]),
)
out_t, rep_t = to_qudit_teleport(state2, ["1", "2", "3"], alpha, theta)
vec_t = path_pol_vector(out_t, rep_t.extras["carrier"], list(rep_t.extras["rails"]))
print("\nteleport route:")
print(f"  ancilla photons spent: {rep_t.resources.ancilla_photons}")
print(f"  cross-method overlap |<circuit|teleport>|^2 = {abs(np.vdot(vec, vec_t))**2:.12f}")

back, rep_b = from_qudit(out, "3", ["1", "2"], rails, alpha, theta)
carrier = rep_b.extras["carrier"]
vec_back = polarization_vector(back, ["1", "2", carrier])
print("\ninverse transform (Entangler-3 pair + Merging-n):")
print(f"  round-trip fidelity = {abs(np.vdot(kron, vec_back))**2:.12f}")
print(f"  merged carrier photon: {carrier}")
