"""Deterministic Toffoli gates without two-qubit-gate decomposition.

The first control routes the second photon, a C-path-3 gate lets the routed
photon's all-V rail route the target, a wave plate flips the target on that
rail alone, and Merging gates (with one recycled ancilla photon) fold every
photon back to a single path.  Both coupling layouts of the C-path-3 stage
realize the same gate; the compact one saves exactly one coupled mode.
"""

import numpy as np

from qubusim import polarization_state, polarization_vector
from qubusim.analysis import alpha_for_beta2
from qubusim.pipelines import toffoli

theta = 0.05
alpha = alpha_for_beta2(40.0, theta)

labels = [f"{a}{b}{c}" for a in "HV" for b in "HV" for c in "HV"]
print("triple-photon Toffoli truth table:")
for idx, label in enumerate(labels):
    coeffs = [0.0] * 8
    coeffs[idx] = 1.0
    s = polarization_state(coeffs, [("1", "t1"), ("2", "t2"), ("3", "t3")])
    out, rep = toffoli(s, ["1", "2"], "3", alpha, theta)
    vec = polarization_vector(out, list(rep.extras["photon_order"]))
    got = labels[int(np.argmax(np.abs(vec)))]
    marker = "  <- flipped" if got != label else ""
    print(f"  |{label}> -> |{got}>{marker}")

rng = np.random.default_rng(3)
z = rng.standard_normal(8) + 1j * rng.standard_normal(8)
z /= np.linalg.norm(z)
print("\nboth C-path-3 coupling layouts on a random superposition:")
vecs = {}
for layout in ("split", "compact"):
    s = polarization_state(z, [("1", "t1"), ("2", "t2"), ("3", "t3")])
    out, rep = toffoli(s, ["1", "2"], "3", alpha, theta, layout=layout)
    vecs[layout] = polarization_vector(out, list(rep.extras["photon_order"]))
    print(f"  {layout:>7}: XPM couplings = {rep.resources.xpm_couplings}, "
          f"ancillas = {rep.resources.ancilla_photons}, "
          f"detections = {rep.resources.detections}")
agree = abs(np.vdot(vecs["split"], vecs["compact"])) ** 2
print(f"  layouts agree: |<split|compact>|^2 = {agree:.12f}")

print("\nfour-photon Toffoli (three controls), |VVVH> -> :")
coeffs = [0.0] * 16
coeffs[14] = 1.0
s = polarization_state(coeffs, [("1", "t1"), ("2", "t2"), ("3", "t3"), ("4", "t4")])
out, rep = toffoli(s, ["1", "2", "3"], "4", alpha, theta)
vec = polarization_vector(out, list(rep.extras["photon_order"]))
idx = int(np.argmax(np.abs(vec)))
print(f"  index {idx:04b} (|VVVV>), amplitude {abs(vec[idx]):.9f}")
print(f"  gates: {dict(rep.gates)}")
