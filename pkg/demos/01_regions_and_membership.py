"""Tour of the probability space: the quantum set, the LHV set, and the
three regions they carve out.

Every observable configuration of the experiment is a point in an
eight-dimensional space: four singles probabilities plus four null-event
probabilities determine all sixteen per-setting outcome probabilities once
no-signaling holds.  Quantum mechanics reaches some of these points, hidden
weights reach others, and the interesting physics lives in the differences.
"""
import numpy as np

import belleval as bv

params = bv.PRESETS["boulder"].with_gamma(0.000722)
rng = np.random.default_rng(0)

print("== a quantum point ==")
rho = bv.random_pure_state(rng)
mixed = bv.mix_states(rho, [bv.random_pure_state(rng) for _ in range(3)], 0.001)
p = bv.probabilities_from_state(mixed, params)
print("per-setting probabilities (x 1e6):")
print(np.round(1e6 * p.table, 2))
print("quantum member:", bv.qm_membership(p, params).member)
print("LHV member:    ", bv.lhv_membership(p, params))
print("region:        ", "both" if bv.lhv_membership(p, params) else "QM only")

print("\n== an LHV point beyond quantum reach ==")
g, ea, eb = params.gamma, params.eta_a, params.eta_b
w = np.zeros(16)
w[0] = g * ea * eb    # all four counterfactual detectors click
w[15] = 1 - g * ea * eb
p_corner = bv.probabilities_from_weights(w)
print("coincidence probability in every setting:", p_corner.table[0, 0])
print("quantum member:", bv.qm_membership(p_corner, params).member)
print("LHV member:    ", bv.lhv_membership(p_corner, params))

print("\n== the target state violates a Bell-type inequality ==")
target = bv.target_state(params)
p_target = bv.probabilities_from_state(target, params)
print("violation margin:", bv.bell_violation(p_target), "(positive = no LHV account)")
print("LHV member:", bv.lhv_membership(p_target, params))
print("-> the target lies in the QM-only region")
