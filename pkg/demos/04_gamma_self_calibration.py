"""Self-calibrating the trigger-to-pair probability from the data.

The quantum account of the Boulder run depends sharply on gamma; maximizing
the likelihood jointly over the state and gamma recovers 0.000722, some 40%
above the nominal 0.0005.  The LHV maximum, by contrast, does not move: gamma
enters that side only through bounds that stay slack.
"""
import belleval as bv

bundle = bv.load_dataset("boulder-5")
est = bv.estimate_gamma(bundle.counts, bundle.params, (0.0005, 0.0009),
                        grid=21, seed=0)

print(f"best-guess gamma: {est.gamma_hat:.6f}   (published: 0.000722)")
print(f"log10 L at the maximum: {est.log10_l_at_hat:.2f}   (published: -46.59)\n")

print(f"{'gamma':>9} {'log10 L (QM)':>14} {'log10 L (LHV)':>14} {'violates':>9} {'phi_B':>8}")
for pt in est.scan[::2]:
    print(f"{pt.gamma:9.6f} {pt.log10_l_qm:14.2f} {pt.log10_l_lhv:14.2f}"
          f" {str(pt.eberhard_violated):>9} {pt.phi_b_target_qm_mle:8.4f}")

print("\nThe nominal gamma = 0.0005 sits ~665 decades below the optimum on the")
print("quantum side and outside the band where the QM-MLE violates the")
print("Bell-type inequality; the data are simply not typical for it.")
