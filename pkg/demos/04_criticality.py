"""Criticality from the second-solution integrals.

A positive solution phi gives a second solution through the integral of
1/phi^2.  Divergence in both directions means critical, convergence
means subcritical.  CE1 and the limit operator are critical while CE2 is
subcritical, even though its coefficients are limits of CE2 translates.

Run:  python demos/04_criticality.py
"""

from critlab.criticality import classify_preset, subsolution_certificate
from critlab.limit_periodic import DriftField

for preset in ("ce1-sa", "ce2-sa", "limit-sa"):
    rep = classify_preset(preset)
    fwd = ", ".join(f"{v:.3g}" for v in rep.integrals.forward[:7])
    print(f"{preset:9s} {rep.classification:12s} forward integrals to 3^6: {fwd}")

# a positive psi with -L psi <= lambda psi on the window, checked on a 0.01 grid
cert = subsolution_certificate(DriftField(), 0.2, (-729.0, 729.0))
print(f"subsolution at lambda=0.2: passed={cert.passed}, min slack {cert.min_slack:.4f}")
