"""Resonant frequencies, existence threshold, and a double resonance."""

import math

from capdrop import PhysicalParams
from capdrop.linear import multiplicity_scan, resonance_solve

for p in (PhysicalParams(1.0, 0.0), PhysicalParams(1.0, 2.0), PhysicalParams(0.02, 1.0)):
    print(f"sigma0={p.sigma0:g} alpha0={p.alpha0:g}")
    for ell in range(1, 7):
        sol = resonance_solve(ell, 1, p)
        if sol.omega_plus is None:
            print(f"  l={ell}: no real frequency (delta={sol.delta:.4g})")
        else:
            print(f"  l={ell}: omega+ = {sol.omega_plus: .10f}   omega- = {sol.omega_minus: .10f}")

# sigma0/alpha0^2 = 1/(4(n+1)) puts modes 1 and n on the same frequency
for n in (2, 3, 4):
    p = PhysicalParams(1.0 / (4 * (n + 1)), 1.0)
    rep = multiplicity_scan(0.0, p)
    print(f"C = 1/{4 * (n + 1)}: resonant modes {rep.roots}, kernel dimension {rep.multiplicity}")

rep = multiplicity_scan(0.0, PhysicalParams(1.0, math.sqrt(32)))
print("alpha0^2/sigma0 = 32: integrality k =", rep.integrality_k, "l =", rep.integrality_l)
