"""Continue the l=2 rotating-wave branch and extrapolate its frequency to zero amplitude.

The frequency is even in the amplitude, so a fit in eps^2 recovers the
resonant value.
"""

import numpy as np

from capdrop import PhysicalParams
from capdrop.linear import resonance_solve
from capdrop.rotating import ContinuationConfig, continue_branch, verify_cross_formulation

p = PhysicalParams(sigma0=1.0, alpha0=0.8)
cfg = ContinuationConfig(ell=2, N=64, targets=(0.002, 0.004, 0.008, 0.016, 0.032))
branch = continue_branch(cfg, p)

print(f"{'eps':>7} {'omega':>18} {'residual':>10} {'cross':>10} {'I':>12} iters")
for bp in branch:
    cross = verify_cross_formulation(bp, p).residual
    print(f"{bp.eps:7.3f} {bp.omega:18.14f} {bp.residual:10.2e} {cross:10.2e} "
          f"{bp.conserved.angular_momentum:12.4e} {bp.iterations:5d}")

eps = np.array([bp.eps for bp in branch])
omega = np.array([bp.omega for bp in branch])
fit = np.polyfit(eps**2, omega, 2)
print("extrapolated omega(0):", fit[-1])
print("resonant omega+      :", resonance_solve(2, 1, p).omega_plus)
print("second-order coefficient:", fit[-2])
