"""Large-mode behaviour of the Hessian blocks at the circle.

The lower eigenvalue grows like l with slope 1 whatever sigma0 is; the upper
one grows like sigma0 * l^2.
"""

from capdrop import PhysicalParams
from capdrop.linear import hessian_spectrum

L = 400
for sigma0 in (0.25, 1.0, 4.0):
    p = PhysicalParams(sigma0, 1.0)
    row = hessian_spectrum(p, L)[-1]
    print(f"sigma0={sigma0:5.2f}: lambda-(L)/L = {row['lambda_minus'] / L:.4f}  "
          f"lambda+(L)/(sigma0 L^2) = {row['lambda_plus'] / (sigma0 * L * L):.4f}")
