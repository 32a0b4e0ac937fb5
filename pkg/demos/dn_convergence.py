"""Taylor truncation order versus the collocation oracle.

For a fixed profile shape scaled by ``a``, the truncated expansion of order
``K`` should miss the oracle by roughly ``a**(K+1)``.
"""

import numpy as np

from capdrop import DnMethod, SpectralGrid, TorusField, dn_apply, dn_oracle

grid = SpectralGrid(64)
shape = np.cos(grid.nodes) + 0.5 * np.sin(2 * grid.nodes) - 0.25 * np.cos(3 * grid.nodes)
chi = TorusField(grid, np.sin(grid.nodes) + 0.3 * np.cos(4 * grid.nodes))
amplitudes = [0.03, 0.02, 0.01, 0.005]

print(f"{'K':>3} " + " ".join(f"a={a:<9g}" for a in amplitudes) + "  slope")
for K in (1, 2, 3, 4, 6):  # beyond 6 the oracle floor (~2e-14) dominates
    errors = []
    for a in amplitudes:
        xi = TorusField(grid, a * shape)
        ref = dn_oracle(xi, chi).values
        approx = dn_apply(xi, chi, DnMethod.taylor(order=K)).values
        errors.append(np.max(np.abs(approx - ref)) / np.max(np.abs(ref)))
    slope = np.polyfit(np.log(amplitudes), np.log(errors), 1)[0]
    print(f"{K:>3} " + " ".join(f"{e:<11.3e}" for e in errors) + f"  {slope:5.2f}")
