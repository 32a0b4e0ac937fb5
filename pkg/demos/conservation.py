"""Drift of the conserved quantities along an RK4 run, and its time-step order."""

import numpy as np

from capdrop import PhysicalParams, SpectralGrid, WahlenState
from capdrop.dynamics import IntegratorConfig, simulate
from capdrop.spectral import random_field

p = PhysicalParams(sigma0=1.0, alpha0=1.5)
grid = SpectralGrid(32)
rng = np.random.default_rng(3)
start = WahlenState.from_values(grid, random_field(grid, rng, 0.02, max_mode=4).values,
                                random_field(grid, rng, 0.02, max_mode=4).values)

print(f"{'dt':>6} {'H drift':>11} {'I drift':>11} {'V drift':>11}")
drifts = []
for dt in (0.04, 0.02, 0.01):
    traj = simulate(start, p, IntegratorConfig(dt=dt, T=5.0, monitor_every=25))
    row = [np.max(np.abs(traj.series(name) - traj.series(name)[0]))
           for name in ("hamiltonian", "angular_momentum", "volume")]
    drifts.append(row[0])
    print(f"{dt:6.3f} " + " ".join(f"{d:11.3e}" for d in row))

orders = np.log2(np.array(drifts[:-1]) / np.array(drifts[1:]))
print("observed order of the energy drift:", np.round(orders, 2))
