"""Evolution equations of the drop and their time integration."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dirichlet_neumann import DEFAULT_METHOD, DnMethod, SmallnessError, dn_values
from .functionals import (
    ConservedSet,
    NaturalState,
    PhysicalParams,
    WahlenState,
    conserved_set,
    natural_gradient_values,
    wahlen_gradient_values,
)
from .spectral import SpectralGrid, TorusField, w1inf_norm

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "SimulationAborted",
    "StepRejected",
    "rhs_natural",
    "rhs_quasi_hamiltonian",
    "rhs_hamiltonian_natural",
    "rhs_wahlen",
    "wahlen_pushforward",
    "step",
    "simulate",
    "simulate_natural",
]


class SimulationAborted(RuntimeError):
    """Raised when the profile leaves the small-amplitude regime; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepRejected(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    T: float = 1.0
    monitor_every: int = 1
    midpoint_tol: float = 1e-12
    midpoint_max_iter: int = 100

    def __post_init__(self):
        if self.scheme not in ("rk4", "implicit-midpoint"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.monitor_every < 1:
            raise ValueError("monitor_every must be a positive step count")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


# ---------------------------------------------------------------------------
# right-hand sides (array level)


def natural_rhs_values(grid, xi, chi, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    s0, a0 = p.sigma0, p.alpha0
    xp, cp = grid.deriv(xi), grid.deriv(chi)
    g = dn_values(grid, xi, chi, method)
    s = np.sqrt(1.0 + xp**2)
    ex = np.exp(xi)
    e2 = ex * ex
    em2 = 1.0 / e2
    xi_dot = em2 * g + 0.5 * a0 * xp
    bracket = 0.5 * ((g + xp * cp) / s) ** 2 - 0.5 * cp**2 + s0 * ex * (grid.deriv(xp / s) - 1.0 / s)
    chi_dot = (
        em2 * bracket
        + 0.5 * a0 * cp
        + a0**2 / 8.0 * e2
        + a0 * grid.antideriv(g)
        + s0
        - a0**2 / 8.0
    )
    return grid.dealias(xi_dot), grid.dealias(chi_dot)


def wahlen_rhs_values(grid, zeta, gamma, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    dz, dg = wahlen_gradient_values(grid, zeta, gamma, p, method, dealias=False)
    em2 = np.exp(-2.0 * zeta)
    return grid.dealias(em2 * dg), grid.zero_mean(grid.dealias(-em2 * dz))


# ---------------------------------------------------------------------------
# right-hand sides (field level)


def rhs_natural(state: NaturalState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    grid = state.grid
    a, b = natural_rhs_values(grid, state.xi.values, state.chi.values, p, method)
    return TorusField(grid, a), TorusField(grid, b)


def rhs_quasi_hamiltonian(state: NaturalState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    """``J(xi) grad H`` plus the non-Hamiltonian vorticity correction."""
    grid = state.grid
    xi, chi = state.xi.values, state.chi.values
    d_xi, d_chi, g = natural_gradient_values(grid, xi, chi, p, method)
    em2 = np.exp(-2.0 * xi)
    corr = p.alpha0 * grid.antideriv(g) + p.alpha0**2 / 4.0 * np.exp(2.0 * xi)
    return TorusField(grid, grid.dealias(em2 * d_chi)), TorusField(grid, grid.dealias(-em2 * d_xi + corr))


def rhs_hamiltonian_natural(state: NaturalState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    """Vorticity-modified symplectic form applied to ``grad H``.

    The potential component agrees with :func:`rhs_natural` up to a spatial
    constant, i.e. as an element of the quotient by constants.
    """
    grid = state.grid
    xi, chi = state.xi.values, state.chi.values
    d_xi, d_chi, _ = natural_gradient_values(grid, xi, chi, p, method)
    em2 = np.exp(-2.0 * xi)
    chi_dot = -em2 * d_xi + p.alpha0 * grid.antideriv(d_chi)
    return TorusField(grid, grid.dealias(em2 * d_chi)), TorusField(grid, grid.dealias(chi_dot))


def rhs_wahlen(state: WahlenState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    grid = state.grid
    a, b = wahlen_rhs_values(grid, state.zeta.values, state.gamma.values, p, method)
    return TorusField(grid, a), TorusField(grid, b)


def wahlen_pushforward(state: WahlenState, tangent, p: PhysicalParams):
    """Differential of the Wahlen map applied to a tangent vector ``(dzeta, dgamma)``."""
    grid = state.grid
    dz, dg = (t.values for t in tangent)
    dchi = dg + 0.5 * p.alpha0 * grid.antideriv(np.exp(2.0 * state.zeta.values) * dz)
    return TorusField(grid, dz), TorusField(grid, dchi)


# ---------------------------------------------------------------------------
# integrators


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _implicit_midpoint(f, y, dt, tol, max_iter):
    y_new = y + dt * f(y)
    scale = 1.0 + np.max(np.abs(y))
    for _ in range(max_iter):
        candidate = y + dt * f(0.5 * (y + y_new))
        change = np.max(np.abs(candidate - y_new))
        y_new = candidate
        if change <= tol * scale:
            return y_new
    raise StepRejected(f"implicit midpoint iteration did not reach {tol:g} in {max_iter} iterations")


def _vector_field(grid, p, method, kind):
    N = grid.N
    rhs = wahlen_rhs_values if kind == "wahlen" else natural_rhs_values

    def f(y):
        a, b = rhs(grid, y[:N], y[N:], p, method)
        return np.concatenate([a, b])

    return f


def _advance(f, y, config: IntegratorConfig):
    if config.scheme == "rk4":
        y_new = _rk4(f, y, config.dt)
    else:
        y_new = _implicit_midpoint(f, y, config.dt, config.midpoint_tol, config.midpoint_max_iter)
    if not np.all(np.isfinite(y_new)):
        raise StepRejected("non-finite values produced by the time step")
    return y_new


def step(state, p: PhysicalParams, config: IntegratorConfig, method: DnMethod = DEFAULT_METHOD):
    """Advance a Wahlen or natural state by one time step."""
    grid = state.grid
    if isinstance(state, WahlenState):
        y = state.pack()
        y = _advance(_vector_field(grid, p, method, "wahlen"), y, config)
        return WahlenState.unpack(grid, y)
    y = np.concatenate([state.xi.values, state.chi.values])
    y = _advance(_vector_field(grid, p, method, "natural"), y, config)
    return NaturalState.from_values(grid, y[: grid.N], y[grid.N :])


@dataclass
class Trajectory:
    """Monitored samples of a Wahlen trajectory."""

    grid: SpectralGrid
    params: PhysicalParams
    times: list[float] = field(default_factory=list)
    states: list[WahlenState] = field(default_factory=list)
    conserved: list[ConservedSet] = field(default_factory=list)

    def append(self, t, state, cons):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        self.times.append(float(t))
        self.states.append(state)
        self.conserved.append(cons)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.conserved])

    def columns(self) -> list[str]:
        labels = [f"{l}_{m}" for l, m in self.grid.mode_index]
        return (["t"] + [f"zeta_{s}" for s in labels] + [f"gamma_{s}" for s in labels]
                + ["H", "I", "V", "Bx", "By", "Px", "Py"])

    def rows(self):
        for t, w, c in zip(self.times, self.states, self.conserved):
            yield [t, *w.zeta.coeffs, *w.gamma.coeffs, *c.as_row()]

    def to_csv(self, path, comments: list[str] = ()):
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(self.columns())
            for row in self.rows():
                writer.writerow([format(float(v), ".17g") for v in row])


def simulate(state: WahlenState, p: PhysicalParams, config: IntegratorConfig,
             method: DnMethod = DEFAULT_METHOD) -> Trajectory:
    """Integrate the Wahlen-coordinate flow and monitor the conserved quantities."""
    grid = state.grid
    f = _vector_field(grid, p, method, "wahlen")
    traj = Trajectory(grid, p)
    traj.append(0.0, state, conserved_set(state, p, method))
    y = state.pack()
    for n in range(1, config.n_steps + 1):
        try:
            y = _advance(f, y, config)
        except SmallnessError as exc:
            raise SimulationAborted(f"step {n}: {exc}", traj) from exc
        size = w1inf_norm(grid, y[: grid.N])
        if size >= method.smallness:
            raise SimulationAborted(
                f"step {n}: profile W^1,inf norm {size:.4g} reached the bound {method.smallness:.4g}", traj)
        if n % config.monitor_every == 0 or n == config.n_steps:
            w = WahlenState.unpack(grid, y)
            traj.append(n * config.dt, w, conserved_set(w, p, method))
    return traj


def simulate_natural(state: NaturalState, p: PhysicalParams, config: IntegratorConfig,
                     method: DnMethod = DEFAULT_METHOD) -> list[tuple[float, NaturalState]]:
    """Integrate the natural-coordinate equations; returns monitored samples."""
    grid = state.grid
    f = _vector_field(grid, p, method, "natural")
    y = np.concatenate([state.xi.values, state.chi.values])
    out = [(0.0, state)]
    for n in range(1, config.n_steps + 1):
        y = _advance(f, y, config)
        if n % config.monitor_every == 0 or n == config.n_steps:
            out.append((n * config.dt, NaturalState.from_values(grid, y[: grid.N], y[grid.N :])))
    return out

