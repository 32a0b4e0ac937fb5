"""Rotating waves: Newton solves and branch continuation.

A rotating wave ``u(t, theta) = u0(theta + omega t)`` of the Wahlen flow is a
zero of

    F(omega, u) = grad H - omega grad I - (alpha0^2/4) grad V,

whose second component lives on zero-mean functions.  The volume term is
the Lagrange multiplier that makes the circle a critical point; any
multiplier gives the same dynamics because ``e^{-2 zeta} grad V`` is
constant.

Unknowns are restricted to the reflection-symmetric subspace of the chosen
fold: ``zeta`` is a cosine series and ``gamma`` a sine series in multiples
of the base mode ``n = kappa * l``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dirichlet_neumann import DEFAULT_METHOD, DnMethod
from .dynamics import rhs_natural
from .functionals import (
    ConservedSet,
    PhysicalParams,
    WahlenState,
    angular_momentum_gradient_values,
    angular_momentum_values,
    conserved_set,
    wahlen_forward,
    wahlen_gradient_values,
)
from .linear import block_Lomega, kernel_coefficients, resonance_solve
from .spectral import SpectralGrid, TorusField

__all__ = [
    "ContinuationConfig",
    "BranchPoint",
    "NewtonFailure",
    "residual_F",
    "newton_solve",
    "continue_branch",
    "branch_complete",
    "verify_cross_formulation",
    "symmetry_defect",
    "write_branch",
]


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ContinuationConfig:
    ell: int
    kappa: int = 1
    N: int = 64
    parametrization: str = "amplitude"
    eps: float = 1e-3
    targets: tuple[float, ...] = ()
    branch: str = "plus"
    tol: float = 1e-11
    max_iter: int = 50
    fd_step: float = 1e-7
    full_fd: bool = False
    min_step_fraction: float = 1.0 / 64

    def __post_init__(self):
        if self.ell < 1 or self.kappa < 1:
            raise ValueError("ell and kappa must be positive")
        if self.parametrization not in ("amplitude", "angular-momentum"):
            raise ValueError(f"unknown parametrization {self.parametrization!r}")
        if self.branch not in ("plus", "minus"):
            raise ValueError("branch selects the 'plus' or 'minus' resonant frequency")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))

    @property
    def base_mode(self) -> int:
        return self.kappa * self.ell


@dataclass
class BranchPoint:
    omega: float
    state: WahlenState
    eps: float
    residual: float
    conserved: ConservedSet
    iterations: int = 0
    target: float | None = None


def _rotating_residual_values(grid, zeta, gamma, omega, p, method):
    dz, dg = wahlen_gradient_values(grid, zeta, gamma, p, method)
    iz, ig = angular_momentum_gradient_values(grid, zeta, gamma)
    vz = grid.dealias(np.exp(2.0 * zeta))
    return dz - omega * iz - 0.25 * p.alpha0**2 * vz, grid.zero_mean(dg - omega * ig)


def residual_F(omega: float, state: WahlenState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    """Rotating-wave residual at frequency ``omega``."""
    grid = state.grid
    a, b = _rotating_residual_values(grid, state.zeta.values, state.gamma.values, omega, p, method)
    return TorusField(grid, a), TorusField(grid, b)


class _Reduced:
    """Coordinates on the symmetric subspace: ``[zeta_cos(j n), j=0..J; gamma_sin(j n), j=1..J; omega]``."""

    def __init__(self, grid: SpectralGrid, n: int):
        J = grid.dealias_cutoff // n
        if J < 1:
            raise ValueError(f"grid N={grid.N} cannot resolve mode {n} after dealiasing")
        self.grid, self.n, self.J = grid, n, J
        self.zslots = [0] + [grid.slot(j * n, 1) for j in range(1, J + 1)]
        self.gslots = [grid.slot(j * n, -1) for j in range(1, J + 1)]
        self.size = len(self.zslots) + len(self.gslots)

    def fields(self, x):
        cz, cg = np.zeros(self.grid.N), np.zeros(self.grid.N)
        cz[self.zslots] = x[: len(self.zslots)]
        cg[self.gslots] = x[len(self.zslots) : self.size]
        return self.grid.from_coeffs(cz), self.grid.from_coeffs(cg)

    def project(self, a, b):
        ca, cb = self.grid.to_coeffs(a), self.grid.to_coeffs(b)
        return np.concatenate([ca[self.zslots], cb[self.gslots]])

    def linear_part(self, omega, p):
        """``L_omega`` at the circle in reduced coordinates (diagonal 2x2 blocks)."""
        L = np.zeros((self.size, self.size))
        nz = len(self.zslots)
        L[0, 0] = block_Lomega(0, 0, omega, p).matrix[0, 0]
        for j in range(1, self.J + 1):
            b = block_Lomega(j * self.n, 1, omega, p).matrix
            z, g = j, nz + j - 1
            L[z, z], L[z, g], L[g, z], L[g, g] = b[0, 0], b[0, 1], b[1, 0], b[1, 1]
        return L


def _state(red: _Reduced, x) -> WahlenState:
    z, g = red.fields(x)
    return WahlenState.from_values(red.grid, z, g)


def symmetry_defect(state: WahlenState, n: int) -> float:
    """Distance of a state from the reflection-symmetric ``n``-fold subspace."""
    grid = state.grid
    cz, cg = state.zeta.coeffs, state.gamma.coeffs
    bad = 0.0
    for i, (ell, m) in enumerate(grid.mode_index):
        if ell % n != 0 or m == -1:
            bad = max(bad, abs(cz[i]))
        if ell % n != 0 or m != -1:
            bad = max(bad, abs(cg[i]))
    return bad


class _System:
    def __init__(self, red: _Reduced, p: PhysicalParams, method: DnMethod, cfg: ContinuationConfig, kernel):
        self.red, self.p, self.method, self.cfg = red, p, method, cfg
        self.kernel = kernel  # (zeta_cos(n), gamma_sin(n)) weights of the unit kernel vector

    def F(self, x, omega):
        z, g = self.red.fields(x)
        a, b = _rotating_residual_values(self.red.grid, z, g, omega, self.p, self.method)
        return self.red.project(a, b)

    def grad_I(self, x):
        z, g = self.red.fields(x)
        return self.red.project(*angular_momentum_gradient_values(self.red.grid, z, g))

    @staticmethod
    def _momentum_scale(target):
        # I is quadratic in the amplitude; dividing by sqrt|I| puts its
        # residual in amplitude units so one Newton tolerance fits both rows
        return math.sqrt(abs(target)) or 1.0

    def constraint(self, x, target):
        if self.cfg.parametrization == "amplitude":
            return x[1] * self.kernel[0] + x[len(self.red.zslots)] * self.kernel[1] - target
        z, g = self.red.fields(x)
        return (angular_momentum_values(self.red.grid, z, g) - target) / self._momentum_scale(target)

    def constraint_row(self, x, target):
        row = np.zeros(self.red.size)
        if self.cfg.parametrization == "amplitude":
            row[1], row[len(self.red.zslots)] = self.kernel
            return row
        # the L2 gradient of I in orthonormal coordinates is its coefficient vector
        return self.grad_I(x) / self._momentum_scale(target)

    def G(self, y, target):
        x, omega = y[:-1], y[-1]
        return np.append(self.F(x, omega), self.constraint(x, target))

    def jacobian(self, y, target):
        x, omega = y[:-1], y[-1]
        n, h = self.red.size, self.cfg.fd_step
        if self.cfg.full_fd:
            lin = np.zeros((n, n))
            rem = lambda v: self.F(v, omega)  # noqa: E731
        else:
            lin = self.red.linear_part(omega, self.p)
            rem = lambda v: self.F(v, omega) - lin @ v  # noqa: E731
        Jx = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            Jx[:, j] = (rem(x + e) - rem(x - e)) / (2.0 * h)
        Jx += lin
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = Jx
        out[:n, n] = -self.grad_I(x)
        out[n, :n] = self.constraint_row(x, target)
        return out


def _newton(system: _System, y0, target, tol, max_iter):
    y = np.array(y0, dtype=float)
    res = system.G(y, target)
    for it in range(max_iter + 1):
        norm = float(np.max(np.abs(res)))
        if not math.isfinite(norm):
            raise NewtonFailure(f"residual became non-finite at iteration {it}")
        if norm <= tol:
            return y, norm, it
        if it == max_iter:
            break
        y = y - np.linalg.solve(system.jacobian(y, target), res)
        res = system.G(y, target)
    raise NewtonFailure(f"Newton did not reach {tol:g} in {max_iter} iterations (residual {norm:.3e})")


def _setup(cfg: ContinuationConfig, p: PhysicalParams, method: DnMethod):
    grid = SpectralGrid(cfg.N)
    red = _Reduced(grid, cfg.base_mode)
    sol = resonance_solve(cfg.ell, cfg.kappa, p)
    omega_star = sol.omega_plus if cfg.branch == "plus" else sol.omega_minus
    if omega_star is None:
        raise ValueError(f"mode {cfg.base_mode} has no real resonant frequency (delta = {sol.delta})")
    kernel = kernel_coefficients(cfg.base_mode, omega_star, p)[1]
    return grid, red, omega_star, _System(red, p, method, cfg, kernel)


def _point(system: _System, y, eps, residual, it, method) -> BranchPoint:
    w = _state(system.red, y[:-1])
    return BranchPoint(float(y[-1]), w, float(eps), residual, conserved_set(w, system.p, method), it)


def _seed_vector(system: _System, eps, omega_star):
    y = np.zeros(system.red.size + 1)
    y[1] = eps * system.kernel[0]
    y[len(system.red.zslots)] = eps * system.kernel[1]
    y[-1] = omega_star
    return y


def _from_state(system: _System, state: WahlenState, omega):
    red = system.red
    x = np.concatenate([state.zeta.coeffs[red.zslots], state.gamma.coeffs[red.gslots]])
    return np.append(x, omega)


def _amplitude(system: _System, y):
    return float(y[1] * system.kernel[0] + y[len(system.red.zslots)] * system.kernel[1])


def newton_solve(cfg: ContinuationConfig, p: PhysicalParams, seed: WahlenState | None = None,
                 seed_omega: float | None = None, method: DnMethod = DEFAULT_METHOD) -> BranchPoint:
    """Solve for a rotating wave of amplitude ``cfg.eps`` on the seed kernel direction.

    In angular-momentum mode ``cfg.eps`` is the target value of ``I`` and a
    seed from the amplitude branch is required.
    """
    grid, red, omega_star, system = _setup(cfg, p, method)
    if seed is None:
        if cfg.parametrization != "amplitude":
            raise ValueError("angular-momentum solves need a seed state on the branch")
        y0 = _seed_vector(system, cfg.eps, omega_star)
    else:
        if seed.grid.N != grid.N:
            raise ValueError("seed grid does not match the configured N")
        y0 = _from_state(system, seed, omega_star if seed_omega is None else seed_omega)
    y, res, it = _newton(system, y0, cfg.eps, cfg.tol, cfg.max_iter)
    point = _point(system, y, _amplitude(system, y), res, it, method)
    defect = symmetry_defect(point.state, cfg.base_mode)
    if defect > 1e-10:
        raise NewtonFailure(f"solution left the symmetric subspace (defect {defect:.3e})")
    return point


def _momentum_seed(cfg, p, method):
    """Amplitude-branch point whose angular momentum is close to the first target."""
    amp_cfg = ContinuationConfig(**{**asdict(cfg), "parametrization": "amplitude", "targets": ()})
    probe = newton_solve(ContinuationConfig(**{**asdict(amp_cfg), "eps": 1e-3}), p, method=method)
    coeff = probe.conserved.angular_momentum / 1e-6
    if coeff * cfg.targets[0] <= 0:
        raise NewtonFailure("the requested angular momentum has the wrong sign for this branch")
    eps0 = math.sqrt(cfg.targets[0] / coeff)
    return newton_solve(ContinuationConfig(**{**asdict(amp_cfg), "eps": eps0}), p, method=method)


def continue_branch(cfg: ContinuationConfig, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> list[BranchPoint]:
    """March along ``cfg.targets`` (amplitudes or angular momenta), warm-starting Newton.

    A failed step is retried from the midpoint, halving down to
    ``min_step_fraction`` of the original step; below that the partial
    branch is returned.  Accepted intermediate points stay on the branch, so
    use :func:`branch_complete` rather than counting points.
    """
    targets = cfg.targets or (cfg.eps,)
    _, _, omega_star, system = _setup(cfg, p, method)
    if cfg.parametrization == "amplitude":
        prev_target, prev_y = 0.0, _seed_vector(system, 0.0, omega_star)
    else:
        start = _momentum_seed(cfg, p, method)
        prev_target = start.conserved.angular_momentum
        prev_y = _from_state(system, start.state, start.omega)
    branch = []
    for target in targets:
        step = target - prev_target
        floor = abs(step) * cfg.min_step_fraction
        current = target
        while True:
            frac = (current - prev_target) / (target - prev_target) if target != prev_target else 1.0
            if cfg.parametrization == "amplitude":
                y0 = _seed_vector(system, current, prev_y[-1]) if prev_target == 0.0 else \
                    np.append(prev_y[:-1] * (current / prev_target), prev_y[-1])
            else:
                y0 = prev_y
            try:
                y, res, it = _newton(system, y0, current, cfg.tol, cfg.max_iter)
            except (NewtonFailure, np.linalg.LinAlgError, ValueError):
                if abs(current - prev_target) / 2 < floor or frac <= 0:
                    return branch
                current = prev_target + 0.5 * (current - prev_target)
                continue
            eps = _amplitude(system, y)
            point = _point(system, y, eps, res, it, method)
            point.target = current
            branch.append(point)
            prev_target, prev_y = current, y
            if current == target:
                break
            current = target
    return branch


def branch_complete(branch: list[BranchPoint], cfg: ContinuationConfig) -> bool:
    targets = cfg.targets or (cfg.eps,)
    return bool(branch) and branch[-1].target == targets[-1]


@dataclass(frozen=True)
class CrossFormulationReport:
    xi_residual: float
    chi_residual: float

    @property
    def residual(self) -> float:
        return max(self.xi_residual, self.chi_residual)


def verify_cross_formulation(bp: BranchPoint, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> CrossFormulationReport:
    """Check the natural-coordinate rotating-wave equations for a Wahlen solution.

    The potential equation is checked modulo constants.
    """
    nat = wahlen_forward(bp.state, p)
    grid = nat.grid
    xi_dot, chi_dot = rhs_natural(nat, p, method)
    r1 = xi_dot.values - bp.omega * grid.deriv(nat.xi.values)
    r2 = grid.zero_mean(chi_dot.values - bp.omega * grid.deriv(nat.chi.values))
    return CrossFormulationReport(float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))


def write_branch(branch: list[BranchPoint], csv_path, json_path, metadata: dict, n_modes: int = 4,
                 comments: list[str] = ()):
    """Export a branch as a CSV table plus a JSON metadata file."""
    if not branch:
        header_modes = []
    else:
        header_modes = branch[0].state.grid.mode_index[: 2 * n_modes + 1]
    cols = ["eps", "omega", "residual", "H", "I", "V"]
    cols += [f"zeta_{l}_{m}" for l, m in header_modes] + [f"gamma_{l}_{m}" for l, m in header_modes]
    with open(csv_path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        k = len(header_modes)
        for bp in branch:
            c = bp.conserved
            row = [bp.eps, bp.omega, bp.residual, c.hamiltonian, c.angular_momentum, c.volume,
                   *bp.state.zeta.coeffs[:k], *bp.state.gamma.coeffs[:k]]
            writer.writerow([format(float(v), ".17g") for v in row])
    meta = dict(metadata)
    meta["points"] = [{"eps": bp.eps, "omega": bp.omega, "residual": bp.residual, "iterations": bp.iterations,
                       "target": bp.target}
                      for bp in branch]
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
