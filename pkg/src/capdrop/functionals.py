"""Energy, momenta, volume, barycenter and curvature of a rotating drop.

A drop boundary is ``r = e^{xi(theta)}``; ``chi`` is the trace of the
velocity potential of the irrotational part of the flow.  The shear of the
potential

    chi = gamma + (alpha0/4) * antideriv(e^{2 zeta})

maps Wahlen coordinates ``(zeta, gamma)`` to natural ones ``(xi, chi)``.
Gradients are L2 gradients with respect to the trapezoidal inner product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dirichlet_neumann import DEFAULT_METHOD, DnMethod, check_smallness, dn_values
from .spectral import SpectralGrid, TorusField

__all__ = [
    "PhysicalParams",
    "NaturalState",
    "WahlenState",
    "ConservedSet",
    "hamiltonian_natural",
    "natural_gradient",
    "wahlen_forward",
    "wahlen_inverse",
    "hamiltonian_wahlen",
    "grad_hamiltonian_wahlen",
    "angular_momentum",
    "grad_angular_momentum",
    "volume",
    "grad_volume",
    "barycenter_velocity",
    "barycenter_position",
    "conserved_set",
    "curvature",
    "translate_state",
    "reflect_state",
    "shift_potential",
]


@dataclass(frozen=True)
class PhysicalParams:
    sigma0: float
    alpha0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ValueError(f"sigma0 must be a positive number, got {self.sigma0!r}")
        if not math.isfinite(self.alpha0):
            raise ValueError(f"alpha0 must be finite, got {self.alpha0!r}")

    @property
    def modified_bond(self) -> float | None:
        """``sigma0 / alpha0**2``; ``None`` without vorticity."""
        a2 = self.alpha0**2
        return self.sigma0 / a2 if a2 > 0 else None


@dataclass(frozen=True, eq=False)
class NaturalState:
    xi: TorusField
    chi: TorusField

    @property
    def grid(self) -> SpectralGrid:
        return self.xi.grid

    @classmethod
    def from_values(cls, grid, xi, chi) -> "NaturalState":
        return cls(TorusField(grid, xi), TorusField(grid, chi))


@dataclass(frozen=True, eq=False)
class WahlenState:
    """Wahlen pair; ``gamma`` lives on the zero-mean slice."""

    zeta: TorusField
    gamma: TorusField

    def __post_init__(self):
        g = self.gamma.values
        if abs(np.mean(g)) > 1e-10 * (1.0 + np.max(np.abs(g))):
            raise ValueError("gamma must have zero mean")

    @property
    def grid(self) -> SpectralGrid:
        return self.zeta.grid

    @classmethod
    def from_values(cls, grid, zeta, gamma) -> "WahlenState":
        """Wrap sample arrays, removing the mean of ``gamma``."""
        gamma = np.asarray(gamma, dtype=float)
        return cls(TorusField(grid, zeta), TorusField(grid, gamma - gamma.mean()))

    @classmethod
    def zero(cls, grid) -> "WahlenState":
        return cls(grid.zeros(), grid.zeros())

    def pack(self) -> np.ndarray:
        return np.concatenate([self.zeta.values, self.gamma.values])

    @classmethod
    def unpack(cls, grid, vec) -> "WahlenState":
        return cls.from_values(grid, vec[: grid.N], vec[grid.N :])


@dataclass(frozen=True)
class ConservedSet:
    hamiltonian: float
    angular_momentum: float
    volume: float
    barycenter_velocity: tuple[float, float]
    barycenter_position: tuple[float, float]

    def as_row(self) -> list[float]:
        return [self.hamiltonian, self.angular_momentum, self.volume,
                *self.barycenter_velocity, *self.barycenter_position]


# ---------------------------------------------------------------------------
# array-level kernels


def shear(grid: SpectralGrid, zeta: np.ndarray, alpha0: float) -> np.ndarray:
    """``(alpha0/4) * antideriv(e^{2 zeta})``."""
    return 0.25 * alpha0 * grid.antideriv(np.exp(2.0 * zeta))


def energy_values(grid, xi, chi, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> float:
    s0, a0 = p.sigma0, p.alpha0
    xp, cp = grid.deriv(xi), grid.deriv(chi)
    e2 = np.exp(2.0 * xi)
    integrand = (
        0.5 * chi * dn_values(grid, xi, chi, method)
        + s0 * np.exp(xi) * np.sqrt(1.0 + xp**2)
        - 0.5 * (s0 - a0**2 / 8.0) * e2
        - 0.25 * a0 * e2 * cp
        + a0**2 / 32.0 * e2**2
    )
    return grid.integrate(integrand)


def natural_gradient_values(grid, xi, chi, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    """Partial gradients of the energy in natural coordinates.

    Returns ``(dH/dxi, dH/dchi, G(xi) chi)``.  The ``xi`` partial uses the
    shape-derivative closed form of the kinetic term.
    """
    s0, a0 = p.sigma0, p.alpha0
    xp, cp = grid.deriv(xi), grid.deriv(chi)
    g = dn_values(grid, xi, chi, method)
    s = np.sqrt(1.0 + xp**2)
    ex = np.exp(xi)
    e2 = ex * ex
    kinetic = -0.5 * ((g + xp * cp) / s) ** 2 + 0.5 * cp**2
    surface = -s0 * (ex * grid.deriv(xp / s) - ex / s)
    d_xi = kinetic + surface - s0 * e2 + a0**2 / 8.0 * e2 - 0.5 * a0 * e2 * cp + a0**2 / 8.0 * e2**2
    d_chi = g + 0.5 * a0 * e2 * xp
    return d_xi, d_chi, g


def wahlen_gradient_values(grid, zeta, gamma, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD,
                           dealias: bool = True):
    chi = gamma + shear(grid, zeta, p.alpha0)
    d_xi, d_chi, _ = natural_gradient_values(grid, zeta, chi, p, method)
    d_zeta = d_xi - 0.5 * p.alpha0 * np.exp(2.0 * zeta) * grid.antideriv(d_chi)
    if not dealias:
        return d_zeta, d_chi
    return grid.dealias(d_zeta), grid.dealias(d_chi)


def angular_momentum_values(grid, zeta, gamma) -> float:
    return -0.5 * grid.integrate(np.exp(2.0 * zeta) * grid.deriv(gamma))


def angular_momentum_gradient_values(grid, zeta, gamma):
    e2 = np.exp(2.0 * zeta)
    return grid.dealias(-e2 * grid.deriv(gamma)), grid.dealias(e2 * grid.deriv(zeta))


# ---------------------------------------------------------------------------
# public field-level API


def hamiltonian_natural(state: NaturalState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> float:
    return energy_values(state.grid, state.xi.values, state.chi.values, p, method)


def natural_gradient(state: NaturalState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    grid = state.grid
    d_xi, d_chi, _ = natural_gradient_values(grid, state.xi.values, state.chi.values, p, method)
    return TorusField(grid, grid.dealias(d_xi)), TorusField(grid, grid.dealias(d_chi))


def wahlen_forward(w: WahlenState, p: PhysicalParams) -> NaturalState:
    grid = w.grid
    chi = w.gamma.values + shear(grid, w.zeta.values, p.alpha0)
    return NaturalState(w.zeta, TorusField(grid, chi))


def wahlen_inverse(n: NaturalState, p: PhysicalParams) -> WahlenState:
    grid = n.grid
    gamma = n.chi.values - shear(grid, n.xi.values, p.alpha0)
    return WahlenState.from_values(grid, n.xi.values, gamma)


def hamiltonian_wahlen(w: WahlenState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> float:
    return hamiltonian_natural(wahlen_forward(w, p), p, method)


def grad_hamiltonian_wahlen(w: WahlenState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD):
    grid = w.grid
    dz, dg = wahlen_gradient_values(grid, w.zeta.values, w.gamma.values, p, method)
    return TorusField(grid, dz), TorusField(grid, dg)


def angular_momentum(w: WahlenState) -> float:
    return angular_momentum_values(w.grid, w.zeta.values, w.gamma.values)


def grad_angular_momentum(w: WahlenState):
    grid = w.grid
    dz, dg = angular_momentum_gradient_values(grid, w.zeta.values, w.gamma.values)
    return TorusField(grid, dz), TorusField(grid, dg)


def volume(w: WahlenState) -> float:
    """Area enclosed by the drop boundary."""
    return 0.5 * w.grid.integrate(np.exp(2.0 * w.zeta.values))


def grad_volume(w: WahlenState):
    grid = w.grid
    return TorusField(grid, grid.dealias(np.exp(2.0 * w.zeta.values))), grid.zeros()


def barycenter_velocity_values(grid, zeta, gamma, alpha0) -> tuple[float, float]:
    e1, e2 = np.exp(zeta), np.exp(2.0 * zeta)
    weight = e1 * (grid.deriv(gamma) + 0.25 * alpha0 * grid.zero_mean(e2) - alpha0 / 6.0 * e2)
    theta = grid.nodes
    return grid.integrate(-weight * np.sin(theta)), grid.integrate(weight * np.cos(theta))


def barycenter_position_values(grid, zeta) -> tuple[float, float]:
    """First area moment ``int_Omega x dx`` of the drop."""
    e3 = np.exp(3.0 * zeta) / 3.0
    theta = grid.nodes
    return grid.integrate(e3 * np.cos(theta)), grid.integrate(e3 * np.sin(theta))


def barycenter_velocity(w: WahlenState, p: PhysicalParams) -> tuple[float, float]:
    """Integral of the fluid velocity over the drop."""
    return barycenter_velocity_values(w.grid, w.zeta.values, w.gamma.values, p.alpha0)


def barycenter_position(w: WahlenState) -> tuple[float, float]:
    return barycenter_position_values(w.grid, w.zeta.values)


def conserved_set(w: WahlenState, p: PhysicalParams, method: DnMethod = DEFAULT_METHOD) -> ConservedSet:
    return ConservedSet(
        hamiltonian=hamiltonian_wahlen(w, p, method),
        angular_momentum=angular_momentum(w),
        volume=volume(w),
        barycenter_velocity=barycenter_velocity(w, p),
        barycenter_position=barycenter_position(w),
    )


def curvature(xi: TorusField) -> TorusField:
    """Signed curvature of the curve ``r = e^{xi}``, positive for the circle."""
    grid = xi.grid
    xp = grid.deriv(xi.values)
    s = np.sqrt(1.0 + xp**2)
    return TorusField(grid, np.exp(-xi.values) * (1.0 / s - grid.deriv(xp / s)))


# ---------------------------------------------------------------------------
# symmetry actions


def translate_state(state, alpha: float):
    """Rotate the profile: ``f(theta) -> f(theta + alpha)`` in both components."""
    grid = state.grid
    a, b = (state.xi, state.chi) if isinstance(state, NaturalState) else (state.zeta, state.gamma)
    out = (TorusField(grid, grid.translate(a.values, alpha)), TorusField(grid, grid.translate(b.values, alpha)))
    return type(state)(*out)


def reflect_state(state):
    """``(f, g)(theta) -> (f(-theta), -g(-theta))``."""
    grid = state.grid
    a, b = (state.xi, state.chi) if isinstance(state, NaturalState) else (state.zeta, state.gamma)
    return type(state)(TorusField(grid, grid.reflect(a.values)), TorusField(grid, -grid.reflect(b.values)))


def shift_potential(state: NaturalState, a: float) -> NaturalState:
    return NaturalState(state.xi, state.chi + a)


def validate_small(grid, zeta, method: DnMethod = DEFAULT_METHOD) -> None:
    check_smallness(grid, zeta, method.smallness)
