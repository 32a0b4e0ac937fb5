"""Dirichlet-Neumann operator of the unit-disk perturbation in log-polar form.

In the strip coordinates ``(rho, theta)`` with ``x = e^rho (cos theta, sin theta)``
the fluid occupies ``rho < xi(theta)`` and the potential is a sum of decaying
harmonics ``e^{l rho} (a cos l theta + b sin l theta)``.  The operator returns
``Phi_rho - xi' Phi_theta`` on ``rho = xi``, which is the deep-water
Dirichlet-Neumann map of the graph ``xi`` over a 2pi-periodic line.

Three realizations are offered:

``multiplier``
    the flat symbol ``l``; valid only at ``xi = 0``.
``taylor``
    the homogeneous expansion of order ``K`` obtained by expanding the
    harmonic extension in powers of ``xi``.
``oracle``
    least-squares collocation of the harmonic basis at the grid nodes, used
    as an independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .spectral import SpectralGrid, TorusField, w1inf_norm

__all__ = [
    "DnMethod",
    "SmallnessError",
    "OracleConditioningError",
    "dn_apply",
    "dn_oracle",
    "dn_shape_derivative",
    "conjugate_trace",
    "conjugate_trace_oracle",
    "dn_values",
    "conjugate_values",
]


class SmallnessError(ValueError):
    """The boundary perturbation is too large for the expansion to be trusted."""


class OracleConditioningError(RuntimeError):
    """The collocation matrix is too ill-conditioned to be used as a reference."""


@dataclass(frozen=True)
class DnMethod:
    """Choice of realization for the Dirichlet-Neumann operator."""

    kind: str = "taylor"
    order: int = 4
    max_order: int = 16
    smallness: float = 0.1
    oracle_rcond: float = 1e-12
    oracle_max_condition: float = 1e10

    def __post_init__(self):
        if self.kind not in ("multiplier", "taylor", "oracle"):
            raise ValueError(f"unknown Dirichlet-Neumann realization {self.kind!r}")
        if self.kind == "taylor":
            if self.order < 1:
                raise ValueError("taylor order must be at least 1")
            if self.order > self.max_order:
                raise ValueError(f"taylor order {self.order} exceeds configured maximum {self.max_order}")
        if self.smallness <= 0:
            raise ValueError("smallness threshold must be positive")

    @classmethod
    def multiplier(cls) -> "DnMethod":
        return cls(kind="multiplier")

    @classmethod
    def taylor(cls, order: int = 4, **kw) -> "DnMethod":
        return cls(kind="taylor", order=order, **kw)

    @classmethod
    def oracle(cls, **kw) -> "DnMethod":
        return cls(kind="oracle", **kw)


DEFAULT_METHOD = DnMethod()


def check_smallness(grid: SpectralGrid, xi: np.ndarray, delta0: float) -> None:
    size = w1inf_norm(grid, xi)
    if not size < delta0:
        raise SmallnessError(
            f"boundary perturbation has W^1,inf norm {size:.4g}, above the trusted bound {delta0:.4g}"
        )


def _taylor_values(grid: SpectralGrid, xi: np.ndarray, chi: np.ndarray, order: int) -> np.ndarray:
    N = grid.N
    k = grid.wavenumbers
    dsym = grid._deriv_symbol
    irfft = np.fft.irfft
    # xi^m / m!
    powers = [np.ones(N)]
    for m in range(1, order + 1):
        powers.append(powers[-1] * xi / m)
    # Dirichlet data of the flat extension, order by order: a_0 = chi,
    # a_n = -sum_{m=1..n} xi^m/m! |D|^m a_{n-m}
    a_hat = [np.fft.rfft(chi) * grid._dealias_mask]
    for n in range(1, order + 1):
        acc = np.zeros(N)
        for m in range(1, n + 1):
            acc += powers[m] * irfft(k**m * a_hat[n - m], n=N)
        a_hat.append(np.fft.rfft(-acc))
    partial = np.cumsum(np.array(a_hat), axis=0)
    # Phi_rho - xi' Phi_theta at rho = xi, truncated at total degree K
    out = np.zeros(N)
    for m in range(order + 1):
        out += powers[m] * irfft(k ** (m + 1) * partial[order - m], n=N)
    tangential = np.zeros(N)
    for m in range(order):
        tangential += powers[m] * irfft(dsym * k**m * partial[order - 1 - m], n=N)
    out -= grid.deriv(xi) * tangential
    return grid.dealias(out)


def _oracle_solve(grid: SpectralGrid, xi: np.ndarray, chi: np.ndarray, method: DnMethod):
    theta = grid.nodes
    ells = np.arange(1, grid.M)
    growth = np.exp(np.outer(xi, ells))
    cos_l = np.cos(np.outer(theta, ells))
    sin_l = np.sin(np.outer(theta, ells))
    nyq = np.exp(grid.M * xi) * np.cos(grid.M * theta)
    A = np.column_stack([np.ones(grid.N), growth * cos_l, growth * sin_l, nyq])
    sv = np.linalg.svd(A, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if cond > method.oracle_max_condition:
        raise OracleConditioningError(
            f"collocation matrix condition number {cond:.3e} exceeds {method.oracle_max_condition:.1e}"
        )
    coef, *_ = np.linalg.lstsq(A, chi, rcond=method.oracle_rcond)
    nb = grid.M - 1
    a, b, a_nyq = coef[1 : 1 + nb], coef[1 + nb : 1 + 2 * nb], coef[-1]
    return ells, growth, cos_l, sin_l, nyq, a, b, a_nyq


def _oracle_values(grid, xi, chi, method):
    ells, growth, cos_l, sin_l, nyq, a, b, a_nyq = _oracle_solve(grid, xi, chi, method)
    M = grid.M
    phi_rho = (growth * (a * cos_l + b * sin_l)) @ ells + M * a_nyq * nyq
    phi_theta = (growth * (b * cos_l - a * sin_l)) @ ells - M * a_nyq * np.exp(M * xi) * np.sin(M * grid.nodes)
    return phi_rho - grid.deriv(xi) * phi_theta


def dn_values(grid: SpectralGrid, xi: np.ndarray, chi: np.ndarray, method: DnMethod = DEFAULT_METHOD) -> np.ndarray:
    """Array-level evaluation of the Dirichlet-Neumann operator."""
    if method.kind == "multiplier":
        if np.any(xi != 0.0):
            raise ValueError("the multiplier realization is only valid for xi = 0")
        return grid.dealias(grid.abs_deriv(chi))
    check_smallness(grid, xi, method.smallness)
    if method.kind == "taylor":
        return _taylor_values(grid, xi, chi, method.order)
    return _oracle_values(grid, xi, chi, method)


def dn_apply(xi: TorusField, chi: TorusField, method: DnMethod = DEFAULT_METHOD) -> TorusField:
    """Apply the Dirichlet-Neumann operator at boundary ``xi`` to trace ``chi``."""
    return TorusField(xi.grid, dn_values(xi.grid, xi.values, chi.values, method))


def dn_oracle(xi: TorusField, chi: TorusField, method: DnMethod | None = None) -> TorusField:
    method = method or DnMethod.oracle()
    if method.kind != "oracle":
        method = DnMethod.oracle(smallness=method.smallness)
    return dn_apply(xi, chi, method)


def dn_shape_derivative(xi: TorusField, chi: TorusField, direction: TorusField,
                        method: DnMethod = DEFAULT_METHOD) -> TorusField:
    """Derivative of ``G(xi) chi`` with respect to ``xi`` along ``direction``."""
    grid = xi.grid
    xp = grid.deriv(xi.values)
    cp = grid.deriv(chi.values)
    g = dn_values(grid, xi.values, chi.values, method)
    B = (g + xp * cp) / (1.0 + xp**2)
    V = cp - B * xp
    h = direction.values
    out = -dn_values(grid, xi.values, B * h, method) - grid.deriv(V * h)
    return TorusField(grid, grid.dealias(out))


def conjugate_values(grid: SpectralGrid, xi: np.ndarray, chi: np.ndarray,
                     method: DnMethod = DEFAULT_METHOD) -> np.ndarray:
    return grid.antideriv(dn_values(grid, xi, chi, method))


def conjugate_trace(xi: TorusField, chi: TorusField, method: DnMethod = DEFAULT_METHOD,
                    solve: bool = False, tol: float = 1e-13) -> TorusField:
    """Zero-mean trace of the harmonic conjugate of the extension of ``chi``.

    By default this is the zero-mean antiderivative of ``G(xi) chi``.  With
    ``solve=True`` it is computed instead as ``-G(xi)^{-1} chi'`` by a
    preconditioned Krylov solve on zero-mean data.
    """
    grid = xi.grid
    if not solve:
        return TorusField(grid, conjugate_values(grid, xi.values, chi.values, method))
    rhs = -grid.deriv(chi.values)
    k = grid.wavenumbers.copy()
    k[0] = 1.0

    def apply_G(u):
        return grid.zero_mean(dn_values(grid, xi.values, grid.zero_mean(u), method))

    def precond(u):
        return grid._apply_symbol(grid.zero_mean(u), 1.0 / k)

    op = LinearOperator((grid.N, grid.N), matvec=apply_G, dtype=float)
    pre = LinearOperator((grid.N, grid.N), matvec=precond, dtype=float)
    u, info = gmres(op, rhs, M=pre, rtol=tol, atol=0.0, restart=grid.N, maxiter=10)
    if info != 0:
        raise SmallnessError("Dirichlet-Neumann inversion did not converge; the boundary is too far from circular")
    return TorusField(grid, grid.dealias(grid.zero_mean(u)))


def conjugate_trace_oracle(xi: TorusField, chi: TorusField, method: DnMethod | None = None) -> TorusField:
    """Harmonic-conjugate trace read off the collocation fit."""
    grid = xi.grid
    method = method or DnMethod.oracle()
    check_smallness(grid, xi.values, method.smallness)
    ells, growth, cos_l, sin_l, nyq, a, b, a_nyq = _oracle_solve(grid, xi.values, chi.values, method)
    psi = (growth * (a * sin_l - b * cos_l)).sum(axis=1) + a_nyq * np.exp(grid.M * xi.values) * np.sin(grid.M * grid.nodes)
    return TorusField(grid, grid.zero_mean(psi))
