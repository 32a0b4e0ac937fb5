"""Real trigonometric spectral algebra on the circle.

Fields are sampled on ``N`` equispaced nodes ``theta_j = 2*pi*j/N`` and
expanded against the L2-orthonormal basis

.. math::

    \\varphi_{0,0} = \\frac{1}{\\sqrt{2\\pi}}, \\qquad
    \\varphi_{\\ell,1} = \\frac{\\cos \\ell\\theta}{\\sqrt{\\pi}}, \\qquad
    \\varphi_{\\ell,-1} = \\frac{\\sin \\ell\\theta}{\\sqrt{\\pi}}.

Coefficient vectors are flat real arrays of length ``N`` laid out as
``[(0,0), (1,1), (1,-1), (2,1), (2,-1), ..., (M-1,-1), (M,1)]`` with
``M = N/2``.  The last slot holds the Nyquist cosine, which the grid cannot
separate from aliases; derivative-type operators annihilate it, so the
algebraic identities below are exact on fields whose Nyquist coefficient
vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid with an rfft-based spectral toolbox.

    Parameters
    ----------
    N : int
        Even number of nodes, at least 8.
    dealias_fraction : Fraction
        Modes with ``l > floor(dealias_fraction * N/2)`` are removed by
        :meth:`dealias`.
    """

    N: int
    dealias_fraction: Fraction = field(default=Fraction(2, 3))

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 8 or self.N % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.N!r}")
        frac = Fraction(self.dealias_fraction)
        if not 0 < frac <= 1:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {frac}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "dealias_fraction", frac)

    @property
    def M(self) -> int:
        return self.N // 2

    @cached_property
    def nodes(self) -> np.ndarray:
        theta = 2.0 * np.pi * np.arange(self.N) / self.N
        theta.flags.writeable = False
        return theta

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.arange(self.M + 1, dtype=float)
        k.flags.writeable = False
        return k

    @cached_property
    def dealias_cutoff(self) -> int:
        return math.floor(self.dealias_fraction * self.M)

    @cached_property
    def _deriv_symbol(self) -> np.ndarray:
        s = 1j * self.wavenumbers
        s[-1] = 0.0
        return s

    @cached_property
    def _antideriv_symbol(self) -> np.ndarray:
        s = np.zeros(self.M + 1, dtype=complex)
        s[1:-1] = 1.0 / (1j * self.wavenumbers[1:-1])
        return s

    @cached_property
    def _dealias_mask(self) -> np.ndarray:
        return (self.wavenumbers <= self.dealias_cutoff).astype(float)

    @cached_property
    def mode_index(self) -> list[tuple[int, int]]:
        """``(l, m)`` label of every slot of a coefficient vector."""
        labels = [(0, 0)]
        for ell in range(1, self.M):
            labels += [(ell, 1), (ell, -1)]
        labels.append((self.M, 1))
        return labels

    @cached_property
    def mode_degree(self) -> np.ndarray:
        """Integer ``l`` of every coefficient slot."""
        return np.array([ell for ell, _ in self.mode_index])

    def slot(self, ell: int, m: int) -> int:
        """Position of ``(l, m)`` in a coefficient vector."""
        if ell == 0:
            if m != 0:
                raise KeyError((ell, m))
            return 0
        if ell == self.M and m == 1:
            return self.N - 1
        if not 1 <= ell < self.M or m not in (1, -1):
            raise KeyError((ell, m))
        return 2 * ell - 1 if m == 1 else 2 * ell

    # -- transforms -------------------------------------------------------
    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} samples, got {values.shape[-1]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite values cannot be transformed")
        F = np.fft.rfft(values, axis=-1) / self.N
        out = np.empty(values.shape, dtype=float)
        out[..., 0] = F[..., 0].real * SQRT_2PI
        out[..., 1:-1:2] = 2.0 * F[..., 1:-1].real * SQRT_PI
        out[..., 2:-1:2] = -2.0 * F[..., 1:-1].imag * SQRT_PI
        out[..., -1] = F[..., -1].real * SQRT_PI
        return out

    def from_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} coefficients, got {coeffs.shape[-1]}")
        F = np.empty(coeffs.shape[:-1] + (self.M + 1,), dtype=complex)
        F[..., 0] = coeffs[..., 0] / SQRT_2PI
        F[..., 1:-1] = (coeffs[..., 1:-1:2] - 1j * coeffs[..., 2:-1:2]) / (2.0 * SQRT_PI)
        F[..., -1] = coeffs[..., -1] / SQRT_PI
        return np.fft.irfft(F * self.N, n=self.N, axis=-1)

    def _apply_symbol(self, values, symbol) -> np.ndarray:
        return np.fft.irfft(np.fft.rfft(values) * symbol, n=self.N)

    # -- linear operators on sampled values --------------------------------
    def deriv(self, values: np.ndarray) -> np.ndarray:
        return self._apply_symbol(values, self._deriv_symbol)

    def antideriv(self, values: np.ndarray) -> np.ndarray:
        """Zero-mean antiderivative of the zero-mean part."""
        return self._apply_symbol(values, self._antideriv_symbol)

    def abs_deriv(self, values: np.ndarray, power: int = 1) -> np.ndarray:
        """Fourier multiplier ``l**power`` (the flat Dirichlet-Neumann map)."""
        if power == 0:
            return np.array(values, dtype=float)
        return self._apply_symbol(values, self.wavenumbers**power)

    def dealias(self, values: np.ndarray) -> np.ndarray:
        return self._apply_symbol(values, self._dealias_mask)

    def mean(self, values: np.ndarray) -> float:
        return float(np.mean(values))

    def zero_mean(self, values: np.ndarray) -> np.ndarray:
        return values - np.mean(values)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoidal quadrature over one period."""
        return float(np.sum(values) * (2.0 * np.pi / self.N))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return self.integrate(f * g)

    def translate(self, values: np.ndarray, alpha: float) -> np.ndarray:
        """Samples of ``f(theta + alpha)`` for a band-limited ``f``."""
        return self._apply_symbol(values, np.exp(1j * self.wavenumbers * alpha))

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """Samples of ``f(-theta)``."""
        return np.roll(np.asarray(values)[::-1], 1)

    def basis(self, ell: int, m: int) -> np.ndarray:
        """Samples of the orthonormal basis function ``phi_{l,m}``."""
        theta = self.nodes
        if ell == 0:
            return np.full(self.N, 1.0 / SQRT_2PI)
        trig = np.cos if m == 1 else np.sin
        return trig(ell * theta) / SQRT_PI

    def field(self, values) -> "TorusField":
        return TorusField(self, values)

    def zeros(self) -> "TorusField":
        return TorusField(self, np.zeros(self.N))


@dataclass(frozen=True, eq=False)
class TorusField:
    """A real 2pi-periodic function known through its grid samples."""

    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_coeffs(cls, grid: SpectralGrid, coeffs) -> "TorusField":
        return cls(grid, grid.from_coeffs(coeffs))

    @classmethod
    def from_modes(cls, grid: SpectralGrid, modes: dict) -> "TorusField":
        """Build from a ``{(l, m): amplitude}`` map against ``phi_{l,m}``."""
        c = np.zeros(grid.N)
        for key, amp in modes.items():
            c[grid.slot(*key)] = amp
        return cls.from_coeffs(grid, c)

    @classmethod
    def from_function(cls, grid: SpectralGrid, func) -> "TorusField":
        return cls(grid, func(grid.nodes))

    @cached_property
    def coeffs(self) -> np.ndarray:
        c = self.grid.to_coeffs(self.values)
        c.flags.writeable = False
        return c

    def coeff(self, ell: int, m: int) -> float:
        return float(self.coeffs[self.grid.slot(ell, m)])

    def modes(self, tol: float = 0.0) -> dict:
        return {lab: float(v) for lab, v in zip(self.grid.mode_index, self.coeffs) if abs(v) > tol}

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.inner(self.values, self.values))

    def _wrap(self, values) -> "TorusField":
        return TorusField(self.grid, values)

    def __add__(self, other):
        return self._wrap(self.values + _vals(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - _vals(other))

    def __rsub__(self, other):
        return self._wrap(_vals(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)


def _vals(x):
    return x.values if isinstance(x, TorusField) else x


@dataclass(frozen=True)
class SobolevSpec:
    """Weights ``e^{2 a l} (1 + l^{2 s})`` of the analytic Sobolev scale."""

    analytic_rate: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if self.analytic_rate < 0:
            raise ValueError("analytic decay rate must be nonnegative")


def transform(f: TorusField) -> dict:
    """Coefficient map ``{(l, m): amplitude}`` against the orthonormal basis."""
    return dict(zip(f.grid.mode_index, map(float, f.coeffs)))


def inverse_transform(coeffs, grid: SpectralGrid) -> TorusField:
    if isinstance(coeffs, dict):
        return TorusField.from_modes(grid, coeffs)
    return TorusField.from_coeffs(grid, coeffs)


def derivative(f: TorusField) -> TorusField:
    return TorusField(f.grid, f.grid.deriv(f.values))


def antiderivative_zero_mean(f: TorusField) -> TorusField:
    return TorusField(f.grid, f.grid.antideriv(f.values))


def project_mean(f: TorusField) -> float:
    """Mean value of ``f`` (the constant that the projector onto constants returns)."""
    return f.grid.mean(f.values)


def project_zero_mean(f: TorusField) -> TorusField:
    return TorusField(f.grid, f.grid.zero_mean(f.values))


def sobolev_norm(f: TorusField, spec: SobolevSpec = SobolevSpec()) -> float:
    ell = f.grid.mode_degree.astype(float)
    weight = np.exp(2.0 * spec.analytic_rate * ell) * (1.0 + ell ** (2.0 * spec.s))
    return float(np.sqrt(np.sum(weight * f.coeffs**2)))


def kappa_fold_check(f: TorusField, kappa: int, rtol: float = 1e-12) -> bool:
    """True when only modes with ``l`` divisible by ``kappa`` are present."""
    if kappa < 1:
        raise ValueError("kappa must be a positive integer")
    c = f.coeffs
    scale = float(np.linalg.norm(c))
    off = c[f.grid.mode_degree % kappa != 0]
    return bool(np.all(np.abs(off) <= rtol * scale)) if off.size else True


def w1inf_norm(grid: SpectralGrid, values: np.ndarray) -> float:
    """``max(sup|f|, sup|f'|)``, the norm used for the smallness guard."""
    return float(max(np.max(np.abs(values)), np.max(np.abs(grid.deriv(values)))))


def random_field(grid: SpectralGrid, rng: np.random.Generator, amplitude: float = 1.0,
                 max_mode: int | None = None, decay: float = 0.5, kappa: int = 1) -> TorusField:
    """Seeded band-limited field with geometrically decaying coefficients.

    The result is scaled so that its W^{1,inf} norm (see :func:`w1inf_norm`)
    equals ``amplitude``.
    """
    max_mode = grid.dealias_cutoff if max_mode is None else min(max_mode, grid.M - 1)
    c = np.zeros(grid.N)
    for slot, ell in enumerate(grid.mode_degree):
        if ell <= max_mode and ell % kappa == 0:
            c[slot] = rng.standard_normal() * math.exp(-decay * ell)
    values = grid.from_coeffs(c)
    norm = w1inf_norm(grid, values)
    return TorusField(grid, values * (amplitude / norm if norm > 0 else 0.0))
