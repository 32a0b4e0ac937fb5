"""Linear analysis at the rigidly rotating circle.

Everything here is expressed in the orthonormal Fourier coordinates of
:mod:`capdrop.spectral`.  A ``(l, m)`` block acts on the pair
``(zeta_{l,m}, gamma_{l,-m})``; the dynamical generator couples the two
blocks ``m = +1`` and ``m = -1`` of a given ``l`` because the symplectic
matrix exchanges ``phi_{l,m}`` and ``phi_{l,-m}``.  :func:`mode_generator`
therefore returns the full 4x4 real matrix of each ``l``, which is what the
finite-difference Jacobian of the Wahlen right-hand side reproduces.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dirichlet_neumann import DEFAULT_METHOD, DnMethod
from .dynamics import wahlen_rhs_values
from .functionals import PhysicalParams, WahlenState
from .spectral import SQRT_PI, SpectralGrid

__all__ = [
    "ModeBlock",
    "ResonanceSolution",
    "MultiplicityReport",
    "ResonanceEntry",
    "ResonanceReport",
    "resonance_F",
    "resonance_delta",
    "block_Lomega",
    "hessian_block",
    "dynamic_block",
    "mode_generator",
    "linear_spectrum",
    "closed_form_spectrum_gaps",
    "fd_jacobian_wahlen",
    "resonance_solve",
    "multiplicity_scan",
    "kernel_vectors",
    "kernel_coefficients",
    "transversality",
    "transversality_pairing",
    "reduced_momentum_coeff",
    "hessian_spectrum",
    "truncated_hessian",
    "constrained_coercivity",
    "resonance_report",
]


@dataclass(frozen=True)
class ModeBlock:
    ell: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (2, 2):
            raise ValueError("a mode block is a 2x2 matrix")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)


def _check_mode(ell, m):
    if ell < 0:
        raise ValueError("mode index must be nonnegative")
    if ell == 0 and m != 0:
        raise ValueError("the zero mode has m = 0")
    if ell > 0 and m not in (1, -1):
        raise ValueError("m must be +1 or -1 for l >= 1")


def _diag_entry(ell, p: PhysicalParams) -> float:
    s0, a2 = p.sigma0, p.alpha0**2
    return s0 * ell**2 - (s0 + a2 / 4.0) + a2 / (4.0 * ell)


def resonance_F(p: PhysicalParams, omega: float, ell: float) -> float:
    """Reduced determinant of the rotating-frame block at mode ``ell``."""
    s0, a0 = p.sigma0, p.alpha0
    w = omega - a0 / 2.0
    return s0 * ell**2 - w**2 * ell - (s0 + a0 * w + a0**2 / 4.0)


def _F_scale(p: PhysicalParams, omega: float, ell: float) -> float:
    s0, a0 = p.sigma0, p.alpha0
    w = omega - a0 / 2.0
    return s0 * ell**2 + w**2 * ell + s0 + abs(a0 * w) + a0**2 / 4.0


def resonance_delta(n: int, p: PhysicalParams) -> float | None:
    """Existence discriminant at mode ``n``; ``None`` without vorticity."""
    C = p.modified_bond
    if C is None:
        return None
    return (n - 1) * (C * n * (n + 1) - 0.25)


def block_Lomega(ell: int, m: int, omega: float, p: PhysicalParams) -> ModeBlock:
    """Block of the linearized rotating-wave operator at frequency ``omega``."""
    _check_mode(ell, m)
    a0 = p.alpha0
    if ell == 0:
        return ModeBlock(0, 0, np.diag([-p.sigma0 + a0**2 / 4.0, 0.0]))
    off = m * a0 / 2.0 + m * ell * (omega - a0 / 2.0)
    return ModeBlock(ell, m, [[_diag_entry(ell, p), off], [off, ell]])


def hessian_block(ell: int, m: int, p: PhysicalParams) -> ModeBlock:
    """Block of the energy Hessian at the circle (volume multiplier included)."""
    return block_Lomega(ell, m, 0.0, p)


def dynamic_block(ell: int, m: int, p: PhysicalParams) -> ModeBlock:
    """Block obtained by multiplying a Hessian block by the 2x2 symplectic matrix.

    This product treats ``(zeta_{l,m}, gamma_{l,-m})`` as an invariant pair.
    That is exact without vorticity; otherwise use :func:`mode_generator`.
    """
    _check_mode(ell, m)
    if ell == 0:
        return ModeBlock(0, 0, [[0.0, 0.0], [p.sigma0 - p.alpha0**2 / 4.0, 0.0]])
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return ModeBlock(ell, m, J @ hessian_block(ell, m, p).matrix)


def mode_generator(ell: int, p: PhysicalParams) -> np.ndarray:
    """Linearized Wahlen flow restricted to mode ``l``.

    Basis order ``(zeta_{l,1}, zeta_{l,-1}, gamma_{l,1}, gamma_{l,-1})`` for
    ``l >= 1``, and ``(zeta_{0,0}, gamma_{0,0})`` for ``l = 0`` where the
    mean of the potential is projected out.
    """
    if ell == 0:
        return np.zeros((2, 2))
    H = np.zeros((4, 4))
    for m, z, g in ((1, 0, 3), (-1, 1, 2)):
        b = hessian_block(ell, m, p).matrix
        H[z, z], H[g, g] = b[0, 0], b[1, 1]
        H[z, g] = H[g, z] = b[0, 1]
    J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    return J @ H


def linear_spectrum(p: PhysicalParams, L_max: int) -> list[tuple[int, np.ndarray]]:
    """Eigenvalues of the linearized flow, mode by mode, for ``l <= L_max``."""
    if L_max < 2:
        raise ValueError("L_max must be at least 2")
    return [(ell, np.linalg.eigvals(mode_generator(ell, p))) for ell in range(L_max + 1)]


def closed_form_spectrum_gaps(p: PhysicalParams, L_max: int) -> list[dict]:
    """Compare the true squared frequencies against two closed forms.

    ``factored`` is ``l(-s l^2 - a^2 l/4 + s - a^2/4)`` and ``block`` is the
    squared eigenvalue of :func:`dynamic_block`.
    """
    s0, a2 = p.sigma0, p.alpha0**2
    rows = []
    for ell in range(1, L_max + 1):
        true = np.sort_complex(np.linalg.eigvals(mode_generator(ell, p)))
        factored = ell * (-s0 * ell**2 - a2 * ell / 4.0 + s0 - a2 / 4.0)
        blk = dynamic_block(ell, 1, p).matrix
        block_sq = -np.linalg.det(blk)
        true_sq = sorted(float((lam**2).real) for lam in true[::2])
        rows.append({"l": ell, "true_lambda_sq": true_sq, "factored_lambda_sq": factored, "block_lambda_sq": block_sq,
                     "max_abs_real_part": float(np.max(np.abs(true.real)))})
    return rows


def _slots_up_to(grid: SpectralGrid, L: int) -> list[int]:
    return [i for i, (ell, _) in enumerate(grid.mode_index) if ell <= L and ell < grid.M]


def fd_jacobian_wahlen(grid: SpectralGrid, p: PhysicalParams, L: int, step: float = 1e-6,
                       method: DnMethod = DEFAULT_METHOD) -> tuple[np.ndarray, list]:
    """Central-difference Jacobian of the Wahlen flow at the circle.

    Unknowns are ``zeta_{l,m}`` then ``gamma_{l,m}`` for ``l <= L`` (the mean
    of ``gamma`` is excluded).  Returns the matrix and the variable labels.
    """
    slots = _slots_up_to(grid, L)
    labels = [("zeta",) + grid.mode_index[i] for i in slots] + \
             [("gamma",) + grid.mode_index[i] for i in slots if i != 0]
    N = grid.N

    def rhs_coeffs(x):
        cz, cg = np.zeros(N), np.zeros(N)
        cz[slots] = x[: len(slots)]
        cg[[i for i in slots if i != 0]] = x[len(slots):]
        a, b = wahlen_rhs_values(grid, grid.from_coeffs(cz), grid.from_coeffs(cg), p, method)
        ca, cb = grid.to_coeffs(a), grid.to_coeffs(b)
        return np.concatenate([ca[slots], cb[[i for i in slots if i != 0]]])

    n = len(labels)
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        jac[:, j] = (rhs_coeffs(e) - rhs_coeffs(-e)) / (2.0 * step)
    return jac, labels


@dataclass(frozen=True)
class ResonanceSolution:
    n: int
    delta: float | None
    omega_plus: float | None
    omega_minus: float | None


def _refine_root(p, n, omega):
    """Bracketed refinement of a simple root of ``F`` near ``omega``."""
    f = lambda w: resonance_F(p, w, n)  # noqa: E731
    h = 1e-6 * (1.0 + abs(omega))
    lo, hi = omega - h, omega + h
    if f(lo) * f(hi) > 0:
        return omega
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def resonance_solve(ell: int, kappa: int, p: PhysicalParams) -> ResonanceSolution:
    """Resonant frequencies at mode ``n = kappa * ell``."""
    if ell < 1 or kappa < 1:
        raise ValueError("l and kappa must be positive integers")
    n = kappa * ell
    a0, s0 = p.alpha0, p.sigma0
    delta = resonance_delta(n, p)
    # alpha0**2 * delta, written without dividing by alpha0**2
    rad = (n - 1) * (s0 * n * (n + 1) - a0**2 / 4.0)
    if rad < 0:
        return ResonanceSolution(n, delta, None, None)
    root = math.sqrt(rad) / n
    centre = a0 / 2.0 - a0 / (2.0 * n)
    plus, minus = centre + root, centre - root
    if root > 0:
        plus, minus = _refine_root(p, n, plus), _refine_root(p, n, minus)
    for w in (plus, minus):
        if abs(resonance_F(p, w, n)) > 1e-10 * _F_scale(p, w, n):
            raise ArithmeticError(f"frequency {w!r} fails the root check at mode {n}")
    return ResonanceSolution(n, delta, plus, minus)


@dataclass(frozen=True)
class MultiplicityReport:
    omega: float
    roots: tuple[int, ...]
    multiplicity: int
    degenerate_roots: tuple[int, ...]
    integrality_k: int | None
    integrality_l: int | None
    direct_degenerate_l: int | None


def _integer_sqrt(x: float, tol: float = 1e-12) -> int | None:
    if x < 0:
        return None
    k = round(math.sqrt(x))
    return k if abs(k * k - x) <= tol * max(1.0, x) else None


def multiplicity_scan(omega: float, p: PhysicalParams, L_max: int = 128) -> MultiplicityReport:
    """Integer modes ``l <= L_max`` resonant at frequency ``omega``."""
    tol = 1e-9 * p.sigma0 * L_max**2
    roots = tuple(ell for ell in range(1, L_max + 1) if abs(resonance_F(p, omega, ell)) <= tol)
    if not roots:
        raise ValueError(f"omega = {omega!r} is not resonant for any l <= {L_max}")
    a0, s0 = p.alpha0, p.sigma0
    degenerate = tuple(ell for ell in roots
                       if abs(omega - (a0 / 2.0 - a0 / (2.0 * ell))) <= 1e-12 * (1.0 + abs(a0)))
    k = _integer_sqrt(1.0 + a0**2 / (4.0 * s0))
    k_ok = k if k is not None and k % 2 == 1 else None
    kd = _integer_sqrt(1.0 + a0**2 / s0)
    direct = (kd - 1) // 2 if kd is not None and kd % 2 == 1 and kd > 1 else None
    return MultiplicityReport(
        omega=omega,
        roots=roots,
        multiplicity=2 * len(roots),
        degenerate_roots=degenerate,
        integrality_k=k_ok,
        integrality_l=(k_ok - 1) // 2 if k_ok is not None else None,
        direct_degenerate_l=direct,
    )


def _kernel_slope(ell, m, omega, p):
    return m * (p.alpha0 / (2.0 * ell) + (omega - p.alpha0 / 2.0))


def kernel_coefficients(ell: int, omega: float, p: PhysicalParams) -> dict[int, tuple[float, float]]:
    """Normalized ``(zeta_{l,m}, gamma_{l,-m})`` amplitudes of the two kernel vectors."""
    out = {}
    for m in (1, -1):
        k = _kernel_slope(ell, m, omega, p)
        norm = math.sqrt(1.0 + k * k)
        out[m] = (1.0 / norm, -k / norm)
    return out


def kernel_vectors(ell: int, omega: float, p: PhysicalParams, grid: SpectralGrid,
                   tol: float = 1e-9) -> tuple[WahlenState, WahlenState]:
    """Unit kernel vectors ``v_{l,1}, v_{l,-1}`` of the rotating-frame operator."""
    if ell < 1:
        raise ValueError("kernel vectors are defined for l >= 1")
    if abs(resonance_F(p, omega, ell)) > tol * _F_scale(p, omega, ell):
        raise ValueError(f"omega = {omega!r} is not resonant at l = {ell}")
    if ell >= grid.M:
        raise ValueError("grid too coarse for the requested mode")
    vecs = []
    for m, (a, b) in kernel_coefficients(ell, omega, p).items():
        cz, cg = np.zeros(grid.N), np.zeros(grid.N)
        cz[grid.slot(ell, m)] = a
        cg[grid.slot(ell, -m)] = b
        vecs.append(WahlenState.from_values(grid, grid.from_coeffs(cz), grid.from_coeffs(cg)))
    return vecs[0], vecs[1]


def transversality(ell: int, omega: float, p: PhysicalParams) -> float:
    """Closed-form mixed-derivative pairing for the simple-eigenvalue bifurcation test."""
    w = omega - p.alpha0 / 2.0
    return -(p.alpha0 + 2.0 * ell * w) / (1.0 + w**2)


def transversality_pairing(ell: int, omega: float, p: PhysicalParams) -> float:
    """``<d/domega L_omega v, v>`` evaluated with the unit kernel vector."""
    w = omega - p.alpha0 / 2.0
    k = _kernel_slope(ell, 1, omega, p)
    return -(p.alpha0 + 2.0 * ell * w) / (1.0 + k * k)


def reduced_momentum_coeff(ell: int, omega: float, p: PhysicalParams) -> float:
    """Coefficient of the angular momentum restricted to the kernel."""
    w = omega - p.alpha0 / 2.0
    k = _kernel_slope(ell, 1, omega, p)
    return (p.alpha0 + 2.0 * ell * w) / (2.0 * (1.0 + k * k))


def hessian_spectrum(p: PhysicalParams, L_max: int) -> list[dict]:
    """Eigenvalues of every Hessian block, ``l = 0 .. L_max``."""
    rows = []
    for ell in range(L_max + 1):
        lam = np.linalg.eigvalsh(hessian_block(ell, 0 if ell == 0 else 1, p).matrix)
        rows.append({"l": ell, "lambda_minus": float(lam[0]), "lambda_plus": float(lam[1])})
    return rows


def truncated_hessian(p: PhysicalParams, L: int) -> tuple[np.ndarray, list]:
    """Hessian at the circle on modes ``l <= L`` assembled from its blocks.

    Variables are ``zeta_{l,m}`` for all modes and ``gamma_{l,m}`` for
    ``l >= 1``.
    """
    labels = [("zeta", 0, 0)]
    for ell in range(1, L + 1):
        labels += [("zeta", ell, 1), ("zeta", ell, -1)]
    labels += [("gamma", ell, m) for _, ell, m in labels[1:]]
    index = {lab: i for i, lab in enumerate(labels)}
    H = np.zeros((len(labels), len(labels)))
    H[0, 0] = hessian_block(0, 0, p).matrix[0, 0]
    for ell in range(1, L + 1):
        for m in (1, -1):
            b = hessian_block(ell, m, p).matrix
            z, g = index[("zeta", ell, m)], index[("gamma", ell, -m)]
            H[z, z], H[g, g] = b[0, 0], b[1, 1]
            H[z, g] = H[g, z] = b[0, 1]
    return H, labels


CONSTRAINT_LABELS = (("zeta", 0, 0), ("zeta", 1, 1), ("zeta", 1, -1), ("gamma", 1, 1), ("gamma", 1, -1))


def constrained_coercivity(p: PhysicalParams, N: int) -> float:
    """Minimum Rayleigh quotient of the truncated Hessian off the constraint directions.

    The linearized volume and barycenter constraints remove the mean of
    ``zeta`` and the first harmonics of ``zeta`` and ``gamma``.
    """
    L = N // 2 - 1
    if L < 16:
        raise ValueError("truncation must retain at least 16 modes")
    H, labels = truncated_hessian(p, L)
    keep = [i for i, lab in enumerate(labels) if lab not in CONSTRAINT_LABELS]
    Q = np.eye(len(labels))[:, keep]
    return float(np.linalg.eigvalsh(Q.T @ H @ Q)[0])


@dataclass
class ResonanceEntry:
    l: int  # noqa: E741
    delta: float | None
    omega_plus: float | None
    omega_minus: float | None
    co_roots: dict = field(default_factory=dict)
    multiplicity: dict = field(default_factory=dict)
    transversality: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)


@dataclass
class ResonanceReport:
    params: dict
    kappa: int
    entries: list[ResonanceEntry]

    def to_dict(self) -> dict:
        return {"params": self.params, "kappa": self.kappa, "entries": [asdict(e) for e in self.entries]}


def resonance_report(p: PhysicalParams, kappa: int, L: int, L_max: int = 128) -> ResonanceReport:
    """Resonances of modes ``kappa*l`` for ``l = 1..L`` with their classification."""
    entries = []
    for ell in range(1, L + 1):
        sol = resonance_solve(ell, kappa, p)
        entry = ResonanceEntry(sol.n, sol.delta, sol.omega_plus, sol.omega_minus)
        for tag, w in (("plus", sol.omega_plus), ("minus", sol.omega_minus)):
            if w is None:
                continue
            scan = multiplicity_scan(w, p, L_max)
            entry.co_roots[tag] = [r for r in scan.roots if r != sol.n]
            entry.multiplicity[tag] = scan.multiplicity
            entry.transversality[tag] = transversality(sol.n, w, p)
            entry.degenerate[tag] = sol.n in scan.degenerate_roots
        entries.append(entry)
    params = {"sigma0": p.sigma0, "alpha0": p.alpha0, "modified_bond": p.modified_bond}
    return ResonanceReport(params, kappa, entries)


def basis_amplitude() -> float:
    """Amplitude of ``cos(l theta)`` against the orthonormal ``phi_{l,1}``."""
    return SQRT_PI
