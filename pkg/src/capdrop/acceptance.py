"""Acceptance suite: fifteen numbered checks at their stated tolerances.

Each ``criterion_<k>`` returns a :class:`CriterionResult` listing the
individual sub-checks with measured value and bound.  The suite is shared by
``tests/test_acceptance.py`` and ``python -m capdrop selftest``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dirichlet_neumann import DnMethod, conjugate_values, dn_values
from .dynamics import IntegratorConfig, rhs_natural, rhs_wahlen, simulate, simulate_natural
from .functionals import (
    NaturalState,
    PhysicalParams,
    WahlenState,
    angular_momentum_gradient_values,
    angular_momentum_values,
    energy_values,
    shear,
    wahlen_forward,
    wahlen_gradient_values,
)
from .linear import (
    constrained_coercivity,
    dynamic_block,
    fd_jacobian_wahlen,
    hessian_block,
    hessian_spectrum,
    mode_generator,
    multiplicity_scan,
    resonance_delta,
    resonance_solve,
    transversality,
    truncated_hessian,
)
from .rotating import ContinuationConfig, newton_solve, symmetry_defect, verify_cross_formulation
from .spectral import SpectralGrid, random_field

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: str
    ok: bool


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    def check(self, name, value, ok, bound=""):
        self.checks.append(Check(name, float(value), bound, bool(ok)))

    def line(self) -> str:
        failed = [c for c in self.checks if not c.ok]
        shown = failed or self.checks
        summary = "; ".join(f"{c.name}={c.value:.3g} ({c.bound})" for c in shown[:3])
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.title}: {summary}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed, "notes": self.notes,
                "checks": [{"name": c.name, "value": c.value, "bound": c.bound, "ok": c.ok} for c in self.checks]}


def _le(res, name, value, bound):
    res.check(name, value, value <= bound, f"<= {bound:g}")


def _random_wahlen(grid, rng, amplitude, max_mode=6):
    z = random_field(grid, rng, amplitude, max_mode=max_mode).values
    g = random_field(grid, rng, amplitude, max_mode=max_mode).values
    return WahlenState.from_values(grid, z, g)


def criterion_1() -> CriterionResult:
    res = CriterionResult(1, "Dirichlet-Neumann multiplier exactness")
    grid = SpectralGrid(128)
    xi = np.zeros(grid.N)
    err = 0.0
    for ell in range(1, 41):
        for m in (1, -1):
            phi = grid.basis(ell, m)
            err = max(err, np.max(np.abs(dn_values(grid, xi, phi, DnMethod.multiplier()) - ell * phi)))
    _le(res, "max_abs_error", err, 1e-12)
    return res


def criterion_2() -> CriterionResult:
    res = CriterionResult(2, "Taylor expansion against collocation oracle")
    grid = SpectralGrid(64)
    chi = random_field(grid, np.random.default_rng(2), 1.0, max_mode=10).values
    amps = np.array([1e-3, 1e-2, 3e-2])
    errs = []
    for a in amps:
        xi = a * np.cos(3.0 * grid.nodes)
        ref = dn_values(grid, xi, chi, DnMethod.oracle())
        approx = dn_values(grid, xi, chi, DnMethod.taylor(4))
        errs.append(np.max(np.abs(approx - ref)) / np.max(np.abs(ref)))
    errs = np.array(errs)
    slope = np.polyfit(np.log(amps), np.log(errs), 1)[0]
    _le(res, "rel_error_a=1e-2", errs[1], 1e-6)
    res.check("loglog_slope", slope, slope >= 4.5, ">= K+0.5 = 4.5")
    res.notes.append("relative errors " + ", ".join(f"{e:.3e}" for e in errs))
    return res


def criterion_3() -> CriterionResult:
    res = CriterionResult(3, "Dirichlet-Neumann operator properties")
    grid = SpectralGrid(64)
    rng = np.random.default_rng(3)
    worst = dict(symmetry=0.0, constants=0.0, translation=0.0, reflection=0.0, conjugate=0.0)
    min_form = math.inf
    ones = np.ones(grid.N)
    for _ in range(20):
        xi = random_field(grid, rng, 0.05, max_mode=8).values
        c1 = random_field(grid, rng, 1.0, max_mode=10).values
        c2 = random_field(grid, rng, 1.0, max_mode=10).values
        g1, g2 = dn_values(grid, xi, c1), dn_values(grid, xi, c2)
        alpha = rng.uniform(0, 2 * np.pi)
        worst["symmetry"] = max(worst["symmetry"], abs(grid.inner(g1, c2) - grid.inner(c1, g2)))
        min_form = min(min_form, grid.inner(g1, c1))
        worst["constants"] = max(worst["constants"], np.max(np.abs(dn_values(grid, xi, ones))))
        shifted = dn_values(grid, grid.translate(xi, alpha), grid.translate(c1, alpha))
        worst["translation"] = max(worst["translation"], np.max(np.abs(shifted - grid.translate(g1, alpha))))
        mirrored = dn_values(grid, grid.reflect(xi), grid.reflect(c1))
        worst["reflection"] = max(worst["reflection"], np.max(np.abs(mirrored - grid.reflect(g1))))
        k = conjugate_values(grid, xi, c1)
        worst["conjugate"] = max(worst["conjugate"], np.max(np.abs(grid.deriv(k) - g1)))
    _le(res, "symmetry", worst["symmetry"], 1e-9)
    res.check("min_quadratic_form", min_form, min_form >= -1e-10, ">= -1e-10")
    _le(res, "constants_in_kernel", worst["constants"], 1e-12)
    _le(res, "translation_equivariance", worst["translation"], 1e-9)
    _le(res, "reflection_equivariance", worst["reflection"], 1e-9)
    _le(res, "conjugate_derivative", worst["conjugate"], 1e-9)
    return res


def _fd_best(grid, func, u, h, grad, steps):
    exact = grid.inner(grad, h)
    best = math.inf
    for s in steps:
        fd = (func(u + s * h) - func(u - s * h)) / (2.0 * s)
        best = min(best, abs(fd - exact) / max(abs(exact), 1e-300))
    return best


def criterion_4() -> CriterionResult:
    res = CriterionResult(4, "Gradients against central finite differences")
    grid = SpectralGrid(64)
    N = grid.N
    rng = np.random.default_rng(4)
    steps = [1e-3, 1e-4, 1e-5, 1e-6]
    worst = dict(H=0.0, I=0.0, V=0.0)
    for _ in range(10):
        p = PhysicalParams(rng.uniform(0.5, 2.0), rng.uniform(-2.0, 2.0))
        w = _random_wahlen(grid, rng, 0.03)
        u = w.pack()
        h = _random_wahlen(grid, rng, 1.0).pack()

        def H(v):
            chi = v[N:] + shear(grid, v[:N], p.alpha0)
            return energy_values(grid, v[:N], chi, p)

        def I(v):  # noqa: E743
            return angular_momentum_values(grid, v[:N], v[N:])

        def V(v):
            return 0.5 * grid.integrate(np.exp(2.0 * v[:N]))

        gH = np.concatenate(wahlen_gradient_values(grid, u[:N], u[N:], p))
        gI = np.concatenate(angular_momentum_gradient_values(grid, u[:N], u[N:]))
        gV = np.concatenate([np.exp(2.0 * u[:N]), np.zeros(N)])
        worst["H"] = max(worst["H"], _fd_best(grid, H, u, h, gH, steps))
        worst["I"] = max(worst["I"], _fd_best(grid, I, u, h, gI, steps))
        worst["V"] = max(worst["V"], _fd_best(grid, V, u, h, gV, steps))
    for k, v in worst.items():
        _le(res, f"grad_{k}_best_rel_error", v, 1e-6)
    return res


def criterion_5() -> CriterionResult:
    res = CriterionResult(5, "Rotating circle is an equilibrium")
    grid = SpectralGrid(64)
    worst_nat = worst_wah = 0.0
    for s0, a0 in [(1.0, 0.0), (1.0, 1.0), (0.3, 2.5), (2.0, -3.0)]:
        p = PhysicalParams(s0, a0)
        a, b = rhs_natural(NaturalState(grid.zeros(), grid.zeros()), p)
        worst_nat = max(worst_nat, np.max(np.abs(a.values)), np.max(np.abs(b.values)))
        a, b = rhs_wahlen(WahlenState.zero(grid), p)
        worst_wah = max(worst_wah, np.max(np.abs(a.values)), np.max(np.abs(b.values)))
    _le(res, "natural_rhs_sup", worst_nat, 1e-12)
    _le(res, "wahlen_rhs_sup", worst_wah, 1e-12)
    return res


def criterion_6() -> CriterionResult:
    res = CriterionResult(6, "Linearization matches the assembled mode blocks")
    grid = SpectralGrid(32)
    worst = pair_gap = 0.0
    for s0, a0 in [(1.0, 0.0), (1.0, 1.0), (1.0, 3.0)]:
        p = PhysicalParams(s0, a0)
        jac, labels = fd_jacobian_wahlen(grid, p, 8)
        index = {lab: i for i, lab in enumerate(labels)}
        for ell in range(1, 9):
            cols = [index[("zeta", ell, 1)], index[("zeta", ell, -1)], index[("gamma", ell, 1)], index[("gamma", ell, -1)]]
            expected = np.zeros((len(labels), 4))
            expected[cols, :] = mode_generator(ell, p)
            worst = max(worst, np.max(np.abs(jac[:, cols] - expected)))
            fd_eigs = np.sort_complex(np.linalg.eigvals(jac[np.ix_(cols, cols)]))
            pair = np.linalg.eigvals(dynamic_block(ell, 1, p).matrix)
            gap = np.max(np.abs(np.sort(np.abs(fd_eigs.imag))[::2] - np.sort(np.abs(pair.imag))))
            pair_gap = max(pair_gap, gap)
        zero_col = jac[:, index[("zeta", 0, 0)]]
        worst = max(worst, np.max(np.abs(zero_col)))
    _le(res, "fd_jacobian_vs_blocks", worst, 1e-6)
    res.notes.append(f"largest eigenvalue gap between the FD Jacobian and the 2x2 symplectic products: {pair_gap:.3e}")
    if pair_gap > 1e-6:
        log.info("2x2 dynamic-block products deviate from the FD Jacobian by %.3e", pair_gap)
    return res


def _perturbed_state(grid, seed, eps):
    rng = np.random.default_rng(seed)
    return _random_wahlen(grid, rng, eps, max_mode=4)


def _drifts(traj):
    out = {}
    for name in ("hamiltonian", "angular_momentum", "volume"):
        s = traj.series(name)
        out[name] = float(np.max(np.abs(s - s[0])) / abs(s[0]))
    return out


def criterion_7() -> CriterionResult:
    res = CriterionResult(7, "Conservation along RK4 trajectories")
    p = PhysicalParams(1.0, 1.0)
    grid = SpectralGrid(64)
    w = _perturbed_state(grid, 7, 1e-2)
    traj = simulate(w, p, IntegratorConfig("rk4", dt=1e-3, T=5.0, monitor_every=10))
    d = _drifts(traj)
    _le(res, "I_drift", d["angular_momentum"], 1e-8)
    _le(res, "V_drift", d["volume"], 1e-8)
    _le(res, "H_drift", d["hamiltonian"], 1e-7)
    P = np.array(traj.series("barycenter_position"))
    B = np.array(traj.series("barycenter_velocity"))
    t = np.array(traj.times)
    dP = (P[2:] - P[:-2]) / (t[2:] - t[:-2])[:, None]
    _le(res, "dP/dt_minus_B", np.max(np.abs(dP - B[1:-1])), 1e-5)
    # order: the drift at dt=1e-3 is at round-off, so the halvings use coarser steps
    coarse = SpectralGrid(32)
    wc = _perturbed_state(coarse, 7, 1e-2)
    drifts = [_drifts(simulate(wc, p, IntegratorConfig("rk4", dt=dt, T=5.0, monitor_every=1))) for dt in (0.04, 0.02, 0.01)]
    for name in ("hamiltonian", "angular_momentum"):
        orders = [math.log2(drifts[i][name] / drifts[i + 1][name]) for i in range(2)]
        res.check(f"{name}_drift_order", min(orders), min(orders) >= 3.7, ">= 3.7 (fourth order)")
    return res


def criterion_8() -> CriterionResult:
    res = CriterionResult(8, "Natural and Wahlen trajectories are conjugate")
    p = PhysicalParams(1.0, 1.5)
    grid = SpectralGrid(64)
    w = _perturbed_state(grid, 8, 1e-2)
    cfg = IntegratorConfig("rk4", dt=1e-3, T=1.0, monitor_every=100)
    tw = simulate(w, p, cfg)
    tn = simulate_natural(wahlen_forward(w, p), p, cfg)
    err = 0.0
    for ws, (_, ns) in zip(tw.states, tn):
        m = wahlen_forward(ws, p)
        err = max(err, np.max(np.abs(m.xi.values - ns.xi.values)),
                  np.max(np.abs(grid.zero_mean(m.chi.values) - grid.zero_mean(ns.chi.values))))
    _le(res, "mapped_trajectory_gap", err, 1e-7)
    res.notes.append("potential compared modulo its spatial mean")
    return res


def criterion_9() -> CriterionResult:
    res = CriterionResult(9, "Resonance arithmetic")
    sol = resonance_solve(2, 1, PhysicalParams(1.0, 0.0))
    target = 1.224744871391589
    _le(res, "omega_plus_error", abs(sol.omega_plus - target), 1e-12)
    _le(res, "omega_minus_error", abs(sol.omega_minus + target), 1e-12)
    at = resonance_delta(2, PhysicalParams(1.0 / 24.0, 1.0))
    below = resonance_delta(2, PhysicalParams(1.0 / 24.0 - 1e-9, 1.0))
    above = resonance_delta(2, PhysicalParams(1.0 / 24.0 + 1e-9, 1.0))
    _le(res, "delta_at_C=1/24", abs(at), 1e-15)
    res.check("delta_sign_flip", above - below, below < 0 < above, "below < 0 < above")
    one = resonance_solve(1, 1, PhysicalParams(0.7, 1.3))
    _le(res, "delta_at_mode_1", abs(one.delta), 0.0)
    _le(res, "omega_at_mode_1", max(abs(one.omega_plus), abs(one.omega_minus)), 0.0)
    return res


def criterion_10() -> CriterionResult:
    res = CriterionResult(10, "Multiplicity-four resonance family")
    rep = multiplicity_scan(0.0, PhysicalParams(1.0, 4.0), 128)
    res.check("roots_are_1_and_3", 0.0 if rep.roots == (1, 3) else 1.0, rep.roots == (1, 3), "roots == (1, 3)")
    res.check("multiplicity", rep.multiplicity, rep.multiplicity == 4, "== 4")
    res.notes.append("family C = 1/(4(n+1)), omega = 0, roots {1, n}; derived by the implementer")
    return res


def criterion_11() -> CriterionResult:
    res = CriterionResult(11, "Transversality value")
    # the numerator a0 + 2 l (omega - a0/2) cancels algebraically; measure it in units of round-off
    worst = 0.0
    for a0 in (1.0, 2.0, 0.5, 3.0, 0.7):
        for ell in (2, 3, 4, 8):
            omega = a0 / 2.0 - a0 / (2.0 * ell)
            scale = np.finfo(float).eps * (abs(a0) + 2.0 * ell * abs(omega - a0 / 2.0))
            worst = max(worst, abs(transversality(ell, omega, PhysicalParams(1.0, a0))) / scale)
    _le(res, "degenerate_value_in_roundoff_units", worst, 4.0)
    spot = transversality(2, math.sqrt(1.5), PhysicalParams(1.0, 0.0))
    _le(res, "spot_value_error", abs(spot + 1.9596), 1e-4)
    return res


def criterion_12() -> CriterionResult:
    res = CriterionResult(12, "Rotating-wave branch from the l=2 resonance")
    p = PhysicalParams(1.0, 0.0)
    eps_list = (1e-3, 5e-4, 2.5e-4)
    omegas, worst_dev, worst_it, worst_res, worst_sym, worst_cross = [], 0.0, 0, 0.0, 0.0, 0.0
    for eps in eps_list:
        bp = newton_solve(ContinuationConfig(ell=2, eps=eps, N=64), p)
        grid = bp.state.grid
        w = math.sqrt(1.5)
        k = math.sqrt(1.0 + w * w)
        seed_z = eps / k * grid.basis(2, 1)
        seed_g = -eps * w / k * grid.basis(2, -1)
        dev = math.sqrt(grid.inner(bp.state.zeta.values - seed_z, bp.state.zeta.values - seed_z)
                        + grid.inner(bp.state.gamma.values - seed_g, bp.state.gamma.values - seed_g))
        worst_dev = max(worst_dev, dev / eps**2)
        worst_it = max(worst_it, bp.iterations)
        worst_res = max(worst_res, bp.residual)
        worst_sym = max(worst_sym, np.max(np.abs(grid.reflect(bp.state.zeta.values) - bp.state.zeta.values)),
                        np.max(np.abs(-grid.reflect(bp.state.gamma.values) - bp.state.gamma.values)),
                        symmetry_defect(bp.state, 2))
        worst_cross = max(worst_cross, verify_cross_formulation(bp, p).residual)
        omegas.append(bp.omega)
    # omega(eps) is even in eps: fit in eps^2
    omega0 = np.polyfit(np.array(eps_list) ** 2, omegas, 1)[-1]
    res.check("newton_iterations", worst_it, worst_it <= 8, "<= 8")
    _le(res, "residual", worst_res, 1e-10)
    _le(res, "seed_deviation_over_eps2", worst_dev, 10.0)
    _le(res, "extrapolated_omega_error", abs(omega0 - math.sqrt(1.5)), 1e-6)
    _le(res, "reflection_defect", worst_sym, 1e-10)
    _le(res, "natural_coordinate_residual", worst_cross, 1e-9)
    return res


def _random_params(seed, count=5):
    rng = np.random.default_rng(seed)
    return [PhysicalParams(rng.uniform(0.2, 3.0), rng.uniform(-4.0, 4.0)) for _ in range(count)]


def criterion_13() -> CriterionResult:
    res = CriterionResult(13, "Hessian spectrum")
    params = _random_params(13)
    worst0 = max(abs(hessian_spectrum(p, 0)[0]["lambda_minus"] - min(0.0, -p.sigma0 + p.alpha0**2 / 4))
                 + abs(hessian_spectrum(p, 0)[0]["lambda_plus"] - max(0.0, -p.sigma0 + p.alpha0**2 / 4)) for p in params)
    _le(res, "lambda1_zero_mode_error", worst0, 0.0)
    worst_det = max(abs(hessian_block(1, m, p).det) / (1.0 + p.sigma0 + p.alpha0**2) for p in params for m in (1, -1))
    _le(res, "l=1_determinant", worst_det, 1e-12)
    plus_gap = minus_gap = 0.0
    for p in params:
        row = hessian_spectrum(p, 200)[-1]
        plus_gap = max(plus_gap, abs(row["lambda_plus"] / 200**2 / p.sigma0 - 1.0))
        minus_gap = max(minus_gap, abs(row["lambda_minus"] / 200 / p.sigma0 - 1.0))
        res.notes.append(f"sigma0={p.sigma0:.4f}: lambda_-(200)/200 = {row['lambda_minus'] / 200:.6f}")
    _le(res, "lambda_plus_over_l2_vs_sigma0", plus_gap, 0.02)
    _le(res, "lambda_minus_over_l_vs_sigma0", minus_gap, 0.02)
    return res


def criterion_14() -> CriterionResult:
    res = CriterionResult(14, "Constrained coercivity at C = 1/9")
    p = PhysicalParams(1.0, 3.0)
    H, _ = truncated_hessian(p, 64 // 2 - 1)
    unconstrained = float(np.linalg.eigvalsh(H)[0])
    res.check("unconstrained_min_eigenvalue", unconstrained, unconstrained < 0, "< 0")
    row = hessian_spectrum(p, 2)[2]
    bound = 0.1 * min(row["lambda_minus"], row["lambda_plus"])
    constrained = constrained_coercivity(p, 64)
    res.check("constrained_min_rayleigh", constrained, constrained >= bound, f">= {bound:.4g}")
    return res


def criterion_15() -> CriterionResult:
    res = CriterionResult(15, "Linear stability sampling")
    worst = 0.0
    violations = []
    for a0 in (0.5, 1.0, 2.0, 4.0):
        for C in (0.25, 0.5, 1.0, 4.0, 0.1, 1.0 / 24.0, 0.01):
            p = PhysicalParams(C * a0**2, a0)
            for ell in range(1, 65):
                re = float(np.max(np.abs(np.linalg.eigvals(mode_generator(ell, p)).real)))
                if C >= 0.25:
                    worst = max(worst, re)
                elif re > 1e-10:
                    violations.append((C, a0, ell, re))
    _le(res, "max_abs_real_part_C>=1/4", worst, 1e-10)
    for C, a0, ell, re in violations:
        log.info("unstable mode below C=1/4: C=%g alpha0=%g l=%d |Re|=%.3e", C, a0, ell, re)
    res.notes.append(f"{len(violations)} unstable (C, alpha0, l) samples below C = 1/4, logged only")
    return res


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14,
            criterion_15]


def run_all(selected=None) -> list[CriterionResult]:
    out = []
    for k, func in enumerate(CRITERIA, start=1):
        if selected and k not in selected:
            continue
        out.append(func())
    return out
