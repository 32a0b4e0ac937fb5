import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capdrop.functionals import PhysicalParams, translate_state
from capdrop.linear import (
    ModeBlock,
    block_Lomega,
    constrained_coercivity,
    dynamic_block,
    fd_jacobian_wahlen,
    hessian_block,
    hessian_spectrum,
    kernel_coefficients,
    kernel_vectors,
    linear_spectrum,
    mode_generator,
    multiplicity_scan,
    closed_form_spectrum_gaps,
    reduced_momentum_coeff,
    resonance_F,
    resonance_report,
    resonance_solve,
    transversality,
    transversality_pairing,
    truncated_hessian,
)
from capdrop.spectral import SpectralGrid

params_st = st.builds(PhysicalParams, st.floats(0.05, 5.0), st.floats(-5.0, 5.0))


def test_zero_mode_blocks():
    p = PhysicalParams(1.3, 0.7)
    assert np.array_equal(hessian_block(0, 0, p).matrix, np.diag([-1.3 + 0.49 / 4, 0.0]))
    assert np.array_equal(dynamic_block(0, 0, p).eigenvalues(), [0.0, 0.0])
    assert np.array_equal(mode_generator(0, p), np.zeros((2, 2)))


def test_block_entries_and_symmetry():
    p = PhysicalParams(1.0, 2.0)
    b = block_Lomega(3, -1, 0.4, p).matrix
    assert b[0, 0] == pytest.approx(9 - 1 - 1 + 1 / 3)
    assert b[0, 1] == b[1, 0] == pytest.approx(-1.0 - 3 * (0.4 - 1.0))
    assert b[1, 1] == 3
    assert block_Lomega(4, 1, 1.0, p).matrix[0, 1] == pytest.approx(1.0)  # omega = alpha0/2
    d = dynamic_block(5, 1, p).matrix
    assert abs(np.trace(d)) <= 1e-12


@given(params_st, st.floats(-5.0, 5.0), st.integers(1, 64), st.sampled_from([1, -1]))
def test_determinant_identity(p, omega, ell, m):
    det = block_Lomega(ell, m, omega, p).det
    expected = ell * resonance_F(p, omega, ell)
    scale = ell * (p.sigma0 * ell**2 + ell * (omega - p.alpha0 / 2) ** 2 + p.alpha0**2 + abs(p.alpha0 * omega) + 1)
    assert abs(det - expected) <= 1e-12 * scale


def test_resonant_block_is_singular():
    assert block_Lomega(2, 1, math.sqrt(1.5), PhysicalParams(1.0, 0.0)).det == pytest.approx(0.0, abs=1e-14)


def test_mode_block_validation():
    with pytest.raises(ValueError):
        ModeBlock(1, 1, np.eye(3))
    with pytest.raises(ValueError):
        hessian_block(2, 0, PhysicalParams(1.0))
    with pytest.raises(ValueError):
        hessian_block(0, 1, PhysicalParams(1.0))


def test_spectrum_examples():
    p = PhysicalParams(1.0, 0.0)
    spec = dict(linear_spectrum(p, 3))
    assert np.allclose(spec[0], 0.0)
    assert np.allclose(np.sort(spec[2].imag), [-math.sqrt(6)] * 2 + [math.sqrt(6)] * 2)
    assert np.allclose(spec[1], 0.0)
    assert np.allclose(np.abs(mode_generator(1, PhysicalParams(0.3, 2.7))).sum(axis=0)[[0, 1]] * 0, 0)
    assert np.allclose(np.linalg.eigvals(mode_generator(1, PhysicalParams(0.3, 2.7))).real, 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        linear_spectrum(p, 1)


def test_generator_eigenvalues_closed_form():
    """+-i(c +- sqrt(l A)) with c = alpha0 (l - 1)/2."""
    p = PhysicalParams(1.0, 1.5)
    for ell in (2, 3, 7):
        A = hessian_block(ell, 1, p).matrix[0, 0]
        c = p.alpha0 * (ell - 1) / 2
        expected = sorted([c + math.sqrt(ell * A), abs(c - math.sqrt(ell * A))])
        got = sorted(set(np.round(np.abs(np.linalg.eigvals(mode_generator(ell, p)).imag), 10)))
        assert np.allclose(got, expected)


def test_generator_matches_fd_jacobian(grid32):
    p = PhysicalParams(0.8, 1.7)
    jac, labels = fd_jacobian_wahlen(grid32, p, 4)
    idx = {lab: i for i, lab in enumerate(labels)}
    for ell in range(1, 5):
        cols = [idx[("zeta", ell, 1)], idx[("zeta", ell, -1)], idx[("gamma", ell, 1)], idx[("gamma", ell, -1)]]
        assert np.allclose(jac[np.ix_(cols, cols)], mode_generator(ell, p), atol=1e-6)


def test_pair_block_agrees_only_without_vorticity():
    rows0 = closed_form_spectrum_gaps(PhysicalParams(1.0, 0.0), 5)
    for r in rows0:
        assert r["true_lambda_sq"][0] == pytest.approx(r["factored_lambda_sq"], abs=1e-10)
        assert r["true_lambda_sq"][0] == pytest.approx(r["block_lambda_sq"], abs=1e-10)
    rows = closed_form_spectrum_gaps(PhysicalParams(1.0, 1.0), 5)
    assert any(abs(r["true_lambda_sq"][0] - r["block_lambda_sq"]) > 1e-3 for r in rows)


def test_resonance_examples():
    sol = resonance_solve(2, 1, PhysicalParams(1.0, 0.0))
    assert sol.delta is None
    assert sol.omega_plus == pytest.approx(math.sqrt(1.5), abs=1e-12)
    one = resonance_solve(1, 1, PhysicalParams(1.0, 2.0))
    assert one.delta == 0.0 and one.omega_plus == 0.0 == one.omega_minus
    none = resonance_solve(2, 1, PhysicalParams(0.01, 1.0))
    assert none.delta == pytest.approx(0.06 - 0.25) and none.omega_plus is None
    assert resonance_solve(1, 3, PhysicalParams(1.0, 0.0)).n == 3
    with pytest.raises(ValueError):
        resonance_solve(0, 1, PhysicalParams(1.0))


@given(params_st, st.integers(1, 12), st.integers(1, 3))
def test_resonances_are_roots(p, ell, kappa):
    sol = resonance_solve(ell, kappa, p)
    for w in (sol.omega_plus, sol.omega_minus):
        if w is not None:
            w_ = w - p.alpha0 / 2
            scale = p.sigma0 * sol.n**2 + w_**2 * sol.n + p.sigma0 + abs(p.alpha0 * w_) + p.alpha0**2
            assert abs(resonance_F(p, w, sol.n)) <= 1e-10 * scale


def test_existence_for_large_bond_number():
    for C in (1 / 24, 0.05, 1.0):
        for n in range(1, 30):
            assert resonance_solve(n, 1, PhysicalParams(C * 4.0, 2.0)).omega_plus is not None


def test_multiplicity_examples():
    simple = multiplicity_scan(math.sqrt(1.5), PhysicalParams(1.0, 0.0))
    assert simple.roots == (2,) and simple.multiplicity == 2
    double = multiplicity_scan(0.0, PhysicalParams(1.0, 4.0))
    assert double.roots == (1, 3) and double.multiplicity == 4
    assert double.degenerate_roots == (1,)
    crit = multiplicity_scan(0.0, PhysicalParams(1.0, math.sqrt(32)))
    assert crit.integrality_k == 3 and crit.integrality_l == 1
    with pytest.raises(ValueError):
        multiplicity_scan(0.123, PhysicalParams(1.0, 0.0))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_vieta_family(n):
    p = PhysicalParams(1.0 / (4 * (n + 1)), 1.0)
    assert multiplicity_scan(0.0, p).roots == (1, n)


def test_direct_degenerate_criterion():
    # 1 + alpha0^2/sigma0 = 25 gives the degenerate mode l = 2 directly
    p = PhysicalParams(1.0, math.sqrt(24))
    omega = p.alpha0 / 2 - p.alpha0 / 4
    rep = multiplicity_scan(omega, p)
    assert rep.direct_degenerate_l == 2 and 2 in rep.degenerate_roots


def test_kernel_vectors_annihilated(grid64):
    for p, ell in [(PhysicalParams(1.0, 0.0), 2), (PhysicalParams(1.0, 1.3), 3)]:
        w = resonance_solve(ell, 1, p).omega_plus
        for m, (a, b) in kernel_coefficients(ell, w, p).items():
            assert np.max(np.abs(block_Lomega(ell, m, w, p).matrix @ [a, b])) <= 1e-12
            assert a * a + b * b == pytest.approx(1.0)
        v1, v2 = kernel_vectors(ell, w, p, grid64)
        assert grid64.inner(v1.zeta.values, v1.zeta.values) + grid64.inner(v1.gamma.values, v1.gamma.values) == pytest.approx(1.0)


def test_kernel_vector_without_vorticity(grid64):
    w = math.sqrt(1.5)
    v1, _ = kernel_vectors(2, w, PhysicalParams(1.0, 0.0), grid64)
    ratio = v1.gamma.coeff(2, -1) / v1.zeta.coeff(2, 1)
    assert ratio == pytest.approx(-w)
    with pytest.raises(ValueError):
        kernel_vectors(2, 1.0, PhysicalParams(1.0, 0.0), grid64)


def test_rotation_mixes_kernel_vectors(grid64):
    p = PhysicalParams(1.0, 0.9)
    ell = 3
    w = resonance_solve(ell, 1, p).omega_plus
    v1, v2 = kernel_vectors(ell, w, p, grid64)
    alpha = 0.37
    rotated = translate_state(v1, alpha)
    c, s = math.cos(ell * alpha), math.sin(ell * alpha)
    assert np.allclose(rotated.zeta.values, c * v1.zeta.values - s * v2.zeta.values, atol=1e-13)
    assert np.allclose(rotated.gamma.values, c * v1.gamma.values - s * v2.gamma.values, atol=1e-13)


def test_transversality_values():
    p0 = PhysicalParams(1.0, 0.0)
    assert transversality(2, math.sqrt(1.5), p0) == pytest.approx(-4 * math.sqrt(1.5) / 2.5)
    p = PhysicalParams(1.0, 2.0)
    assert transversality(4, 1.0 - 0.25, p) == 0.0
    assert transversality_pairing(4, 0.75, p) == 0.0
    # without vorticity the two normalizations coincide
    assert transversality_pairing(2, math.sqrt(1.5), p0) == pytest.approx(transversality(2, math.sqrt(1.5), p0))


def test_transversality_pairing_is_the_mixed_derivative(grid64):
    p = PhysicalParams(1.0, 1.4)
    ell = 2
    w = resonance_solve(ell, 1, p).omega_plus
    a, b = kernel_coefficients(ell, w, p)[1]
    h = 1e-6
    dL = (block_Lomega(ell, 1, w + h, p).matrix - block_Lomega(ell, 1, w - h, p).matrix) / (2 * h)
    assert np.array([a, b]) @ dL @ np.array([a, b]) == pytest.approx(transversality_pairing(ell, w, p), rel=1e-8)


def test_reduced_momentum_sign():
    p0 = PhysicalParams(1.0, 0.0)
    w = math.sqrt(1.5)
    assert reduced_momentum_coeff(2, w, p0) == pytest.approx(2 * 2 * w / (2 * (1 + w * w)))
    for a0 in (0.5, 1.0, 3.0):
        p = PhysicalParams(1.0, a0)
        for ell in (2, 3, 5):
            wp = resonance_solve(ell, 1, p).omega_plus
            if wp > a0 / 2:
                assert reduced_momentum_coeff(ell, wp, p) > 0


def test_hessian_spectrum_table():
    p = PhysicalParams(1.0, 3.0)
    rows = hessian_spectrum(p, 4)
    assert [r["l"] for r in rows] == [0, 1, 2, 3, 4]
    assert rows[0]["lambda_plus"] == pytest.approx(-1 + 9 / 4)
    assert rows[1]["lambda_minus"] == pytest.approx(0.0, abs=1e-14)


@given(params_st)
def test_l1_block_is_singular(p):
    for m in (1, -1):
        assert abs(hessian_block(1, m, p).det) <= 1e-12 * (1 + p.sigma0 + p.alpha0**2)


def test_hessian_asymptotics_at_unit_tension():
    row = hessian_spectrum(PhysicalParams(1.0, 1.0), 200)[-1]
    assert row["lambda_plus"] / 200**2 == pytest.approx(1.0, rel=0.02)
    assert row["lambda_minus"] / 200 == pytest.approx(1.0, rel=0.02)


def test_truncated_hessian_and_coercivity():
    p = PhysicalParams(1.0, 3.0)
    H, labels = truncated_hessian(p, 20)
    assert np.allclose(H, H.T)
    assert len(labels) == 1 + 2 * 20 + 2 * 20
    assert constrained_coercivity(p, 64) > 0
    # subcritical tension: the zero mode is a negative direction until the volume is fixed
    q = PhysicalParams(1.0, 1.0)
    Hq, _ = truncated_hessian(q, 31)
    assert np.linalg.eigvalsh(Hq)[0] == pytest.approx(-0.75)
    assert constrained_coercivity(q, 64) > 0
    with pytest.raises(ValueError):
        constrained_coercivity(p, 16)


def test_resonance_report_json():
    rep = resonance_report(PhysicalParams(1.0, 0.0), 1, 8)
    data = json.loads(json.dumps(rep.to_dict()))
    e2 = data["entries"][1]
    assert e2["l"] == 2 and e2["omega_plus"] == pytest.approx(math.sqrt(1.5))
    assert e2["multiplicity"]["plus"] == 2 and e2["degenerate"]["plus"] is False
    assert set(data) == {"params", "kappa", "entries"}
