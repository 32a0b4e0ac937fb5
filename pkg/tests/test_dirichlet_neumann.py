import numpy as np
import pytest

from capdrop.dirichlet_neumann import (
    DnMethod,
    OracleConditioningError,
    SmallnessError,
    conjugate_trace,
    conjugate_trace_oracle,
    dn_apply,
    dn_oracle,
    dn_shape_derivative,
    dn_values,
)
from capdrop.spectral import SpectralGrid, TorusField, random_field


def _cos(grid, ell, amp=1.0):
    return TorusField.from_function(grid, lambda t: amp * np.cos(ell * t))


@pytest.mark.parametrize("method", [DnMethod.multiplier(), DnMethod.taylor(4), DnMethod.oracle()])
def test_flat_operator_is_the_wavenumber(grid64, method):
    for ell in (1, 3, 10):
        out = dn_apply(grid64.zeros(), _cos(grid64, ell), method)
        assert np.allclose(out.values, ell * np.cos(ell * grid64.nodes), atol=1e-10)


def test_constants_in_kernel(grid64, rng):
    xi = random_field(grid64, rng, 0.05)
    for method in (DnMethod.taylor(6), DnMethod.oracle()):
        assert np.max(np.abs(dn_apply(xi, TorusField(grid64, np.full(64, 2.0)), method).values)) < 1e-12


def test_first_harmonic_against_oracle(grid64):
    xi, chi = _cos(grid64, 1, 0.01), _cos(grid64, 1)
    ref = dn_oracle(xi, chi).values
    err = np.max(np.abs(dn_apply(xi, chi).values - ref)) / np.max(np.abs(ref))
    assert err <= 1e-6


def test_first_order_term_matches_classic_recursion(grid64, rng):
    """Degree-one truncation equals G0 + D xi D - |D| xi |D| with D = -i d/dtheta."""
    xi = random_field(grid64, rng, 0.05, max_mode=5).values
    chi = random_field(grid64, rng, 1.0, max_mode=5).values
    taylor = dn_values(grid64, xi, chi, DnMethod.taylor(1))
    d, a = grid64.deriv, grid64.abs_deriv
    classic = a(chi) - d(xi * d(chi)) - a(xi * a(chi))
    assert np.max(np.abs(taylor - grid64.dealias(classic))) < 1e-13


def test_taylor_converges_with_order(grid64, rng):
    xi = random_field(grid64, rng, 0.05, max_mode=6).values
    chi = random_field(grid64, rng, 1.0, max_mode=8).values
    ref = dn_values(grid64, xi, chi, DnMethod.oracle())
    errs = [np.max(np.abs(dn_values(grid64, xi, chi, DnMethod.taylor(K)) - ref)) for K in (2, 4, 8, 12)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9


def test_smallness_guard(grid64):
    with pytest.raises(SmallnessError):
        dn_apply(_cos(grid64, 3, 0.05), _cos(grid64, 1))
    with pytest.raises(ValueError):
        dn_apply(_cos(grid64, 1, 1e-3), _cos(grid64, 1), DnMethod.multiplier())


def test_oracle_conditioning_guard():
    grid = SpectralGrid(128)
    xi = TorusField.from_function(grid, lambda t: 0.09 * np.cos(t))
    with pytest.raises(OracleConditioningError):
        dn_oracle(xi, TorusField.from_function(grid, np.cos), DnMethod.oracle(oracle_max_condition=10.0))


@pytest.mark.parametrize("kwargs", [dict(kind="fft"), dict(order=0), dict(order=20), dict(smallness=0.0)])
def test_method_validation(kwargs):
    with pytest.raises(ValueError):
        DnMethod(**kwargs)


def test_shape_derivative_matches_finite_differences(grid64, rng):
    xi = random_field(grid64, rng, 0.03, max_mode=5)
    chi = random_field(grid64, rng, 1.0, max_mode=5)
    h = random_field(grid64, rng, 1.0, max_mode=5)
    method = DnMethod.taylor(10)
    exact = dn_shape_derivative(xi, chi, h, method).values
    errs = []
    for eps in (1e-3, 1e-4, 1e-5):
        plus = dn_apply(xi + eps * h, chi, method).values
        minus = dn_apply(xi - eps * h, chi, method).values
        errs.append(np.max(np.abs((plus - minus) / (2 * eps) - exact)))
    # central differences: error shrinks by ~100 per decade until the truncation floor
    assert errs[1] < errs[0] / 50
    assert min(errs) < 1e-8


def test_shape_derivative_flat_state(grid64):
    zero = grid64.zeros()
    chi = _cos(grid64, 1)
    h = _cos(grid64, 2)
    # at xi = 0: B = cos, V = -sin
    expected = -grid64.abs_deriv(np.cos(grid64.nodes) * h.values) + grid64.deriv(np.sin(grid64.nodes) * h.values)
    assert np.allclose(dn_shape_derivative(zero, chi, h).values, grid64.dealias(expected), atol=1e-13)
    assert np.max(np.abs(dn_shape_derivative(zero, chi, zero).values)) == 0.0


@pytest.mark.parametrize("ell", [1, 2, 7])
def test_conjugate_trace_flat(grid64, ell):
    out = conjugate_trace(grid64.zeros(), _cos(grid64, ell))
    assert np.allclose(out.values, np.sin(ell * grid64.nodes), atol=1e-13)


def test_conjugate_trace_paths_agree(grid64, rng):
    xi = random_field(grid64, rng, 0.04, max_mode=6)
    chi = random_field(grid64, rng, 1.0, max_mode=8)
    method = DnMethod.taylor(12)
    direct = conjugate_trace(xi, chi, method).values
    solved = conjugate_trace(xi, chi, method, solve=True).values
    oracle = conjugate_trace_oracle(xi, chi).values
    assert np.max(np.abs(direct - solved)) < 1e-10
    assert np.max(np.abs(direct - oracle)) < 1e-9
    assert np.max(np.abs(conjugate_trace(xi, TorusField(grid64, np.ones(64))).values)) < 1e-13
