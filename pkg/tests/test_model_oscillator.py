import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite as H
from scipy import integrate

from wittenlab import model_oscillator as mo
from wittenlab.errors import DomainError, ShapeError

coord = st.floats(-4, 4, allow_nan=False)
times = st.floats(0.05, 5.0)


def test_hermite_matches_physicists_polynomials():
    x = np.linspace(-5, 5, 41)
    phi = mo.hermite_functions(20, x)
    for N in range(21):
        coeffs = np.zeros(N + 1)
        coeffs[N] = 1.0
        ref = H.hermval(x, coeffs) * np.exp(-x * x / 2) / math.sqrt(2.0 ** N * math.factorial(N) * math.sqrt(math.pi))
        np.testing.assert_allclose(phi[N], ref, rtol=1e-10, atol=1e-12)


def test_hermite_orthonormal_by_gauss_hermite():
    nodes, weights = H.hermgauss(120)
    phi = mo.hermite_functions(60, nodes) * np.exp(nodes * nodes / 2)
    gram = (phi * weights) @ phi.T
    np.testing.assert_allclose(gram, np.eye(61), atol=1e-11)


def test_hermite_order_guard():
    with pytest.raises(DomainError):
        mo.hermite_function(201, 0.0)
    assert np.isfinite(mo.hermite_function(200, 3.0))


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.6])
def test_mehler_series_converges_to_closed_form(rho):
    g = np.linspace(-3, 3, 7)
    X, Y = np.meshgrid(g, g)
    np.testing.assert_allclose(mo.mehler_series(rho, X, Y, 80), mo.mehler_closed(rho, X, Y), atol=1e-12)


def test_mehler_example_point():
    assert abs(mo.mehler_closed(0.6, 0.3, -0.7) - mo.mehler_series(0.6, 0.3, -0.7, 80)) < 1e-10


def test_mehler_truncation_order_bounds_tail():
    for rho in (0.3, 0.6, 0.9):
        n = mo.mehler_truncation_order(rho, 1e-10)
        assert abs(mo.mehler_series(rho, 0.4, -1.1, n) - mo.mehler_closed(rho, 0.4, -1.1)) < 1e-10
    assert mo.mehler_truncation_order(0.0) == 0


def test_mehler_rejects_rho():
    with pytest.raises(DomainError):
        mo.mehler_closed(1.0, 0, 0)
    with pytest.raises(DomainError):
        mo.mehler_series(-0.1, 0, 0, 3)


@given(sign=st.sampled_from([-1, 1]), t=times, x=coord, y=coord)
@settings(max_examples=60, deadline=None)
def test_oscillator_kernel_symmetric_and_positive(sign, t, x, y):
    a = mo.oscillator_heat_kernel(sign, t, x, y)
    assert a == pytest.approx(mo.oscillator_heat_kernel(sign, t, y, x), rel=1e-13)
    assert a >= 0


@given(t=times, x=coord, y=coord)
@settings(max_examples=40, deadline=None)
def test_plus_kernel_is_damped_minus_kernel(t, x, y):
    plus = mo.oscillator_heat_kernel(1, t, x, y)
    minus = mo.oscillator_heat_kernel(-1, t, x, y)
    assert plus == pytest.approx(math.exp(-2 * t) * minus, rel=1e-12, abs=1e-300)


def test_oscillator_kernel_spectral_expansion():
    x, y, t = 0.7, -0.4, 0.8
    phi_x, phi_y = mo.hermite_functions(120, x), mo.hermite_functions(120, y)
    for sign in (-1, 1):
        lam = np.array([mo.oscillator_eigenvalue(sign, N) for N in range(121)])
        series = float(np.sum(np.exp(-t * lam) * phi_x * phi_y))
        assert mo.oscillator_heat_kernel(sign, t, x, y) == pytest.approx(series, rel=1e-12)


def test_semigroup_property():
    s, t, x, y = 0.3, 0.5, 0.2, -0.9
    for sign in (-1, 1):
        val, _ = integrate.quad(
            lambda z: mo.oscillator_heat_kernel(sign, s, x, z) * mo.oscillator_heat_kernel(sign, t, z, y),
            -np.inf, np.inf, epsabs=1e-14)
        assert val == pytest.approx(mo.oscillator_heat_kernel(sign, s + t, x, y), rel=1e-9)


def test_oscillator_solves_heat_equation():
    t, x, y, dt, dx = 0.7, 0.3, -0.2, 1e-4, 1e-3
    for sign in (-1, 1):
        K = lambda tt, xx: mo.oscillator_heat_kernel(sign, tt, xx, y)
        dK_dt = (K(t + dt, x) - K(t - dt, x)) / (2 * dt)
        lap = (K(t, x + dx) - 2 * K(t, x) + K(t, x - dx)) / dx ** 2
        assert dK_dt == pytest.approx(lap - (x * x + sign) * K(t, x), rel=1e-5)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_trace_integral_exact_vs_quadrature(t):
    assert mo.oscillator_trace_integral(-1, t) == pytest.approx(1 / (1 - math.exp(-2 * t)), rel=1e-14)
    assert mo.oscillator_trace_integral(1, t) == pytest.approx(1 / (math.exp(2 * t) - 1), rel=1e-14)
    for sign in (-1, 1):
        assert abs(mo.oscillator_trace_quadrature(sign, t) - mo.oscillator_trace_integral(sign, t)) < 1e-10


def test_small_time_guard():
    for fn in (mo.oscillator_trace_integral, lambda s, t: mo.oscillator_heat_kernel(s, t, 0, 0)):
        with pytest.raises(DomainError):
            fn(-1, 0.0)
    assert np.isfinite(mo.oscillator_heat_kernel(-1, 1e-6, 0.0, 0.0))


def test_sign_profile_and_eigenvalues():
    p = mo.ModelCriticalPoint(2, 1)
    assert p.hessian_signs == (-1, 1)
    assert mo.model_sign_profile(p, ()) == (1, -1)
    assert mo.model_sign_profile(p, (1,)) == (-1, -1)
    assert mo.model_sign_profile(p, (2,)) == (1, 1)
    assert mo.model_sign_profile(p, (1, 2)) == (-1, 1)
    # the kernel of the model operator sits in degree l, component {1..l}
    zeros = [I for r in range(3) for I in mo.multi_indices(2, r) if mo.model_eigenvalue(p, I, (0, 0)) == 0]
    assert zeros == [(1,)]


@pytest.mark.parametrize("n,l", [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 1)])
def test_model_trace_integral_indicator(n, l):
    p = mo.ModelCriticalPoint(n, l)
    for r in range(n + 1):
        assert mo.model_trace_integral(p, r, 30.0) == pytest.approx(1.0 if r == l else 0.0, abs=1e-12)


def test_model_trace_pointwise_integrates_to_trace_integral():
    p = mo.ModelCriticalPoint(1, 0)
    for r in (0, 1):
        val, _ = integrate.quad(lambda s: mo.model_trace(p, r, 1.3, np.array([s])), -np.inf, np.inf)
        assert val == pytest.approx(mo.model_trace_integral(p, r, 1.3), rel=1e-9)


def test_model_validation():
    with pytest.raises(DomainError):
        mo.ModelCriticalPoint(2, 3)
    with pytest.raises(DomainError):
        mo.ModelCriticalPoint(5, 0)
    with pytest.raises(DomainError):
        mo.validate_multi_index((2, 1), 2)
    with pytest.raises(ShapeError):
        mo.model_kernel_component(mo.ModelCriticalPoint(2, 0), (), 1.0, np.zeros(3), np.zeros(3))
    with pytest.raises(DomainError):
        mo.model_eigenvalue(mo.ModelCriticalPoint(1, 0), (), (-1,))
