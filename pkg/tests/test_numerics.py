"""Gauss-Kronrod quadrature and the turning-point ODE integrator."""
import numpy as np
import pytest
from numpy.polynomial import polynomial as P
from scipy import integrate as sci

from vcakns import odeint, quadrature, specfun


def test_gk15_exact_on_polynomials():
    coeffs = np.arange(1.0, 20.0)  # degree 18
    est, err = quadrature.gk15(lambda x: P.polyval(x, coeffs), np.array([-1.0]), np.array([2.0]))
    anti = P.polyint(coeffs)
    exact = P.polyval(2.0, anti) - P.polyval(-1.0, anti)
    assert est[0] == pytest.approx(exact, rel=1e-14)


def test_integrate_intervals_against_scipy_quad():
    f = lambda x: np.exp(-x * x) * np.cos(3 * x) / (1.1 + np.sin(x))
    a = np.array([-2.0, 0.0, 1.0, 3.0])
    b = np.array([-1.0, 5.0, 1.0, -4.0])
    got = quadrature.integrate_intervals(f, a, b)
    for ai, bi, gi in zip(a, b, got):
        ref = sci.quad(f, ai, bi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        assert gi == pytest.approx(ref, abs=1e-12)


def test_cumulative_from_interior_origin():
    pts = np.array([[-3.0, -0.5], [0.0, 2.5]])
    got = quadrature.cumulative(np.cos, pts, origin=0.7)
    assert np.allclose(got, np.sin(pts) - np.sin(0.7), atol=1e-13)
    assert got.shape == pts.shape


def test_nonconvergence_is_reported():
    with pytest.raises(quadrature.QuadratureNonconvergence):
        quadrature.integrate_intervals(lambda x: 1 / np.abs(x - 0.3) ** 0.99, [0.0], [1.0], max_rounds=5)


def _sn_radicand(k):
    # (F')^2 = (1 - F^2)(1 - k^2 F^2) for F = sn
    return np.array([1.0, 0.0, -(1 + k * k), 0.0, k * k])


@pytest.mark.parametrize("k", [0.1, 0.6, 0.95])
def test_flow_reproduces_sn_through_turning_points(k):
    flow = odeint.integrate(_sn_radicand(k), 1.0, 0.0, origin=0.0, interval=(-12.0, 12.0), sign=1.0)
    z = np.linspace(-12, 12, 1201)
    F, dF, ddF = flow.values(z)
    s, c, d = specfun.jacobi_sn_cn_dn(z, k)
    assert np.max(np.abs(F - s)) < 1e-8
    assert np.max(np.abs(dF - c * d)) < 1e-6
    assert np.max(np.abs(ddF + s * (d * d + k * k * c * c))) < 1e-7


def test_flow_started_at_turning_point():
    k = 0.5
    K = specfun.ellip_K(k)
    flow = odeint.integrate(_sn_radicand(k), 1.0, 1.0, origin=K, interval=(0.0, 4 * K))
    z = np.linspace(0, 4 * K, 401)
    assert np.max(np.abs(flow.values(z)[0] - specfun.sn(z, k))) < 1e-8


def test_flow_scale_constant_rescales_time():
    # c F' = sqrt(R): with c = 2 the solution is sn(xi / 2)
    k = 0.3
    flow = odeint.integrate(_sn_radicand(k), 2.0, 0.0, interval=(-5.0, 5.0))
    z = np.linspace(-5, 5, 101)
    assert np.max(np.abs(flow.values(z)[0] - specfun.sn(z / 2, k))) < 1e-8


def test_first_integral_is_conserved():
    R = np.array([0.2, -0.1, -1.0, 0.3, 0.5])
    flow = odeint.integrate(R, 1.3, 0.1, interval=(-20.0, 20.0))
    z = np.linspace(-20, 20, 2001)
    F, dF, _ = flow.values(z)
    assert np.max(np.abs((1.3 * dF) ** 2 - P.polyval(F, R))) < 1e-9


def test_negative_radicand_start():
    with pytest.raises(odeint.NegativeRadicand):
        odeint.integrate(_sn_radicand(0.5), 1.0, 1.5, interval=(0.0, 1.0))


def test_equilibrium_at_double_root():
    R = np.array([1.0, -2.0, 1.0])  # (1 - F)^2, double root at F = 1
    flow = odeint.integrate(R, 1.0, 1.0, interval=(-3.0, 3.0))
    F, dF, _ = flow.values(np.linspace(-3, 3, 7))
    assert np.all(F == 1.0) and np.all(dF == 0.0)


def test_outside_interval_rejected():
    flow = odeint.integrate(_sn_radicand(0.5), 1.0, 0.0, interval=(-1.0, 1.0))
    with pytest.raises(ValueError):
        flow.values(np.array([2.0]))


def test_series_matches_values():
    k = 0.7
    flow = odeint.integrate(_sn_radicand(k), 1.0, 0.0, interval=(-4.0, 4.0))
    z = np.array([-2.0, 0.4, 3.1])
    ser = flow.series(z, 5)
    ref = specfun.jacobi_coeffs(z, k, 5)[0]
    assert np.allclose(ser, ref, atol=1e-7)
