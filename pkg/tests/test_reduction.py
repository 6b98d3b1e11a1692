from fractions import Fraction

import numpy as np
import pytest

from vcakns import reduction as red
from vcakns import specfun

LAM, ALPHA, K3, N = 0.1, 1.0, 0.5, 0.1


@pytest.fixture(scope="module")
def printed():
    return red.case1_sn_printed(LAM, ALPHA, K3, N)


@pytest.fixture(scope="module")
def derived():
    return red.case1_sn_derived(LAM, ALPHA, K3, N)


def test_printed_constants_rational(printed):
    exact = red.case1_sn_printed_exact(LAM, ALPHA, K3, N)
    assert exact == dict(b0=Fraction(1, 10), b1=Fraction(1, 500), k1=Fraction(625), k2=Fraction(10))
    assert (printed.b0, printed.b1, printed.k1, printed.k2) == (0.1, 0.002, 625.0, 10.0)


def test_printed_leading_coefficient(printed):
    A = red.case1_radicand(printed)
    assert A[4] == pytest.approx(4 * 0.25 * 625 * 10**6, rel=1e-15)
    assert A[4] == pytest.approx(6.25e8, rel=1e-15)


@pytest.mark.parametrize("which", ["printed", "derived"])
def test_rhs_matches_sn_derivative(which, printed, derived):
    # bound taken over a full period including the turning points (cn = 0)
    p = printed if which == "printed" else derived
    K = specfun.ellip_K(N)
    z = np.linspace(0, 4 * K, 301)
    s, c, d = specfun.jacobi_sn_cn_dn(z, N)
    F = p.b0 + p.b1 * s
    rhs = red.case1_ode_rhs(F, p, sign=np.sign(p.b1 * c * d) * np.sign(p.ode_scale))
    assert np.max(np.abs(rhs - p.b1 * c * d)) < 1e-8


@pytest.mark.parametrize("which", ["printed", "derived"])
def test_rhs_matches_sn_derivative_inside_band(which, printed, derived):
    # away from the turning points the square root does not amplify rounding
    p = printed if which == "printed" else derived
    K = specfun.ellip_K(N)
    z = np.linspace(0, 4 * K, 301)
    s, c, d = specfun.jacobi_sn_cn_dn(z, N)
    keep = np.abs(c) > 0.3
    F = p.b0 + p.b1 * s[keep]
    rhs = red.case1_ode_rhs(F, p, sign=np.sign(p.b1 * c[keep] * d[keep]) * np.sign(p.ode_scale))
    assert np.max(np.abs(rhs - p.b1 * c[keep] * d[keep])) < 1e-10


def test_rhs_vanishes_at_turning_point(derived):
    top = derived.b0 + derived.b1  # sn = 1
    assert abs(red.case1_ode_rhs(np.array([top]), derived)[0]) < 1e-6 * abs(derived.b1)


def test_negative_radicand_outside_band(derived):
    outside = derived.b0 + 3 * abs(derived.b1)
    with pytest.raises(red.NegativeRadicand):
        red.case1_ode_rhs(np.array([outside]), derived)


def test_closed_form_values(printed):
    prof = red.case1_closed_form(printed, check=False)
    F, dF, ddF = prof.values(np.array([0.0, specfun.ellip_K(N)]))
    assert F[0] == 0.1 and ddF[0] == 0.0
    assert F[1] == pytest.approx(0.102, abs=1e-15)


def test_closed_form_rejects_numeric_mode(derived):
    with pytest.raises(red.ConstraintViolation):
        red.case1_closed_form(red.case1_numeric_twin(derived))


def test_sn_check_flags_wrong_constants(derived):
    from dataclasses import replace
    with pytest.raises(red.ConstraintViolation):
        red.case1_check_sn(replace(derived, b1=derived.b1 * 1.1))
    assert red.case1_check_sn(derived) < 1e-10


def test_derived_candidates_solve_their_equation():
    cands = red.case1_sn_candidates(LAM, ALPHA, K3, N)
    assert cands and cands[0]["margin"] > 0
    for c in cands:
        p = red.Case1Params(k1=c["k1"], k2=c["k2"], k3=K3, lam=LAM, alpha=ALPHA, kappa=c["kappa"], n=N,
                            mode="closed_form_sn", b0=c["b0"], b1=c["b1"])
        assert red.case1_check_sn(p, tol=1e-8) < 1e-8


def test_derived_default_root_values(derived):
    assert derived.b0 == pytest.approx(2.01851, rel=1e-5)
    assert derived.b1 == pytest.approx(-0.23608, rel=1e-4)
    assert derived.k2 == pytest.approx(-0.905060, rel=1e-5)
    assert derived.k1 == pytest.approx(0.04485, rel=1e-3)


def test_degenerate_constraints():
    with pytest.raises(red.ConstraintViolation):
        red.case1_sn_printed(0.0, 1.0, 0.5, 0.1)
    with pytest.raises(red.ConstraintViolation):
        red.case1_sn_candidates(0.1, 1.0, 0.5, 0.0)
    with pytest.raises(red.ConstraintViolation):
        red.case1_sn_derived(0.1, 1.0, 0.5, 0.1, root=99)


@pytest.mark.parametrize("which", ["printed", "derived"])
def test_numeric_twin_reproduces_closed_form(which, printed, derived):
    p = printed if which == "printed" else derived
    K = specfun.ellip_K(N)
    flow = red.case1_ode_integrate(red.case1_numeric_twin(p), interval=(-8 * K, 8 * K))
    z = np.linspace(-8 * K, 8 * K, 1601)  # four full periods
    F_cf = red.case1_closed_form(p, check=False).values(z)[0]
    assert np.max(np.abs(flow.values(z)[0] - F_cf)) / np.max(np.abs(F_cf)) < 1e-8
    err, scale = flow.first_integral_residual(z)
    assert np.max(np.abs(err) / scale) < 1e-8


def test_quadratures_at_origin_and_identity(derived):
    prof = red.case1_closed_form(derived)
    q = red.case1_quadratures(prof, derived, np.array([0.0, 0.8, -1.7]))
    assert q.F1.value[0] == 0.0 and q.F2.value[0] == pytest.approx(derived.C, rel=1e-15)
    lhs = q.F2.value * q.F3.value
    rhs = derived.k1 * (1 - derived.k2 * q.F.value)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_quadrature_derivatives_by_finite_differences(derived):
    prof = red.case1_closed_form(derived)
    xi, h = np.array([-2.0, 0.5, 3.0]), 1e-4
    q = red.case1_quadratures(prof, derived, xi)
    qp = red.case1_quadratures(prof, derived, xi + h)
    qm = red.case1_quadratures(prof, derived, xi - h)
    for name in ("F1", "F2", "F3", "F4", "F5"):
        fd = (getattr(qp, name).value - getattr(qm, name).value) / (2 * h)
        an = getattr(q, name).deriv(1)
        assert np.allclose(fd, an, rtol=1e-6, atol=1e-9), name
    assert np.allclose(q.F1.deriv(1), q.F.value, rtol=1e-14)


def test_printed_quadrature_hits_denominator_zero(printed):
    prof = red.case1_closed_form(printed, check=False)
    with pytest.raises(red.DenominatorZero):
        red.case1_quadratures(prof, printed, np.array([0.0]))  # sn(0) = 0 makes k2 F - 1 vanish


# ---------------------------------------------------------------------------
# Case 2


def test_mobius_profile_at_quarter_turn():
    prof = red.MobiusSnProfile(1.0, 0.5, 0.0)
    assert prof.values(np.array([np.pi / 2]))[0][0] == pytest.approx(0.6666666666666666, abs=1e-15)


def test_mobius_profile_pole():
    prof = red.MobiusSnProfile(0.5, 1.0, 0.3)
    lo, hi = prof.pole_cell(0.0)
    assert lo < 0 < hi
    assert abs(prof.denominator(np.array([lo, hi]))).max() < 1e-12
    with pytest.raises(red.PoleError):
        prof.values(np.array([hi]))
    assert red.MobiusSnProfile(2.0, 1.0, 0.3).pole_cell() == (-np.inf, np.inf)


def test_printed_branch_examples():
    b = red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form="printed")
    assert (b[0].k1, b[0].k3, b[0].l0, b[0].l1) == pytest.approx((1.2, 0.5, 1.0, 1.0))
    b = red.case2_branches(1.0, 1.0, 0.1, 0.5, 2.0, form="printed")
    assert (b[2].k1, b[2].k3, b[2].l0, b[2].l1) == pytest.approx((2.2, 0.5, 2.0, 1.0))


@pytest.mark.parametrize("form", ["printed", "derived"])
def test_branches_distinct(form):
    b = red.case2_branches(1.3, 0.7, 0.15, 0.4, 1.1, form=form)
    keys = {(p.k1, p.k2, p.k3, p.l0, p.l1) for p in b}
    assert len(b) == 8 and len(keys) == 8
    assert [p.branch for p in b] == list(range(1, 9))


def test_zero_free_parameter():
    with pytest.raises(red.ZeroFreeParameter):
        red.case2_branches(1.0, 1.0, 0.1, 0.5, 0.0)


def _first_integral_on_period(p):
    K = specfun.ellip_K(p.m)
    prof = red.case2_closed_form(p)
    z = np.linspace(0, 4 * K, 401)
    z = z[np.abs(prof.denominator(z)) > 1e-2 * (abs(p.l0) + abs(p.l1))]  # stay off the poles
    F, dF, _ = prof.values(z)
    err, scale = red.case2_first_integral(F, dF, p)
    return float(np.max(np.abs(err) / scale))


def test_derived_branches_satisfy_profile_equation():
    for p in red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0):
        assert red.case2_check_branch(p) < 1e-12
        assert _first_integral_on_period(p) < 1e-10


def test_printed_branches_against_printed_cubic():
    # self-consistent except the lower sign of the first line
    errs = [_first_integral_on_period(p)
            for p in red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form="printed")]
    assert [e < 1e-10 for e in errs] == [True, False] + [True] * 6
    with pytest.raises(red.ConstraintViolation):
        red.case2_check_branch(red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form="printed")[1])


def test_printed_branch_one_first_integral():
    # the printed branch set is self-consistent with the printed cubic
    p = red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form="printed")[0]
    prof = red.case2_closed_form(p)
    lo, hi = prof.pole_cell(0.0)
    z = np.linspace(lo + 1e-2, hi - 1e-2, 400)
    F, dF, _ = prof.values(z)
    err, scale = red.case2_first_integral(F, dF, p)
    assert np.max(np.abs(err) / scale) < 1e-10


def test_case2_profile_slope_at_origin():
    p = red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0)[0]
    dF = red.case2_closed_form(p).values(np.array([0.0]))[1][0]
    assert dF == pytest.approx(-p.l1 / p.l0**2, rel=1e-15)


def test_case2_quadratures_gauge_and_derivatives():
    p = red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0)[4]
    prof = red.case2_closed_form(p)
    s, h = np.array([-1.0, 0.0, 1.2]), 1e-4
    q = red.case2_quadratures(prof, p, s)
    assert q.F1.value[1] == 0.0 and q.F2.value[1] == pytest.approx(p.Ctilde1)
    qp = red.case2_quadratures(prof, p, s + h)
    qm = red.case2_quadratures(prof, p, s - h)
    for name in ("F1", "F2"):
        fd = (getattr(qp, name).value - getattr(qm, name).value) / (2 * h)
        assert np.allclose(fd, getattr(q, name).deriv(1), rtol=1e-6)
    assert np.allclose(q.F2.value * q.F3.value, q.F.value, rtol=1e-14)


def test_case2_numeric_flow_matches_closed_form():
    from dataclasses import replace
    p = red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0)[4]
    cf = red.case2_closed_form(p)
    F0 = cf.values(np.array([0.0]))[0][0]
    sign = np.sign(cf.values(np.array([0.0]))[1][0] * p.ode_scale)
    num = red.case2_profile(replace(p, mode="numeric_ode", F0=F0, sign0=sign), interval=(-6.0, 6.0))
    z = np.linspace(-6, 6, 301)
    assert np.max(np.abs(num.values(z)[0] - cf.values(z)[0])) < 1e-8
