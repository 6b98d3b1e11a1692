"""Similarity reductions: elliptic profile ODEs, their sn solutions and quadratures.

Two reductions are supported.

Case 1 uses the travelling variable ``xi = t - k2*x``.  The profile ``F(xi)``
obeys a quartic first-order equation ``(c F')^2 = R(F)`` with
``c = k3*alpha*k2**3``; the fields are rebuilt from F, its antiderivative F1 and
an exponential quadrature F2.

Case 2 uses ``s = x - k1*t``.  The profile obeys a cubic equation
``(Ct*alpha F')^2 = R(F)`` and admits Moebius-of-sn solutions
``F = 1/(l0 + l1 sn(s, m))``.

Every coefficient list exists in two forms.  ``form="derived"`` is the one
obtained by substituting the reduction ansatz back into the prolonged system
and is the default.  ``form="printed"`` reproduces the reference coefficient
lists literally; those are kept for comparison and do not produce solutions
(see README).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from . import odeint, quadrature, specfun
from .jet import Series, exp
from .odeint import NegativeRadicand, StiffnessError  # noqa: F401  (re-exported)
from .quadrature import QuadratureNonconvergence  # noqa: F401

SERIES_ORDER = 8


class ConstraintViolation(ValueError):
    pass


class DenominatorZero(ZeroDivisionError):
    pass


class PoleError(ZeroDivisionError):
    pass


class ZeroFreeParameter(ValueError):
    pass


FORMS = ("derived", "printed")


def _check_form(form: str) -> None:
    if form not in FORMS:
        raise ValueError("form must be one of %s" % (FORMS,))


# ---------------------------------------------------------------------------
# profiles


class ProfileF:
    """A profile F(xi) with derivatives supplied analytically or by its ODE."""

    domain: tuple[float, float] = (-np.inf, np.inf)

    def values(self, xi):
        raise NotImplementedError

    def series(self, xi, order: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, xi):
        return self.values(xi)


class SnProfile(ProfileF):
    """F = b0 + b1 sn(xi, k)."""

    def __init__(self, b0: float, b1: float, k: float, convention: str = "modulus"):
        self.b0, self.b1 = float(b0), float(b1)
        self.k = float(specfun._modulus(k, convention))

    def values(self, xi):
        s, c, d = specfun.jacobi_sn_cn_dn(xi, self.k)
        s, c, d = np.asarray(s), np.asarray(c), np.asarray(d)
        F = self.b0 + self.b1 * s
        dF = self.b1 * c * d
        ddF = -self.b1 * s * (d * d + self.k**2 * c * c)
        return F, dF, ddF

    def series(self, xi, order: int) -> np.ndarray:
        s = specfun.jacobi_coeffs(np.asarray(xi, dtype=float), self.k, order)[0]
        out = self.b1 * s
        out[0] = out[0] + self.b0
        return out


class MobiusSnProfile(ProfileF):
    """F = 1 / (l0 + l1 sn(s, k)); poles where the denominator vanishes."""

    def __init__(self, l0: float, l1: float, k: float, convention: str = "modulus",
                 pole_tol: float = 1e-10):
        self.l0, self.l1 = float(l0), float(l1)
        self.k = float(specfun._modulus(k, convention))
        self.pole_tol = pole_tol

    def denominator(self, xi):
        return self.l0 + self.l1 * np.asarray(specfun.sn(xi, self.k))

    def _check(self, G):
        scale = abs(self.l0) + abs(self.l1)
        if np.any(np.abs(G) < self.pole_tol * scale):
            raise PoleError("l0 + l1 sn vanishes (pole of the profile)")

    def values(self, xi):
        s, c, d = specfun.jacobi_sn_cn_dn(xi, self.k)
        s, c, d = np.asarray(s), np.asarray(c), np.asarray(d)
        G = self.l0 + self.l1 * s
        self._check(G)
        dG = self.l1 * c * d
        ddG = -self.l1 * s * (d * d + self.k**2 * c * c)
        F = 1.0 / G
        return F, -dG * F * F, (2 * dG * dG - G * ddG) * F**3

    def series(self, xi, order: int) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        s = specfun.jacobi_coeffs(xi, self.k, order)[0]
        G = self.l1 * s
        G[0] = G[0] + self.l0
        self._check(G[0])
        return (1.0 / Series(G, xi)).coeffs

    def pole_cell(self, origin: float = 0.0) -> tuple[float, float]:
        """The maximal pole-free interval around ``origin`` (infinite if none)."""
        if abs(self.l1) < abs(self.l0) or self.l1 == 0:
            return (-np.inf, np.inf)
        ratio = -self.l0 / self.l1
        if self.k == 1.0:
            if abs(ratio) >= 1:
                return (-np.inf, np.inf)
            roots = np.array([np.arctanh(ratio)])
        else:
            K = specfun.ellip_K(self.k)
            # sn(u) = ratio at u0 and 2K - u0 in each period
            u0 = _sn_inverse(ratio, self.k)
            span = np.arange(-64, 65) * 4 * K
            roots = np.sort(np.concatenate([u0 + span, 2 * K - u0 + span]))
        left = roots[roots < origin]
        right = roots[roots > origin]
        return (left[-1] if left.size else -np.inf, right[0] if right.size else np.inf)


def _sn_inverse(y: float, k: float) -> float:
    """u in [-K, K] with sn(u, k) = y, by bisection on the monotone branch."""
    K = specfun.ellip_K(k)
    lo, hi = -K, K
    for _ in range(200):
        mid = (lo + hi) / 2
        if specfun.sn(mid, k) < y:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class NumericProfile(ProfileF):
    """Profile integrated from its first-order equation with turning points."""

    def __init__(self, flow: odeint.TurningPointProfile):
        self.flow = flow
        self.domain = flow.domain

    def values(self, xi):
        return self.flow.values(xi)

    def series(self, xi, order: int) -> np.ndarray:
        return self.flow.series(xi, order)

    def first_integral_residual(self, xi):
        F, dF, _ = self.values(xi)
        c = self.flow.c
        R = P.polyval(F, self.flow.radicand)
        scale = np.maximum(np.abs((c * dF) ** 2), _poly_scale(self.flow.radicand, F))
        return (c * dF) ** 2 - R, scale

    def dense_rows(self, xi):
        F, dF, _ = self.values(xi)
        return np.column_stack([np.asarray(xi, dtype=float), F, dF])


def _poly_scale(coeffs, F):
    F = np.asarray(F, dtype=float)
    return sum(np.abs(a) * np.abs(F) ** j for j, a in enumerate(coeffs))


# ---------------------------------------------------------------------------
# Case 1


@dataclass(frozen=True)
class Case1Params:
    k1: float
    k2: float
    k3: float
    lam: float
    alpha: float
    C: float = 1.0
    C1: float = 0.0
    C2: float = 0.0
    kappa: float = 0.0
    n: float = 0.0
    mode: str = "numeric_ode"
    form: str = "derived"
    b0: float | None = None
    b1: float | None = None
    F0: float | None = None
    sign0: float = 1.0
    xi_origin: float = 0.0
    convention: str = "modulus"
    notes: tuple[str, ...] = ()

    @property
    def ode_scale(self) -> float:
        return self.k3 * self.alpha * self.k2**3


def case1_radicand(p: Case1Params) -> np.ndarray:
    """Ascending coefficients A0..A4 of R(F), with (k3 alpha k2^3 F')^2 = R(F)."""
    _check_form(p.form)
    k1, k2, k3, a, lam = p.k1, p.k2, p.k3, p.alpha, p.lam
    if p.form == "printed":
        A0 = 2 * k3 * p.C1 * a**2 * k2**5 + 2 * k3**2 * p.C2 * a**2 * k2**5 + 4 * p.C * a * lam * k2 - 1
        A1 = -(4 * k3**2 * p.C1 * a**2 * k2**6 + 6 * k3**2 * p.C2 * a**2 * k2**6
               + 4 * k3 * a * lam * k2**2 - 2 * k2)
        A2 = (2 * k3**2 * p.C1 * a**2 * k2**7 + 6 * k3**2 * p.C2 * a**2 * k2**7
              + 4 * k3**2 * a**2 * k1 * k2**4)
        A3 = -2 * k3**2 * p.C2 * a**2 * k2**8 - 8 * k3**2 * a**2 * k1 * k2**5
        A4 = 4 * k3**2 * a**2 * k1 * k2**6
        return np.array([A0, A1, A2, A3, A4], dtype=float)
    w = _case1_w(k1, k2, k3, a, lam, p.kappa)
    return (k3 * a * k2**3) ** 2 * w


def _case1_w(k1, k2, k3, a, lam, kappa):
    """Coefficients of F'^2 = W(F) for the derived Case-1 profile equation."""
    ak = a * k3
    w4 = 4 * k1
    w3 = kappa * k2**3 - 12 * k1 / k2
    w2 = (-3 * kappa * k2**2 + 12 * k1 / k2**2 + 24 * lam**2 / k2**2
          - 12 * lam / (ak * k2**3) + 1 / (ak**2 * k2**4))
    w1 = 3 * kappa * k2 - 4 * k1 / k2**3 - 48 * lam**2 / k2**3 + 16 * lam / (ak * k2**4)
    w0 = -kappa + 24 * lam**2 / k2**4 - 4 * lam / (ak * k2**5)
    return np.array([w0, w1, w2, w3, w4], dtype=float)


def case1_ode_rhs(F, p: Case1Params, sign=1.0):
    """F' = sign * sqrt(R(F)) / (k3 alpha k2^3)."""
    A = case1_radicand(p)
    R = P.polyval(np.asarray(F, dtype=float), A)
    tol = 1e-12 * _poly_scale(A, F)
    if np.any(R < -tol):
        raise NegativeRadicand("radicand negative: F left the real oscillation band")
    return sign * np.sqrt(np.maximum(R, 0.0)) / p.ode_scale


def case1_first_integral(F, dF, p: Case1Params):
    """(k3 alpha k2^3 F')^2 - R(F) and a magnitude scale for it."""
    A = case1_radicand(p)
    lhs = (p.ode_scale * np.asarray(dF)) ** 2
    return lhs - P.polyval(F, A), np.maximum(np.abs(lhs), _poly_scale(A, F))


def _sn_radicand(b0, b1, k, c):
    """Coefficients in F of (c b1 cn dn)^2 when F = b0 + b1 sn."""
    s = P.Polynomial([-b0 / b1, 1.0 / b1])
    poly = (c * b1) ** 2 * (1 - s**2) * (1 - (k * s) ** 2)
    return np.pad(poly.coef, (0, max(0, 5 - len(poly.coef))))[:5]


def _rational(x) -> Fraction:
    """Exact rational value of a decimal input (0.1 -> 1/10, not the binary float)."""
    if isinstance(x, Fraction):
        return x
    return Fraction(repr(float(x)))


def case1_sn_printed_exact(lam, alpha, k3, n) -> dict[str, Fraction]:
    """b0, b1, k1, k2 of the reference sn constraint list in rational arithmetic."""
    lam, alpha, k3, n = (_rational(v) for v in (lam, alpha, k3, n))
    if lam == 0 or alpha == 0 or k3 == 0:
        raise ConstraintViolation("lambda, alpha and k3 must be nonzero")
    return dict(b0=2 * alpha * lam * k3,
                b1=8 * k3**2 * alpha**2 * lam**3,
                k1=n**2 / (256 * k3**4 * alpha**4 * lam**6),
                k2=1 / (2 * lam * alpha * k3))


def case1_sn_printed(lam: float, alpha: float, k3: float, n: float, C: float | None = None,
                     convention: str = "modulus") -> Case1Params:
    """Constants from the reference sn constraint list, with C1, C2 (and C) matched.

    These constraints make k2*F - 1 vanish wherever sn does, so the
    quadrature origin is placed at the quarter period instead of 0.
    """
    k = float(specfun._modulus(n, convention))
    if lam == 0 or alpha == 0 or k3 == 0:
        raise ConstraintViolation("lambda, alpha and k3 must be nonzero")
    exact = case1_sn_printed_exact(lam, alpha, k3, n)
    b0, b1, k1, k2 = (float(exact[key]) for key in ("b0", "b1", "k1", "k2"))
    p = Case1Params(k1=k1, k2=k2, k3=k3, lam=lam, alpha=alpha, n=n, mode="closed_form_sn",
                    form="printed", b0=b0, b1=b1, convention=convention)
    target = _sn_radicand(b0, b1, k, p.ode_scale)
    # A0..A3 are affine in (C1, C2, C); A4 does not involve them
    base = case1_radicand(replace(p, C=0.0, C1=0.0, C2=0.0))
    cols = []
    for field in ("C1", "C2", "C"):
        unit = {"C": 0.0, "C1": 0.0, "C2": 0.0}
        unit[field] = 1.0
        cols.append(case1_radicand(replace(p, **unit)) - base)
    M = np.column_stack(cols)[:4]
    rhs = (target - base)[:4]
    if C is None:
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    else:
        sol2 = np.linalg.lstsq(M[:, :2], rhs - M[:, 2] * C, rcond=None)[0]
        sol = np.array([sol2[0], sol2[1], C])
    p = replace(p, C1=float(sol[0]), C2=float(sol[1]), C=float(sol[2]),
                xi_origin=float(specfun.ellip_K(k)) if k < 1 else 1.0,
                notes=("reference sn constraints; k2*F - 1 vanishes where sn(xi) = 0",))
    return p


def case1_sn_candidates(lam: float, alpha: float, k3: float, n: float,
                        convention: str = "modulus") -> list[dict]:
    """All real sn solutions of the derived Case-1 profile equation.

    With y = k2*F - 1 = p + sqrt(q) sn(xi, n) and a = 1/(alpha k3 k2), matching
    the quartic reduces to one polynomial equation in a.  Each admissible root
    gives a dict with the constants and a pole-free margin (|p| - sqrt(q)) / |p|.
    """
    k = float(specfun._modulus(n, convention))
    if k == 0:
        raise ConstraintViolation("n = 0 forces k1 = 0; the soliton factor needs k1 > 0")
    if alpha == 0 or k3 == 0:
        raise ConstraintViolation("alpha and k3 must be nonzero")
    mu = 1.0 / (alpha * k3) ** 2
    s2 = 1 + k * k
    A = P.Polynomial([0.0, 1.0])
    L3 = 24 * lam**2 - 12 * lam * A + A**2
    L4 = 2 * A**2 - 8 * lam * A
    N = A**2 * L3 + mu * s2
    den = 4 * mu * s2 - 2 * A**2 * L3
    eq = 3 * L4**2 * (36 * k**2 * mu**2 - 6 * s2 * mu * N + N**2) - 2 * N * den**2
    roots = eq.roots()
    out = []
    seen = []
    for r in roots:
        if abs(r.imag) > 1e-8 * max(1.0, abs(r)):
            continue
        a = float(r.real)
        if abs(a) < 1e-12 or any(abs(a - s) < 1e-9 * max(1, abs(a)) for s in seen):
            continue
        seen.append(a)
        Nv = N(a)
        dv = den(a)
        if abs(dv) < 1e-14:
            continue
        w = Nv / (6 * k**2 * mu)
        pp = 3 * a**2 * L4(a) / dv
        D5 = 1 - s2 * w + k**2 * w**2
        if D5 == 0:
            continue
        q = a**4 / (mu * D5)
        if not q > 0:
            continue
        k2 = 1.0 / (alpha * k3 * a)
        sq = np.sqrt(q)
        cand = dict(a=a, p=pp, q=q, k2=k2, b0=(1 + pp) / k2, b1=sq / k2,
                    k1=k**2 * k2**2 / (4 * q),
                    kappa=(-4 * k**2 * pp * k2**2 / q - k**2 * k2**2 / q) / k2**4,
                    margin=(abs(pp) - sq) / abs(pp) if pp != 0 else -np.inf)
        out.append(cand)
    out.sort(key=lambda c: -c["margin"])
    return out


def case1_sn_derived(lam: float, alpha: float, k3: float, n: float, C: float = 1.0,
                     root: int | None = None, convention: str = "modulus",
                     tol: float = 1e-10) -> Case1Params:
    """Case-1 sn solution of the derived profile equation.

    ``root`` indexes :func:`case1_sn_candidates`; by default the pole-free
    candidate with the largest margin is taken.
    """
    cands = case1_sn_candidates(lam, alpha, k3, n, convention)
    if root is None:
        ok = [c for c in cands if c["margin"] > 0]
        if not ok:
            raise ConstraintViolation("no pole-free real sn solution for these parameters")
        c = ok[0]
    else:
        if not 0 <= root < len(cands):
            raise ConstraintViolation("root index %d out of range (%d candidates)" % (root, len(cands)))
        c = cands[root]
    p = Case1Params(k1=c["k1"], k2=c["k2"], k3=k3, lam=lam, alpha=alpha, C=C, kappa=c["kappa"],
                    n=n, mode="closed_form_sn", form="derived", b0=c["b0"], b1=c["b1"],
                    convention=convention)
    case1_check_sn(p, tol)
    return p


def case1_check_sn(p: Case1Params, tol: float = 1e-10) -> float:
    """Relative mismatch between R(F) and (c b1 cn dn)^2 for the sn ansatz."""
    if p.b0 is None or p.b1 is None:
        raise ConstraintViolation("sn mode needs b0 and b1")
    k = float(specfun._modulus(p.n, p.convention))
    target = _sn_radicand(p.b0, p.b1, k, p.ode_scale)
    have = case1_radicand(p)
    # compare on the oscillation band, where the relation is actually used
    F = p.b0 + p.b1 * np.linspace(-1, 1, 9)
    scale = np.max(_poly_scale(target, F)) + np.max(_poly_scale(have, F))
    mismatch = np.max(np.abs(P.polyval(F, have) - P.polyval(F, target))) / scale
    if mismatch > tol:
        raise ConstraintViolation(
            "sn ansatz does not solve the profile equation (relative mismatch %.3g)" % mismatch)
    return mismatch


def case1_closed_form(p: Case1Params, check: bool = True) -> SnProfile:
    if p.mode != "closed_form_sn":
        raise ConstraintViolation("closed form requires mode closed_form_sn")
    if check:
        case1_check_sn(p)
    return SnProfile(p.b0, p.b1, p.n, p.convention)


def case1_band(p: Case1Params) -> tuple[float, float] | None:
    """The bounded interval between consecutive radicand roots where R > 0."""
    A = case1_radicand(p)
    roots = odeint._real_roots(A)
    best = None
    for lo, hi in zip(roots[:-1], roots[1:]):
        if P.polyval((lo + hi) / 2, A) > 0:
            if best is None or hi - lo > best[1] - best[0]:
                best = (float(lo), float(hi))
    return best


def case1_ode_integrate(p: Case1Params, F0: float | None = None, interval=(-10.0, 10.0),
                        tol: float = 1e-11) -> NumericProfile:
    """Numerical profile from the first-order equation, origin at p.xi_origin."""
    A = case1_radicand(p)
    if F0 is None:
        F0 = p.F0
    if F0 is None:
        band = case1_band(p)
        if band is None:
            raise NegativeRadicand("no bounded oscillation band; give F0 explicitly")
        F0 = 0.5 * (band[0] + band[1])
    flow = odeint.integrate(A, p.ode_scale, float(F0), origin=p.xi_origin, interval=interval,
                            sign=p.sign0, rtol=tol, atol=tol * 1e-2)
    return NumericProfile(flow)


def case1_profile(p: Case1Params, interval=(-10.0, 10.0)) -> ProfileF:
    if p.mode == "closed_form_sn":
        return case1_closed_form(p, check=(p.form == "derived"))
    return case1_ode_integrate(p, interval=interval)


def case1_numeric_twin(p: Case1Params) -> Case1Params:
    """Numeric-ODE parameters started on the closed-form sn orbit at the origin."""
    sn_profile = case1_closed_form(p, check=False)
    F0, dF0, _ = sn_profile.values(np.array([p.xi_origin]))
    slope = p.ode_scale * dF0[0]
    return replace(p, mode="numeric_ode", F0=float(F0[0]),
                   sign0=1.0 if slope >= 0 else -1.0)


@dataclass(frozen=True)
class Case1Series:
    """Series in xi of the Case-1 building blocks at a batch of base points."""

    F: Series
    dF: Series
    F1: Series
    F2: Series
    F3: Series
    F4: Series
    F5: Series


def _case1_g(F, dF, p: Case1Params):
    a, k2, k3, lam = p.alpha, p.k2, p.k3, p.lam
    num = k3 * a * k2**2 * dF + 2 * k3 * a * lam * k2 * F - F - 2 * k3 * a * lam
    return num / (2 * k3 * a * k2 * (k2 * F - 1))


def _denominator_guard(p: Case1Params, profile: ProfileF, xi) -> None:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lo = min(np.min(xi), p.xi_origin)
    hi = max(np.max(xi), p.xi_origin)
    probe = np.linspace(lo, hi, max(257, int(64 * (hi - lo)) + 1))
    d = p.k2 * profile.values(probe)[0] - 1
    if np.any(np.abs(d) < 1e-10) or (np.any(d > 0) and np.any(d < 0)):
        raise DenominatorZero("k2*F - 1 vanishes on the quadrature path")


def case1_quadratures(profile: ProfileF, p: Case1Params, xi, order: int = 2,
                      tol: float = 1e-12) -> Case1Series:
    """F1 .. F5 as truncated series in xi about each requested point."""
    _check_form(p.form)
    xi = np.asarray(xi, dtype=float)
    _denominator_guard(p, profile, xi)

    def g_of(s):
        F, dF, _ = profile.values(s)
        return _case1_g(F, dF, p)

    F1_0 = quadrature.cumulative(lambda s: profile.values(s)[0], xi, p.xi_origin, tol)
    G_0 = quadrature.cumulative(g_of, xi, p.xi_origin, tol)
    Fs_full = Series(profile.series(xi, order + 1), xi)
    dF = Fs_full.differentiate()
    F = Fs_full.truncate(order)
    if np.any(np.abs(p.k2 * F.value - 1) < 1e-10):
        raise DenominatorZero("k2*F - 1 vanishes")
    g = _case1_g(F, dF, p)
    F1 = Fs_full.integrate(F1_0).truncate(order)
    F2 = p.C * exp(g.integrate(G_0))
    k1, k2, k3, a, lam = p.k1, p.k2, p.k3, p.alpha, p.lam
    F3 = k1 * (1 - k2 * F) / F2
    if p.form == "printed":
        F4 = (k2**2 * k3 * a * dF - 4 * k1 * k2 * lam * k3 * a * F + k1 * F
              + 4 * k1 * lam * k3 * a) / (2 * k3 * a * F2 * F2)
        F5 = ((k2**2 * k3 * a * dF + 4 * k1 * lam * k3 * a * F - 4 * lam * k3 * a + F) * F2 * F2
              / (2 * k3 * a * k2**2 * F * F - 4 * k3 * a * k1 * k2 * F + 2 * k3 * a * k1))
    else:
        F4 = k1 * (F + a * k2**2 * k3 * dF + 4 * a * k3 * lam * (1 - k2 * F)) / (2 * a * k3 * F2 * F2)
        y = k2 * F - 1
        F5 = F2 * F2 * (a * k2**2 * k3 * dF + 4 * a * k3 * lam * y - F) / (2 * a * k1 * k3 * y * y)
    return Case1Series(F=F, dF=dF, F1=F1, F2=F2, F3=F3, F4=F4, F5=F5)


# ---------------------------------------------------------------------------
# Case 2


@dataclass(frozen=True)
class Case2Params:
    k1: float
    k2: float
    k3: float
    lam: float
    alpha: float
    Ctilde: float = 1.0
    Ctilde1: float = 1.0
    Ctilde2: float = 0.0
    kappa: float = 0.0
    m: float = 0.5
    l0: float = 1.0
    l1: float = 0.0
    branch: int | None = None
    form: str = "derived"
    mode: str = "closed_form_sn"
    origin: float = 0.0
    F0: float | None = None
    sign0: float = 1.0
    convention: str = "modulus"
    notes: tuple[str, ...] = ()

    @property
    def ode_scale(self) -> float:
        return self.Ctilde * self.alpha


def case2_radicand(p: Case2Params) -> np.ndarray:
    """Ascending coefficients of R(F), with (Ct alpha F')^2 = R(F)."""
    _check_form(p.form)
    Ct, a, k1, k3, lam = p.Ctilde, p.alpha, p.k1, p.k3, p.lam
    c2 = (Ct * a) ** 2
    if p.form == "printed":
        return np.array([k3**2, 4 * Ct * k3 * a * lam - 2 * k1 * k3,
                         2 * c2 * p.Ctilde1, -2 * c2 * p.Ctilde1 * p.Ctilde2], dtype=float)
    beta = 24 * c2 * lam**2 - 12 * Ct * a * k1 * lam - 4 * Ct * a * p.k2 + k1**2
    half_gamma = 8 * Ct * a * k3 * lam - 2 * k1 * k3
    return np.array([k3**2, half_gamma, beta, p.kappa * c2], dtype=float)


def case2_ode_rhs(F, p: Case2Params, sign=1.0):
    A = case2_radicand(p)
    R = P.polyval(np.asarray(F, dtype=float), A)
    if np.any(R < -1e-12 * _poly_scale(A, F)):
        raise NegativeRadicand("radicand negative: F left the real oscillation band")
    return sign * np.sqrt(np.maximum(R, 0.0)) / p.ode_scale


def case2_first_integral(F, dF, p: Case2Params):
    A = case2_radicand(p)
    lhs = (p.ode_scale * np.asarray(dF)) ** 2
    return lhs - P.polyval(F, A), np.maximum(np.abs(lhs), _poly_scale(A, F))


def case2_closed_form(p: Case2Params) -> MobiusSnProfile:
    if p.l0 == 0 and p.l1 == 0:
        raise PoleError("l0 = l1 = 0")
    return MobiusSnProfile(p.l0, p.l1, p.m, p.convention)


def case2_ode_integrate(p: Case2Params, F0: float, interval=(-10.0, 10.0),
                        tol: float = 1e-11) -> NumericProfile:
    flow = odeint.integrate(case2_radicand(p), p.ode_scale, float(F0), origin=p.origin,
                            interval=interval, sign=p.sign0, rtol=tol, atol=tol * 1e-2)
    return NumericProfile(flow)


def case2_profile(p: Case2Params, interval=(-10.0, 10.0)) -> ProfileF:
    if p.mode == "closed_form_sn":
        return case2_closed_form(p)
    if p.F0 is None:
        raise ConstraintViolation("numeric Case-2 profile needs F0")
    return case2_ode_integrate(p, p.F0, interval)


_PRINTED_LAYOUT = [
    # (k1 sign on m-term or on unit term, k3 expression, relation)
    ("l1", +1), ("l1", -1), ("l0", +1), ("l0", -1),
    ("l1", +1), ("l1", -1), ("l0", +1), ("l0", -1),
]


def _printed_branch(idx: int, Ct, a, lam, m, free):
    line, upper = divmod(idx, 2)
    s = 1.0 if upper == 0 else -1.0
    if line == 0:
        l1 = free
        return dict(k1=s * 2 * Ct * m * a + 2 * Ct * a * lam, k3=Ct * m * a / l1, l0=l1, l1=l1)
    if line == 1:
        l0 = free
        return dict(k1=2 * Ct * a * lam + s * 2 * Ct * a, k3=s * Ct * a / l0, l0=l0, l1=s * l0 * m)
    if line == 2:
        l1 = free
        return dict(k1=s * 2 * Ct * m * a + 2 * Ct * a * lam, k3=-Ct * m * a / l1, l0=-s * l1, l1=l1)
    l0 = free
    return dict(k1=2 * Ct * a * lam + s * 2 * Ct * a, k3=s * Ct * a / l0, l0=l0, l1=-s * l0 * m)


_DERIVED_LAYOUT = [(+1, "unit"), (-1, "unit"), (+1, "inv"), (-1, "inv")]


def _derived_branch(idx: int, Ct, a, lam, m, free):
    line, lower = divmod(idx, 2)
    s3 = 1.0 if lower == 0 else -1.0
    sign, kind = _DERIVED_LAYOUT[line]
    if kind == "unit":
        rho = float(sign)
        l1 = free
        l0 = rho * l1
    else:
        if m == 0:
            raise ConstraintViolation("branches with l0 = +-l1/m need m > 0")
        rho = sign / m
        l0 = free
        l1 = l0 / rho
    k3 = s3 * Ct * a * m / l1
    k1 = 4 * Ct * a * lam + 2 * s3 * rho * m * Ct * a
    terms = (1.0, m * m, -2 * m * m * rho * rho, -8 * lam * lam, -8 * lam * s3 * rho * m)
    k2 = Ct * a * sum(terms) / 4
    # cancellation to rounding level means an exactly elliptic (envelope-free) branch
    if abs(k2) <= 16 * np.finfo(float).eps * abs(Ct * a) * max(abs(v) for v in terms):
        k2 = 0.0
    kappa = l1 * rho * (2 * (1 + m * m) - 4 * m * m * rho * rho)
    return dict(k1=k1, k2=k2, k3=k3, l0=l0, l1=l1, kappa=kappa)


def case2_branches(Ctilde: float, alpha: float, lam: float, m: float, free: float,
                   form: str = "derived", k2: float = 0.0, Ctilde1: float = 1.0,
                   convention: str = "modulus") -> list[Case2Params]:
    """Eight Moebius-of-sn parameter sets.

    ``free`` is l1 for the branches with l0 = +-l1 and l0 for the branches with
    l1 proportional to l0.  In the printed form k2 is not constrained and is
    taken from the argument; in the derived form k2 is fixed by the branch.
    """
    _check_form(form)
    if free == 0:
        raise ZeroFreeParameter("the free parameter (l0 or l1) must be nonzero")
    mm = float(specfun._modulus(m, convention))
    out = []
    for idx in range(8):
        if form == "printed":
            d = _printed_branch(idx, Ctilde, alpha, lam, mm, free)
            p = Case2Params(k1=d["k1"], k2=k2, k3=d["k3"], lam=lam, alpha=alpha, Ctilde=Ctilde,
                            Ctilde1=Ctilde1, m=m, l0=d["l0"], l1=d["l1"], branch=idx + 1,
                            form="printed", convention=convention)
            p = _match_printed_case2(p)
        else:
            d = _derived_branch(idx, Ctilde, alpha, lam, mm, free)
            p = Case2Params(k1=d["k1"], k2=d["k2"], k3=d["k3"], lam=lam, alpha=alpha,
                            Ctilde=Ctilde, Ctilde1=Ctilde1, kappa=d["kappa"], m=m, l0=d["l0"],
                            l1=d["l1"], branch=idx + 1, form="derived", convention=convention)
        out.append(p)
    return out


def _match_printed_case2(p: Case2Params) -> Case2Params:
    """Fix Ctilde1, Ctilde2 of the printed cubic so the sn ansatz fits it best."""
    k = float(specfun._modulus(p.m, p.convention))
    target = _mobius_radicand(p.l0, p.l1, k, p.ode_scale)
    c2 = p.ode_scale**2
    # R = k3^2 + (..)F + 2 c2 C1 F^2 - 2 c2 C1C2 F^3 : fit x = C1 and y = C1*C2
    x = target[2] / (2 * c2)
    y = -target[3] / (2 * c2)
    C1 = x
    C2 = y / x if x != 0 else 0.0
    return replace(p, Ctilde1=float(C1), Ctilde2=float(C2))


def _mobius_radicand(l0, l1, k, c):
    """Coefficients of (c F')^2 in F when F = 1/(l0 + l1 sn); exact when it is cubic.

    With G = 1/F, (c F')^2 = c^2 G'^2 / G^4 and G'^2 is a quartic in G, so the
    result is a polynomial in F of degree 4 whose F^4 coefficient vanishes only
    for the admissible relations between l0, l1 and k.
    """
    g = P.Polynomial([-l0 / l1, 1.0 / l1])  # sn as a function of G
    quartic = (c * l1) ** 2 * (1 - g**2) * (1 - (k * g) ** 2)
    coef = np.pad(quartic.coef, (0, 5 - len(quartic.coef)))
    # G^j / G^4 = F^(4 - j)
    return coef[::-1][:5]


def case2_check_branch(p: Case2Params, tol: float = 1e-10) -> float:
    """Relative mismatch between the profile equation and the sn ansatz."""
    k = float(specfun._modulus(p.m, p.convention))
    target = _mobius_radicand(p.l0, p.l1, k, p.ode_scale)
    have = np.pad(case2_radicand(p), (0, 1))
    scale = np.max(np.abs(target)) + np.max(np.abs(have))
    mismatch = float(np.max(np.abs(target - have)) / scale)
    if mismatch > tol:
        raise ConstraintViolation("sn ansatz does not solve the Case-2 profile equation "
                                  "(relative mismatch %.3g)" % mismatch)
    return mismatch


@dataclass(frozen=True)
class Case2Series:
    F: Series
    dF: Series
    F1: Series
    F2: Series
    F3: Series
    F4: Series
    F5: Series


def _case2_g(F, dF, p: Case2Params):
    Ct, a = p.Ctilde, p.alpha
    weight = 1.0 if p.form == "printed" else 0.5
    return -p.lam + weight * dF / F + p.k1 / (2 * Ct * a) - p.k3 / (2 * Ct * a * F)


def case2_quadratures(profile: ProfileF, p: Case2Params, s, order: int = 2,
                      tol: float = 1e-12) -> Case2Series:
    s = np.asarray(s, dtype=float)

    def g_of(q):
        F, dF, _ = profile.values(q)
        return _case2_g(F, dF, p)

    F1_0 = quadrature.cumulative(lambda q: profile.values(q)[0], s, p.origin, tol)
    G_0 = quadrature.cumulative(g_of, s, p.origin, tol)
    Fs_full = Series(profile.series(s, order + 1), s)
    dF = Fs_full.differentiate()
    F = Fs_full.truncate(order)
    g = _case2_g(F, dF, p)
    F1 = Fs_full.integrate(F1_0).truncate(order)
    F2 = p.Ctilde1 * exp(g.integrate(G_0))
    Ct, a, k1, k3, lam = p.Ctilde, p.alpha, p.k1, p.k3, p.lam
    F3 = F / F2
    F4 = (Ct * a * dF + 4 * lam * Ct * a * F - k1 * F + k3) / (2 * Ct * a * F2 * F2)
    F5 = F2 * F2 * (Ct * a * dF - 4 * lam * Ct * a * F + k1 * F - k3) / (2 * Ct * a * F * F)
    return Case2Series(F=F, dF=dF, F1=F1, F2=F2, F3=F3, F4=F4, F5=F5)
