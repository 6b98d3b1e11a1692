"""Solution bundles of the prolonged system (u, v, delta, phi1, phi2, f).

A bundle evaluates all six fields as jets at a batch of points.  Points where a
construction is singular (vanishing gauge factor, profile pole, denominator
zero) are reported by :meth:`SolutionBundle.singular` so that grid sweeps can
mask them; :meth:`SolutionBundle.evaluate` raises on them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import jet as J
from . import reduction as red
from .jet import Jet2D


class SingularGaugeError(ZeroDivisionError):
    def __init__(self, message: str, points=None):
        super().__init__(message)
        self.points = points if points is not None else []


class AssemblyDomainError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class DeltaProfile:
    """delta(t) as a polynomial in t (ascending coefficients); constant by default."""

    coeffs: tuple = (1.0,)

    @classmethod
    def constant(cls, c) -> "DeltaProfile":
        return cls((c,))

    @property
    def is_constant(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        poly = np.polynomial.Polynomial(self.coeffs)
        return poly(t), poly.deriv()(t)

    def jet(self, T: Jet2D) -> Jet2D:
        out = Jet2D.constant(self.coeffs[-1], T.x, T.t, box=T.box)
        for c in self.coeffs[-2::-1]:
            out = out * T + c
        return out


@dataclass(frozen=True)
class ModelParams:
    alpha: complex | float
    lam: float = 0.0
    delta: DeltaProfile = field(default_factory=DeltaProfile)


@dataclass(frozen=True)
class FieldJets:
    u: Jet2D
    v: Jet2D
    delta: Jet2D
    phi1: Jet2D
    phi2: Jet2D
    f: Jet2D

    def as_dict(self) -> dict:
        return dict(u=self.u, v=self.v, delta=self.delta, phi1=self.phi1, phi2=self.phi2, f=self.f)


FIELD_NAMES = ("u", "v", "delta", "phi1", "phi2", "f")


class SolutionBundle:
    """Six-field solution evaluator on a rectangle ``domain = ((x0, x1), (t0, t1))``."""

    def __init__(self, params: ModelParams, label: str,
                 domain=((-np.inf, np.inf), (-np.inf, np.inf))):
        self.params = params
        self.label = label
        self.domain = (tuple(map(float, domain[0])), tuple(map(float, domain[1])))
        self.notes: list[str] = []

    # subclasses implement these two on coordinate jets / arrays
    def _fields(self, X: Jet2D, T: Jet2D) -> FieldJets:
        raise NotImplementedError

    def _singular(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(x), dtype=bool)

    def _check_domain(self, x, t) -> None:
        (x0, x1), (t0, t1) = self.domain
        if np.any((x < x0) | (x > x1) | (t < t0) | (t > t1)):
            raise DomainError("point outside the bundle domain %s" % (self.domain,))

    def singular(self, x, t) -> np.ndarray:
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        self._check_domain(x, t)
        return self._singular(x, t)

    def evaluate(self, x, t) -> FieldJets:
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        self._check_domain(x, t)
        bad = self._singular(x, t)
        if np.any(bad):
            pts = list(zip(x[bad].tolist(), t[bad].tolist()))
            raise SingularGaugeError("%d singular point(s) in request" % len(pts), pts)
        X, T = J.coordinates(x, t)
        return self._fields(X, T)

    def field(self, name: str, x, t) -> Jet2D:
        return getattr(self.evaluate(x, t), name)

    def u(self, x, t):
        return self.field("u", x, t)

    def v(self, x, t):
        return self.field("v", x, t)

    def delta(self, x, t):
        return self.field("delta", x, t)

    def phi1(self, x, t):
        return self.field("phi1", x, t)

    def phi2(self, x, t):
        return self.field("phi2", x, t)

    def f(self, x, t):
        return self.field("f", x, t)

    def __repr__(self) -> str:
        return "%s(%r)" % (type(self).__name__, self.label)


# ---------------------------------------------------------------------------
# seed soliton


def _logistic_pair(theta: Jet2D):
    """(2/(1+e^{-2 theta}), 2/(1+e^{2 theta})) without overflow or cancellation."""
    side = np.where(np.real(theta.value) >= 0, 1.0, -1.0)
    w = J.exp(theta * (-2.0 * side))  # |w| <= 1 at every base point
    up = 2.0 / (1.0 + w)
    down = 2.0 * w / (1.0 + w)
    pos = side > 0
    plus = np.where(pos, up.coeffs, down.coeffs)
    minus = np.where(pos, down.coeffs, up.coeffs)
    return theta._like(plus), theta._like(minus)


class SeedSoliton(SolutionBundle):
    """u = -1 - tanh(theta), v = 1 - tanh(theta), theta = 2 alpha t - x, lambda = 0."""

    def __init__(self, alpha=1.0, domain=((-np.inf, np.inf), (-np.inf, np.inf))):
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        super().__init__(ModelParams(alpha=alpha, lam=0.0, delta=DeltaProfile.constant(1.0)),
                         "seed(alpha=%s)" % (alpha,), domain)
        self.alpha = alpha

    def _fields(self, X, T):
        theta = T * (2 * self.alpha) - X
        plus, minus = _logistic_pair(theta)
        one = Jet2D.constant(1.0, X.x, X.t)
        return FieldJets(u=-plus, v=minus, delta=one, phi1=minus, phi2=plus, f=-minus)


def seed_soliton(alpha=1.0, domain=((-np.inf, np.inf), (-np.inf, np.inf))) -> SeedSoliton:
    return SeedSoliton(alpha, domain)


# ---------------------------------------------------------------------------
# finite symmetry transformation

GAUGE_THRESHOLD = 1e-3


class TransformedBundle(SolutionBundle):
    """Image of a bundle under the one-parameter group generated by the localized symmetry."""

    def __init__(self, base: SolutionBundle, eps, threshold: float = GAUGE_THRESHOLD):
        super().__init__(base.params, "%s | transform(eps=%s)" % (base.label, eps), base.domain)
        self.base = base
        self.eps = eps
        self.threshold = threshold
        self.notes = list(base.notes)

    def _gauge_value(self, x, t):
        flat_x, flat_t = x.ravel(), t.ravel()
        bad = self.base._singular(flat_x, flat_t)
        g = np.full(flat_x.shape, np.nan, dtype=complex)
        if np.any(~bad):
            X, T = J.coordinates(flat_x[~bad], flat_t[~bad])
            f = self.base._fields(X, T).f.value
            g[~bad] = 1 + self.eps * f
        return g.reshape(x.shape), bad.reshape(x.shape)

    def _singular(self, x, t):
        g, bad = self._gauge_value(x, t)
        return bad | (np.abs(g) < self.threshold)

    def _fields(self, X, T):
        b = self.base._fields(X, T)
        if self.eps == 0:
            return b
        g = 1.0 + b.f * self.eps
        return FieldJets(u=b.u + b.phi2 * b.phi2 * self.eps / g,
                         v=b.v + b.phi1 * b.phi1 * self.eps / g,
                         delta=b.delta, phi1=b.phi1 / g, phi2=b.phi2 / g, f=b.f / g)

    def _seed_chain(self):
        eps_list = [self.eps]
        b = self.base
        while isinstance(b, TransformedBundle):
            eps_list.append(b.eps)
            b = b.base
        return (b if isinstance(b, SeedSoliton) else None), eps_list[::-1]

    def singular_locus(self) -> list[str]:
        """Closed-form description of the vanishing-gauge lines (seed chains only)."""
        seed, eps_list = self._seed_chain()
        if seed is None:
            return []
        out = []
        total = 0.0
        for e in eps_list:
            total += e
            # 1 + E f = 0 with f = tanh(theta) - 1 needs tanh(theta) = 1 - 1/E in (-1, 1)
            if np.real(total) > 0.5:
                shift = np.arctanh(1 - 1 / total)
                out.append("x = %s*t - (%.17g)  (1 + %.17g f = 0)" % (2 * seed.alpha, shift, total))
        return out


def finite_transform(s: SolutionBundle, eps, threshold: float = GAUGE_THRESHOLD) -> TransformedBundle:
    if s.params.lam != 0:
        raise ValueError("the finite transformation is stated for lambda = 0 only")
    return TransformedBundle(s, eps, threshold)


# ---------------------------------------------------------------------------
# Case 1


def _lift(xi_jet: Jet2D, series) -> Jet2D:
    return J.compose(xi_jet, series.coeffs)


class Case1Bundle(SolutionBundle):
    """Soliton-on-elliptic-background family built from the Case-1 profile."""

    def __init__(self, p: red.Case1Params, domain=((-5.0, 5.0), (-5.0, 5.0)), margin: float = 1.0):
        if not p.k1 > 0:
            raise red.ConstraintViolation("k1 must be positive")
        super().__init__(ModelParams(alpha=p.alpha, lam=p.lam, delta=DeltaProfile.constant(p.k3)),
                         "case1(%s, %s)" % (p.mode, p.form), domain)
        self.p = p
        (x0, x1), (t0, t1) = self.domain
        corners = [t - p.k2 * x for x in (x0, x1) for t in (t0, t1)]
        lo = min(min(corners), p.xi_origin) - margin
        hi = max(max(corners), p.xi_origin) + margin
        self.xi_range = (lo, hi)
        try:
            self.profile = red.case1_profile(p, interval=(lo, hi))
        except (red.StiffnessError, red.QuadratureNonconvergence) as exc:
            raise AssemblyDomainError(str(exc)) from exc
        self.cell = self._find_cell(lo, hi)
        self.notes = list(p.notes)

    def _find_cell(self, lo, hi):
        """Largest interval around the origin on which k2*F - 1 keeps its sign."""
        p = self.p
        dfun = lambda q: p.k2 * self.profile.values(np.atleast_1d(q))[0] - 1
        d0 = dfun(p.xi_origin)[0]
        if d0 == 0:
            raise red.DenominatorZero("k2*F - 1 vanishes at the quadrature origin")
        edges = []
        for end in (lo, hi):
            probe = np.linspace(p.xi_origin, end, max(2001, int(400 * abs(end - p.xi_origin))))
            d = dfun(probe)
            bad = np.flatnonzero((np.sign(d) != np.sign(d0)) | (np.abs(d) < 1e-9))
            if bad.size == 0:
                edges.append(-np.inf if end < p.xi_origin else np.inf)
                continue
            j = bad[0]
            a, b = probe[j - 1], probe[j]
            if np.sign(d[j]) != np.sign(d0) and d[j] != 0:
                b = brentq(lambda q: dfun(q)[0], a, b, xtol=1e-15)
            edges.append(b)
        return tuple(edges)

    def xi(self, x, t):
        return np.asarray(t) - self.p.k2 * np.asarray(x)

    def _singular(self, x, t):
        xi = self.xi(x, t)
        lo, hi = self.cell
        pad = 1e-3
        return (xi <= lo + pad) | (xi >= hi - pad)

    def _fields(self, X, T):
        p = self.p
        xi0 = T.value - p.k2 * X.value
        xi = T - p.k2 * X
        try:
            q = red.case1_quadratures(self.profile, p, np.real(xi0), order=J.X_ORDER + J.T_ORDER + 1)
        except (red.QuadratureNonconvergence, red.StiffnessError) as exc:
            raise AssemblyDomainError(str(exc)) from exc
        rk1 = np.sqrt(p.k1)
        theta = (_lift(xi, q.F1) + X) * rk1
        th = J.tanh(theta)
        sech = J.sech(theta)
        F2, F3 = _lift(xi, q.F2), _lift(xi, q.F3)
        F4, F5 = _lift(xi, q.F4), _lift(xi, q.F5)
        return FieldJets(u=F4 - F3 * F3 * th / rk1,
                         v=F5 - F2 * F2 * th / rk1,
                         delta=Jet2D.constant(p.k3, X.x, X.t),
                         phi1=F2 * sech * 1j,
                         phi2=F3 * sech * 1j,
                         f=th * rk1)


def case1_bundle(p: red.Case1Params, domain=((-5.0, 5.0), (-5.0, 5.0))) -> Case1Bundle:
    return Case1Bundle(p, domain)


# ---------------------------------------------------------------------------
# Case 2


class Case2Bundle(SolutionBundle):
    """Rational-in-elliptic family built from the Case-2 profile."""

    def __init__(self, p: red.Case2Params, domain=((-5.0, 5.0), (-5.0, 5.0)),
                 pole_tol: float = 1e-6, margin: float = 1.0):
        super().__init__(ModelParams(alpha=p.alpha, lam=p.lam, delta=DeltaProfile.constant(p.Ctilde)),
                         "case2(branch=%s, %s)" % (p.branch, p.form), domain)
        self.p = p
        self.pole_tol = pole_tol
        (x0, x1), (t0, t1) = self.domain
        corners = [x - p.k1 * t for x in (x0, x1) for t in (t0, t1)]
        lo = min(min(corners), p.origin) - margin
        hi = max(max(corners), p.origin) + margin
        self.s_range = (lo, hi)
        self.profile = red.case2_profile(p, interval=(lo, hi))
        if isinstance(self.profile, red.MobiusSnProfile):
            self.cell = self.profile.pole_cell(p.origin)
        else:
            self.cell = (-np.inf, np.inf)
        self.notes = list(p.notes)
        if p.k2 == 0:
            self.notes.append("k2 = 0: elliptic (no exponential envelope)")

    def s(self, x, t):
        return np.asarray(x) - self.p.k1 * np.asarray(t)

    def _singular(self, x, t):
        shape = np.shape(x)
        s = np.ravel(self.s(x, t))
        t = np.ravel(t)
        lo, hi = self.cell
        width = 1e-2
        out = (s <= lo + width) | (s >= hi - width)
        ok = ~out
        if np.any(ok):
            F1 = red.quadrature.cumulative(lambda q: self.profile.values(q)[0], s[ok], self.p.origin)
            kt = self.p.k3 * t[ok]
            sc = np.maximum(np.abs(F1), np.abs(kt))
            out[ok] = np.abs(F1 + kt) <= self.pole_tol * np.maximum(sc, 1.0)
        return out.reshape(shape)

    def _fields(self, X, T):
        p = self.p
        s0 = X.value - p.k1 * T.value
        s = X - p.k1 * T
        try:
            q = red.case2_quadratures(self.profile, p, np.real(s0), order=J.X_ORDER + J.T_ORDER + 1)
        except red.QuadratureNonconvergence as exc:
            raise AssemblyDomainError(str(exc)) from exc
        D = _lift(s, q.F1) + T * p.k3
        if np.any(np.abs(D.value) == 0):
            raise red.PoleError("F1 + k3 t vanishes")
        env = J.exp(T * p.k2)
        F2, F3 = _lift(s, q.F2), _lift(s, q.F3)
        F4, F5 = _lift(s, q.F4), _lift(s, q.F5)
        return FieldJets(u=env * env * (F4 - F3 * F3 / D),
                         v=(F5 - F2 * F2 / D) / (env * env),
                         delta=Jet2D.constant(p.Ctilde, X.x, X.t),
                         phi1=F2 / (D * env),
                         phi2=env * F3 / D,
                         f=1.0 / D)


def case2_bundle(p: red.Case2Params, domain=((-5.0, 5.0), (-5.0, 5.0))) -> Case2Bundle:
    return Case2Bundle(p, domain)


# ---------------------------------------------------------------------------
# perturbation probe (used by the CLI to demonstrate failure detection)


class PerturbedBundle(SolutionBundle):
    def __init__(self, base: SolutionBundle, field_name: str, amount: float):
        if field_name not in FIELD_NAMES:
            raise ValueError("unknown field %r" % field_name)
        super().__init__(base.params, "%s | %s%+g" % (base.label, field_name, amount), base.domain)
        self.base = base
        self.field_name = field_name
        self.amount = amount
        self.notes = list(base.notes)

    def _singular(self, x, t):
        return self.base._singular(x, t)

    def _fields(self, X, T):
        d = self.base._fields(X, T).as_dict()
        d[self.field_name] = d[self.field_name] + self.amount
        return FieldJets(**d)
