"""First-order integration of F' = s * sqrt(R(F)) / c for polynomial R.

Inside an oscillation band (consecutive simple roots of R) the solution bounces
between the two roots.  The square root is not Lipschitz at a root, so a plain
Runge-Kutta march either stalls or overshoots there.  The integrator below
marches with RK45 while the solution is well inside the band.  Close to a root
it switches to a Taylor expansion about the turning point, whose position and
time of arrival are computed exactly (root of R, plus a time integral made
regular by the substitution F = r - d*tau^2).  After the turn the sign of the
square root is flipped and marching resumes from the mirror-image state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import RK45
from scipy.optimize import brentq

from . import quadrature

TURN_ORDER = 28


class StiffnessError(RuntimeError):
    pass


class NegativeRadicand(ValueError):
    pass


def _cauchy_coeff(a: np.ndarray, b: np.ndarray, k: int):
    return sum(a[j] * b[k - j] for j in range(k + 1))


def ode_series(poly: np.ndarray, a0, a1, order: int) -> np.ndarray:
    """Taylor coefficients of the solution of F'' = poly(F) with F = a0, F' = a1.

    ``poly`` holds ascending coefficients; a0, a1 may be arrays (batch).
    """
    a0 = np.asarray(a0)
    a1 = np.asarray(a1)
    shape = np.broadcast_shapes(a0.shape, a1.shape)
    a = np.zeros((order + 1,) + shape, dtype=np.result_type(a0, a1, float))
    a[0] = a0
    if order >= 1:
        a[1] = a1
    deg = len(poly) - 1
    for k in range(order - 1):
        # coefficient k of poly(F); only a[0..k] enter it
        acc = np.zeros(shape, dtype=a.dtype)
        power = np.zeros((k + 1,) + shape, dtype=a.dtype)
        power[0] = 1.0
        for j in range(deg + 1):
            acc = acc + poly[j] * power[k]
            if j < deg:
                nxt = np.zeros_like(power)
                for i in range(k + 1):
                    nxt[i] = _cauchy_coeff(power, a, i)
                power = nxt
        a[k + 2] = acc / ((k + 2) * (k + 1))
    return a


def _horner(coeffs: np.ndarray, h):
    if len(coeffs) == 0:
        return np.zeros_like(np.asarray(h, dtype=float))
    out = np.zeros_like(np.asarray(h, dtype=float)) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * h + c
    return out


def _horner_deriv(coeffs: np.ndarray, h):
    k = np.arange(1, len(coeffs))
    return _horner(coeffs[1:] * k, h)


@dataclass
class _Segment:
    lo: float
    hi: float
    kind: str  # "rk" or "turn"
    sign: float = 1.0
    pieces: list = field(default_factory=list)  # rk: (t0, t1, dense)
    center: float = 0.0
    series: np.ndarray | None = None


class TurningPointProfile:
    """Dense solution of F' = s sqrt(R(F)) / c on an interval."""

    def __init__(self, radicand: np.ndarray, c: float, origin: float,
                 segments_fwd: list, segments_bwd: list, lo: float, hi: float):
        self.radicand = np.asarray(radicand, dtype=float)
        self.c = float(c)
        self.origin = float(origin)
        self._fwd = segments_fwd
        self._bwd = segments_bwd
        self.domain = (lo, hi)
        self.curvature = P.polyder(self.radicand) / (2 * self.c * self.c)

    def R(self, F):
        return P.polyval(F, self.radicand)

    def _eval_segments(self, segs, s):
        F = np.full(s.shape, np.nan)
        dF = np.full(s.shape, np.nan)
        for seg in segs:
            m = (s >= seg.lo) & (s <= seg.hi) & np.isnan(F)
            if not np.any(m):
                continue
            if seg.kind == "turn":
                h = s[m] - seg.center
                F[m] = _horner(seg.series, h)
                dF[m] = _horner_deriv(seg.series, h)
            else:
                sm = s[m]
                vals = np.empty(sm.shape)
                for t0, t1, dense in seg.pieces:
                    mm = (sm >= t0) & (sm <= t1)
                    if np.any(mm):
                        vals[mm] = dense(sm[mm])[0]
                F[m] = vals
                dF[m] = seg.sign * np.sqrt(np.maximum(self.R(vals), 0.0)) / self.c
        return F, dF

    def values(self, xi):
        """(F, F', F'') at ``xi``; the second derivative comes from the ODE."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.domain
        if np.any((xi < lo - 1e-12) | (xi > hi + 1e-12)):
            raise ValueError("xi outside the integrated interval [%g, %g]" % (lo, hi))
        flat = np.clip(xi.ravel(), lo, hi)
        F = np.empty(flat.shape)
        dF = np.empty(flat.shape)
        fwd = flat >= self.origin
        if np.any(fwd):
            F[fwd], dF[fwd] = self._eval_segments(self._fwd, flat[fwd] - self.origin)
        if np.any(~fwd):
            Fb, dFb = self._eval_segments(self._bwd, self.origin - flat[~fwd])
            F[~fwd], dF[~fwd] = Fb, -dFb
        ddF = P.polyval(F, self.curvature)
        return F.reshape(xi.shape), dF.reshape(xi.shape), ddF.reshape(xi.shape)

    def series(self, xi, order: int) -> np.ndarray:
        F, dF, _ = self.values(xi)
        return ode_series(self.curvature, F, dF, order)


def _real_roots(coeffs: np.ndarray) -> np.ndarray:
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(c) <= 1:
        return np.array([])
    roots = P.polyroots(c)
    scale = max(1.0, np.max(np.abs(roots)))
    real = roots[np.abs(roots.imag) <= 1e-9 * scale].real
    # polish with Newton so turning points are accurate to roundoff
    d = P.polyder(c)
    for _ in range(3):
        dv = P.polyval(real, d)
        ok = dv != 0
        real[ok] = real[ok] - P.polyval(real[ok], c) / dv[ok]
    return np.sort(real)


def _arrival_time(radicand, c, F_from, root) -> float:
    """Time to move from F_from to the simple root, |c| * int dF / sqrt(R)."""
    d = np.sign(root - F_from)
    tau0 = np.sqrt(abs(root - F_from))

    # R(F) = (F - root) Q(F), so R / tau^2 = -d Q(F) with no cancellation
    Q = P.polydiv(np.asarray(radicand, dtype=float), np.array([-root, 1.0]))[0]

    def integrand(tau):
        F = root - d * tau * tau
        return 2 * abs(c) / np.sqrt(np.maximum(-d * P.polyval(F, Q), 1e-300))

    return float(quadrature.integrate_intervals(integrand, [0.0], [tau0], tol=1e-13)[0])


def _march(radicand, c, F0, sign, length, rtol, atol, roots, turn_time, at_turn=False):
    """Integrate forward in s from 0 to ``length``; returns segment list."""
    R = lambda F: P.polyval(F, radicand)
    dR = P.polyder(radicand)
    segments: list[_Segment] = []
    s = 0.0
    F = float(F0)
    if at_turn:
        series = ode_series(P.polyder(radicand) / (2 * c * c), F, 0.0, TURN_ORDER)
        segments.append(_Segment(lo=0.0, hi=turn_time, kind="turn", center=0.0, series=series))
        s = turn_time
        F = float(_horner(series, turn_time))

    def bracket(F_now, direction):
        if direction > 0:
            up = roots[roots > F_now]
            return up[0] if up.size else None
        down = roots[roots < F_now]
        return down[-1] if down.size else None

    def turn_threshold(root):
        slope = abs(P.polyval(root, dR))
        if slope == 0:
            return None
        return slope * (turn_time / (2 * abs(c))) ** 2

    def make_turn(s_start, root, F_start, direction):
        delta = _arrival_time(radicand, c, F_start, root)
        center = s_start + delta
        series = ode_series(P.polyder(radicand) / (2 * c * c), root, 0.0, TURN_ORDER)
        seg = _Segment(lo=s_start, hi=center + delta, kind="turn", center=center, series=series)
        return seg, center + delta

    guard = 0
    while s < length:
        guard += 1
        if guard > 100000:
            raise StiffnessError("too many turning points in the requested interval")
        direction = np.sign(sign / c)
        root = bracket(F, direction)
        thr = None
        if root is not None:
            width = turn_threshold(root)
            if width is None:
                root = None
            else:
                thr = root - direction * width
        if root is not None and (F - thr) * direction >= 0:
            seg, s_new = make_turn(s, root, F, direction)
            segments.append(seg)
            s = s_new
            sign = -sign
            continue
        solver = RK45(lambda _s, y: np.array([sign * np.sqrt(max(R(y[0]), 0.0)) / c]),
                      s, np.array([F]), length, rtol=rtol, atol=atol,
                      max_step=max(turn_time, 1e-3))
        seg = _Segment(lo=s, hi=s, kind="rk", sign=sign)
        crossed = False
        while solver.status == "running":
            t_old = solver.t
            solver.step()
            if solver.status == "failed":
                raise StiffnessError("step size underflow at xi offset %g" % solver.t)
            if not np.isfinite(solver.y[0]) or abs(solver.y[0]) > 1e12:
                raise StiffnessError("solution left every oscillation band (blow-up)")
            dense = solver.dense_output()
            if thr is not None and (solver.y[0] - thr) * direction >= 0:
                s_c = brentq(lambda q: dense(q)[0] - thr, t_old, solver.t, xtol=1e-15, rtol=1e-15)
                seg.pieces.append((t_old, s_c, dense))
                seg.hi = s_c
                s, F = s_c, float(thr)
                crossed = True
                break
            seg.pieces.append((t_old, solver.t, dense))
            seg.hi = solver.t
            s, F = solver.t, float(solver.y[0])
        if seg.pieces:
            segments.append(seg)
        if not crossed and solver.status == "finished":
            break
    return segments


def integrate(radicand, c, F0, origin=0.0, interval=(0.0, 1.0), sign=1.0,
              rtol=1e-11, atol=1e-13) -> TurningPointProfile:
    """Integrate both ways from ``origin`` over ``interval``.

    ``sign`` picks the branch of the square root at the origin (ignored when the
    start is itself a turning point).
    """
    radicand = np.asarray(radicand, dtype=float)
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= origin <= hi:
        raise ValueError("origin must lie inside the interval")
    R0 = P.polyval(F0, radicand)
    scale = np.sum(np.abs(radicand) * np.abs(F0) ** np.arange(len(radicand)))
    if R0 < -1e-13 * scale:
        raise NegativeRadicand("radicand is negative at the initial value (%g)" % R0)
    roots = _real_roots(radicand)
    slope0 = P.polyval(F0, P.polyder(radicand))
    dscale = np.sum(np.abs(P.polyder(radicand)) * np.abs(F0) ** np.arange(len(radicand) - 1)) + 1e-300
    if abs(R0) <= 1e-13 * scale and abs(slope0) <= 1e-10 * dscale:
        # equilibrium at a double root
        seg = _Segment(lo=0.0, hi=np.inf, kind="turn", center=0.0, series=np.array([float(F0)]))
        return TurningPointProfile(radicand, c, origin, [seg], [seg], lo, hi)

    at_turn = abs(R0) <= 1e-13 * scale
    bsign = -sign
    if at_turn:
        # start exactly at a turning point: both directions head into the band
        F0 = roots[np.argmin(np.abs(roots - F0))]
        sign = bsign = np.sign(c) * (1.0 if slope0 > 0 else -1.0)
        others = roots[roots != F0]
        if slope0 > 0:
            band = (F0, others[others > F0][0] if np.any(others > F0) else None)
        else:
            band = (others[others < F0][-1] if np.any(others < F0) else None, F0)
    else:
        below, above = roots[roots < F0], roots[roots > F0]
        band = (below[-1] if below.size else None, above[0] if above.size else None)
    if band[0] is not None and band[1] is not None:
        mid = (band[0] + band[1]) / 2
        half_period = (_arrival_time(radicand, c, mid, band[1])
                       + _arrival_time(radicand, c, mid, band[0]))
        turn_time = 0.1 * half_period
    else:
        turn_time = 0.1
    fwd = (_march(radicand, c, F0, sign, hi - origin, rtol, atol, roots, turn_time, at_turn)
           if hi > origin else [])
    bwd = (_march(radicand, c, F0, bsign, origin - lo, rtol, atol, roots, turn_time, at_turn)
           if lo < origin else [])
    return TurningPointProfile(radicand, c, origin, fwd, bwd, lo, hi)
