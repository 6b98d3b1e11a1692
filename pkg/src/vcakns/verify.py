"""Residual checks for solution bundles.

Every residual is a sum of terms.  It is reported raw and normalized by the
largest term magnitude at the same point, so a bundle and any global rescaling
of its terms give the same normalized value.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import jet as J
from .families import FieldJets, SolutionBundle
from .jet import Jet2D

_TINY = 1e-300
# Per-point scales are floored at this fraction of the grid-wide term scale, so
# points where every term vanishes analytically are not judged on rounding noise.
SCALE_FLOOR = 1e-3


class DegenerateGradient(ZeroDivisionError):
    pass


@dataclass
class Residual:
    """Raw residual and the largest-term scale at each point."""

    value: np.ndarray
    scale: np.ndarray
    excluded: np.ndarray | None = None

    @classmethod
    def of(cls, *terms) -> "Residual":
        arrs = [np.asarray(t.value if isinstance(t, Jet2D) else t) for t in terms]
        arrs = np.broadcast_arrays(*arrs)
        total = sum(arrs[1:], arrs[0])
        scale = np.max(np.abs(np.stack(arrs)), axis=0)
        return cls(total, scale)

    @property
    def normalized(self) -> np.ndarray:
        mag = np.abs(self.value)
        return np.where(mag == 0, 0.0, mag / np.maximum(self.scale, _TINY))


def _fields(s, x, t) -> tuple[FieldJets, float, float]:
    if isinstance(s, FieldJets):
        raise TypeError("pass a bundle, not evaluated fields")
    return s.evaluate(x, t), s.params.alpha, s.params.lam


def _d(j: Jet2D, i: int, k: int) -> np.ndarray:
    return j.deriv(i, k)


# ---------------------------------------------------------------------------
# field equations


def akns_residual(s: SolutionBundle, x, t) -> tuple[Residual, Residual]:
    F, a, _ = _fields(s, x, t)
    u, v, dl = F.u, F.v, F.delta
    uv, vv, d = u.value, v.value, dl.value
    ru = Residual.of(_d(u, 0, 1), 2 * a * d * vv * uv * uv, -a * d * _d(u, 2, 0))
    rv = Residual.of(_d(v, 0, 1), -2 * a * d * vv * vv * uv, a * d * _d(v, 2, 0))
    return ru, rv


def lax_residual(s: SolutionBundle, x, t) -> tuple[Residual, ...]:
    F, a, lam = _fields(s, x, t)
    u, v, d = F.u.value, F.v.value, F.delta.value
    p1, p2 = F.phi1.value, F.phi2.value
    ux, vx = _d(F.u, 1, 0), _d(F.v, 1, 0)
    ad = a * d
    L1 = Residual.of(_d(F.phi1, 1, 0), -lam * p1, -v * p2)
    L2 = Residual.of(_d(F.phi2, 1, 0), -u * p1, lam * p2)
    L3 = Residual.of(_d(F.phi1, 0, 1), -ad * u * v * p1, 2 * lam**2 * ad * p1,
                     ad * vx * p2, 2 * lam * ad * v * p2)
    L4 = Residual.of(_d(F.phi2, 0, 1), -ad * ux * p1, 2 * lam * ad * u * p1,
                     ad * u * v * p2, -2 * lam**2 * ad * p2)
    return L1, L2, L3, L4


def zero_curvature_residual(s: SolutionBundle, x, t) -> np.ndarray:
    """U_t - V_x + [U, V] as a (2, 2, ...) array of residual values."""
    F, a, lam = _fields(s, x, t)
    u, v, dl = F.u, F.v, F.delta
    ad = dl * a
    A = ad * u * v - ad * (2 * lam**2)
    ux, vx = u.dx(), v.dx()
    # B and C carry one x-derivative; build them on the reduced box
    B = -_trim(ad, vx) * vx - _trim(ad * v * (2 * lam), vx)
    C = _trim(ad, ux) * ux - _trim(ad * u * (2 * lam), ux)
    Ax = A.dx()
    Bx, Cx = B.dx(), C.dx()
    A0, B0, C0 = A.value, B.value, C.value
    uv, vv = u.value, v.value
    m11 = -Ax.value + vv * C0 - B0 * uv
    m12 = _d(v, 0, 1) - Bx.value + 2 * lam * B0 - 2 * vv * A0
    m21 = _d(u, 0, 1) - Cx.value + 2 * uv * A0 - 2 * lam * C0
    m22 = Ax.value + uv * B0 - C0 * vv
    return np.array([[m11, m12], [m21, m22]])


def _trim(j: Jet2D, like: Jet2D) -> Jet2D:
    nx, nt = like.box
    return Jet2D(j.coeffs[:nx, :nt], j.x, j.t)


def fsys_residual(s: SolutionBundle, x, t) -> tuple[Residual, Residual]:
    F, a, lam = _fields(s, x, t)
    u, v, d = F.u.value, F.v.value, F.delta.value
    p1, p2 = F.phi1.value, F.phi2.value
    ad = a * d
    r1 = Residual.of(_d(F.f, 1, 0), p1 * p2)
    r2 = Residual.of(_d(F.f, 0, 1), -ad * v * p2 * p2, -4 * ad * lam * p1 * p2, ad * u * p1 * p1)
    return r1, r2


def schwarzian_residual(s: SolutionBundle, x, t, grad_tol: float = 1e-8,
                        exclude_degenerate: bool = False) -> Residual:
    """Schwarzian form of the system, multiplied through by f_x**3.

    Points with |f_x| <= grad_tol * max(|f|, 1) raise DegenerateGradient, or are
    flagged in ``Residual.excluded`` when ``exclude_degenerate`` is set.
    """
    F, a, lam = _fields(s, x, t)
    f = F.f
    d = F.delta.value
    dt = _d(F.delta, 0, 1)
    fx, ft = _d(f, 1, 0), _d(f, 0, 1)
    fxx, fxt, ftt = _d(f, 2, 0), _d(f, 1, 1), _d(f, 0, 2)
    fxxx, fxxxx = _d(f, 3, 0), _d(f, 4, 0)
    ref = np.maximum(np.abs(f.value), 1.0)
    degenerate = np.abs(fx) <= grad_tol * ref
    if np.any(degenerate) and not exclude_degenerate:
        raise DegenerateGradient("f_x vanishes; the Schwarzian form is undefined")
    a2d3 = a * a * d**3
    lad = 8 * lam * a * d * d
    r = Residual.of(
        d * ftt * fx * fx, -d * ft * fxt * fx,
        -a2d3 * fxxxx * fx * fx, 4 * a2d3 * fxx * fxxx * fx, -3 * a2d3 * fxx**3,
        -lad * fxt * fx * fx, lad * ft * fxx * fx,
        -3 * d * ft * fxt * fx, 3 * d * ft * ft * fxx,
        -dt * ft * fx * fx,
    )
    r.excluded = degenerate if np.any(degenerate) else None
    return r


# ---------------------------------------------------------------------------
# symmetry generators


@dataclass(frozen=True)
class GeneratorCoeffs:
    """Constants c1..c5 and the time function (ascending polynomial in t).

    ``mode="original"`` uses the point symmetries of the field equations alone;
    ``mode="enlarged"`` includes the localized nonlocal symmetry acting on
    (phi1, phi2, f).
    """

    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    time_fn: tuple = (0.0,)
    mode: str = "enlarged"

    def time_jet(self, T: Jet2D) -> Jet2D:
        out = Jet2D.constant(self.time_fn[-1], T.x, T.t, box=T.box)
        for c in self.time_fn[-2::-1]:
            out = out * T + c
        return out

    def time_derivative_jet(self, T: Jet2D) -> Jet2D:
        d = np.polynomial.polynomial.polyder(np.asarray(self.time_fn, dtype=float))
        if d.size == 0:
            d = np.zeros(1)
        return GeneratorCoeffs(time_fn=tuple(d)).time_jet(T)


def _sigmas(F: FieldJets, g: GeneratorCoeffs, X: Jet2D, T: Jet2D):
    """Characteristics sigma1..sigma6 as jets (sigma4..6 are None in original mode)."""
    tf = g.time_jet(T)
    tfp = g.time_derivative_jet(T)
    u, v, dl, p1, p2, f = F.u, F.v, F.delta, F.phi1, F.phi2, F.f
    if g.mode == "original":
        xc = X * g.c1 + g.c2
        Ubar = u * (-2 * g.c1 - g.c3) + p2 * p2 * g.c4
        Vbar = v * g.c3 + p1 * p1 * g.c4
        Dbar = dl * (2 * g.c1) - dl * tfp
    elif g.mode == "enlarged":
        xc = Jet2D.constant(g.c1, X.x, X.t, box=X.box)
        Ubar = u * g.c2 + p2 * p2 * g.c3
        Vbar = -v * g.c2 + p1 * p1 * g.c3
        Dbar = -dl * tfp
    else:
        raise ValueError("mode must be 'original' or 'enlarged'")

    def char(field_jet, image):
        fx, ft = field_jet.dx(), field_jet.dt()
        box = (fx.box[0], ft.box[1])
        cut = lambda j: Jet2D(j.coeffs[:box[0], :box[1]], j.x, j.t)
        return cut(xc) * cut(fx) + cut(tf) * cut(ft) - cut(image)

    s1 = char(u, Ubar)
    s2 = char(v, Vbar)
    s3 = char(dl, Dbar)
    if g.mode == "original":
        return s1, s2, s3, None, None, None
    P1 = -(p1 * 0.5) * (2 * g.c3 * f + (g.c2 - g.c4))
    P2 = (p2 * 0.5) * ((g.c2 + g.c4) - 2 * g.c3 * f)
    P3 = -g.c3 * f * f + g.c4 * f + g.c5
    return s1, s2, s3, char(p1, P1), char(p2, P2), char(f, P3)


def symmetry_residual(s: SolutionBundle, g: GeneratorCoeffs, x, t) -> dict[str, Residual]:
    """Linearized-system residuals of the generator's characteristics on the bundle."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    F = s.evaluate(x, t)
    a, lam = s.params.alpha, s.params.lam
    X, T = J.coordinates(x, t)
    S1, S2, S3, S4, S5, S6 = _sigmas(F, g, X, T)
    val = lambda j: j.value
    u, v, d = F.u.value, F.v.value, F.delta.value
    p1, p2 = F.phi1.value, F.phi2.value
    uxx, vxx = _d(F.u, 2, 0), _d(F.v, 2, 0)
    s1, s2, s3 = val(S1), val(S2), val(S3)
    ad = a * d
    out = {
        "lin_u": Residual.of(_d(S1, 0, 1), 2 * a * v * u * u * s3, -a * uxx * s3,
                             2 * ad * u * u * s2, 4 * ad * u * v * s1, -ad * _d(S1, 2, 0)),
        "lin_v": Residual.of(_d(S2, 0, 1), -2 * a * v * v * u * s3, a * vxx * s3,
                             -2 * ad * v * v * s1, -4 * ad * u * v * s2, ad * _d(S2, 2, 0)),
    }
    if g.mode == "original":
        return out
    ux, vx = _d(F.u, 1, 0), _d(F.v, 1, 0)
    s4, s5, s6 = val(S4), val(S5), val(S6)
    s1x, s2x = _d(S1, 1, 0), _d(S2, 1, 0)
    l2 = lam * lam
    out["lin_lax1"] = Residual.of(_d(S4, 1, 0), -s2 * p2, -v * s5, -lam * s4)
    out["lin_lax2"] = Residual.of(_d(S5, 1, 0), -s1 * p1, -u * s4, lam * s5)
    out["lin_lax3"] = Residual.of(
        _d(S4, 0, 1), -a * u * v * p1 * s3, -ad * v * p1 * s1, -ad * u * p1 * s2,
        -ad * u * v * s4, 2 * lam * a * v * p2 * s3, 2 * lam * ad * p2 * s2,
        2 * lam * ad * v * s5, 2 * l2 * a * p1 * s3, 2 * l2 * ad * s4,
        a * s3 * p2 * vx, ad * p2 * s2x, ad * s5 * vx)
    out["lin_lax4"] = Residual.of(
        _d(S5, 0, 1), ad * u * p2 * s2, ad * u * v * s5, a * u * v * p2 * s3,
        ad * v * s1 * p2, 2 * lam * a * u * p1 * s3, 2 * lam * ad * p1 * s1,
        2 * lam * ad * u * s4, -2 * l2 * a * p2 * s3, -2 * l2 * ad * s5,
        -a * s3 * p1 * ux, -ad * p1 * s1x, -ad * s4 * ux)
    out["lin_f1"] = Residual.of(_d(S6, 1, 0), s4 * p2, s5 * p1)
    out["lin_f2"] = Residual.of(
        _d(S6, 0, 1), -4 * a * lam * s3 * p1 * p2, -4 * a * lam * d * s4 * p2,
        2 * ad * s4 * p1 * u, -4 * a * lam * d * s5 * p1, -2 * ad * s5 * p2 * v,
        a * s3 * p1 * p1 * u, -a * s3 * p2 * p2 * v, ad * s1 * p1 * p1, -ad * s2 * p2 * p2)
    return out


# ---------------------------------------------------------------------------
# grid sweeps


@dataclass(frozen=True)
class Grid:
    x_min: float = -10.0
    x_max: float = 10.0
    nx: int = 101
    t_min: float = -5.0
    t_max: float = 5.0
    nt: int = 51

    def mesh(self):
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ts = np.linspace(self.t_min, self.t_max, self.nt)
        return np.meshgrid(xs, ts, indexing="ij")


@dataclass
class EquationStats:
    max_abs: float
    l2: float
    worst_x: float
    worst_t: float
    scale: float
    max_rel: float
    passed: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class ResidualReport:
    """Per-equation statistics of a grid sweep.

    ``scale`` is the largest term magnitude anywhere on the grid, so a PASS
    entry always satisfies ``max_abs <= scale * rel_tol``.  ``l2`` is the
    root-mean-square raw residual over unmasked points.
    """

    label: str
    grid: Grid
    rel_tol: float
    equations: dict[str, EquationStats] = field(default_factory=dict)
    masked: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.equations) and all(e.passed for e in self.equations.values())

    def to_json(self) -> dict:
        out = {name: e.to_json() for name, e in self.equations.items()}
        out["grid"] = asdict(self.grid)
        out["bundle"] = self.label
        out["rel_tol"] = self.rel_tol
        out["pass"] = self.passed
        out["masked_points"] = len(self.masked)
        out["masked"] = [list(p) for p in self.masked]
        out["notes"] = list(self.notes)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, default=_json_default)

    def lines(self) -> list[str]:
        rows = []
        for name, e in self.equations.items():
            rows.append("%-10s %s  max_rel=%.3e  max_abs=%.3e  scale=%.3e  at (x=%.4g, t=%.4g)"
                        % (name, "PASS" if e.passed else "FAIL", e.max_rel, e.max_abs, e.scale,
                           e.worst_x, e.worst_t))
        return rows


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _stats(r: Residual, x, t, rel_tol) -> EquationStats:
    keep = np.ones(np.size(r.value), dtype=bool) if r.excluded is None else ~r.excluded.ravel()
    x, t = np.ravel(x)[keep], np.ravel(t)[keep]
    mag = np.abs(r.value).ravel()[keep]
    scale = r.scale.ravel()[keep]
    if mag.size == 0:
        return EquationStats(0.0, 0.0, float("nan"), float("nan"), 0.0, 0.0, True)
    floor = SCALE_FLOOR * np.max(scale) if np.all(np.isfinite(scale)) else 0.0
    norm = np.where(mag == 0, 0.0, mag / np.maximum(np.maximum(scale, floor), _TINY))
    k = int(np.argmax(norm))
    finite = np.all(np.isfinite(mag))
    max_rel = float(norm[k]) if finite else float("inf")
    return EquationStats(max_abs=float(np.max(mag)), l2=float(np.sqrt(np.mean(mag**2))),
                         worst_x=float(x.ravel()[k]), worst_t=float(t.ravel()[k]),
                         scale=float(np.max(scale)), max_rel=max_rel,
                         passed=bool(finite and max_rel < rel_tol))


EQUATION_SETS = ("akns", "lax", "fsys", "schwarzian")


def residual_table(s: SolutionBundle, x, t, families=EQUATION_SETS) -> dict[str, Residual]:
    out = {}
    if "akns" in families:
        out["akns_u"], out["akns_v"] = akns_residual(s, x, t)
    if "lax" in families:
        for i, r in enumerate(lax_residual(s, x, t), 1):
            out["lax%d" % i] = r
    if "fsys" in families:
        out["f_x"], out["f_t"] = fsys_residual(s, x, t)
    if "schwarzian" in families:
        out["schwarzian"] = schwarzian_residual(s, x, t, exclude_degenerate=True)
    return out


def full_residual(s: SolutionBundle, grid: Grid = Grid(), rel_tol: float = 1e-8,
                  families=EQUATION_SETS, generator: GeneratorCoeffs | None = None) -> ResidualReport:
    """Sweep the grid, masking singular points, and gather per-equation statistics."""
    X, T = grid.mesh()
    x, t = X.ravel(), T.ravel()
    bad = s.singular(x, t)
    report = ResidualReport(label=s.label, grid=grid, rel_tol=rel_tol,
                            masked=list(zip(x[bad].tolist(), t[bad].tolist())), notes=list(s.notes))
    locus = getattr(s, "singular_locus", None)
    if locus is not None:
        report.notes.extend("excluded locus: " + line for line in locus())
    xs, ts = x[~bad], t[~bad]
    if xs.size == 0:
        return report
    table = residual_table(s, xs, ts, families)
    if generator is not None:
        table.update(symmetry_residual(s, generator, xs, ts))
    for name, r in table.items():
        report.equations[name] = _stats(r, xs, ts, rel_tol)
        if r.excluded is not None:
            report.notes.append("%s: %d point(s) skipped where f_x is degenerate"
                                % (name, int(np.count_nonzero(r.excluded))))
    return report
