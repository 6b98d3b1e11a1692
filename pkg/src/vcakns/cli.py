"""Command-line front end: verify, transform, reduce, export, specfun.

Exit status: 0 pass, 1 residual failure or violated constraint, 2 bad
configuration, 3 evaluation or I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import families as fam
from . import reduction as red
from . import specfun
from . import verify as V

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_EVAL = 0, 1, 2, 3

FAMILIES = ("seed", "case1", "case2")
# parameters accepted per family section; values are kept as normalized strings
FAMILY_KEYS = {
    "seed": ("alpha",),
    "case1": ("mode", "form", "lambda", "alpha", "k1", "k2", "k3", "n", "C", "C1", "C2",
              "kappa", "root", "F0", "sign"),
    "case2": ("form", "branch", "lambda", "alpha", "k2", "m", "C", "C1", "free"),
}
TRANSFORM_KEYS = ("eps", "repeat")
TEXT_KEYS = {"mode", "form"}
INT_KEYS = {"root", "branch", "repeat"}

FIG1_SOURCE = "C=5,C1=2,k1=0.18,k2=10,lambda=0.1,alpha=1,n=0.1"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _norm_number(key: str, raw: str, scalar: str) -> str:
    raw = raw.strip()
    if key in TEXT_KEYS:
        return raw
    try:
        if key in INT_KEYS:
            return str(int(raw))
        try:
            return repr(float(raw))
        except ValueError:
            if scalar != "complex":
                raise
            return repr(complex(raw.replace("i", "j")))
    except ValueError:
        raise ConfigError("bad value for %s: %r" % (key, raw)) from None


def parse_grid(text: str) -> V.Grid:
    try:
        xs, ts = text.split(",")
        x0, x1, nx = xs.split(":")
        t0, t1, nt = ts.split(":")
        return V.Grid(float(x0), float(x1), int(nx), float(t0), float(t1), int(nt))
    except ValueError:
        raise ConfigError("grid must read x_min:x_max:nx,t_min:t_max:nt, got %r" % text) from None


def format_grid(g: V.Grid) -> str:
    return "%r:%r:%d,%r:%r:%d" % (g.x_min, g.x_max, g.nx, g.t_min, g.t_max, g.nt)


@dataclass
class RunConfig:
    family: str = "seed"
    params: dict = field(default_factory=dict)
    transform: dict = field(default_factory=dict)
    grid: V.Grid = field(default_factory=V.Grid)
    rel_tol: float = 1e-8
    out: str = ""
    scalar: str = "real"
    convention: str = "modulus"

    def validate(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise ConfigError("unknown family %r" % self.family)
        g = self.grid
        if g.nx < 2 or g.nt < 2:
            raise ConfigError("grid needs nx, nt >= 2")
        if not (g.x_min < g.x_max and g.t_min < g.t_max):
            raise ConfigError("grid bounds must be increasing")
        if not (0 < self.rel_tol <= 1e-2):
            raise ConfigError("rel_tol must lie in (0, 1e-2]")
        if self.scalar not in ("real", "complex"):
            raise ConfigError("scalar must be real or complex")
        if self.convention not in ("modulus", "parameter"):
            raise ConfigError("convention must be modulus or parameter")
        allowed = set(FAMILY_KEYS[self.family])
        extra = set(self.params) - allowed
        if extra:
            raise ConfigError("unknown %s parameter(s): %s" % (self.family, ", ".join(sorted(extra))))
        return self

    def number(self, key: str, default=None):
        raw = self.params.get(key)
        if raw is None:
            if default is None:
                raise ConfigError("missing parameter %s for family %s" % (key, self.family))
            return default
        if key in INT_KEYS:
            return int(raw)
        if key in TEXT_KEYS:
            return raw
        val = complex(raw) if "j" in raw else float(raw)
        return val

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {"family": self.family, "grid": format_grid(self.grid),
                     "tol": repr(self.rel_tol), "scalar": self.scalar,
                     "convention": self.convention}
        if self.out:
            cp["run"]["out"] = self.out
        if self.params:
            cp[self.family] = {k: self.params[k] for k in sorted(self.params)}
        if self.transform:
            cp["transform"] = {k: self.transform[k] for k in sorted(self.transform)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        run = cp["run"] if cp.has_section("run") else {}
        cfg = cls()
        cfg.family = run.get("family", cfg.family)
        if "grid" in run:
            cfg.grid = parse_grid(run["grid"])
        if "tol" in run:
            try:
                cfg.rel_tol = float(run["tol"])
            except ValueError:
                raise ConfigError("bad tol %r" % run["tol"]) from None
        cfg.scalar = run.get("scalar", cfg.scalar)
        cfg.convention = run.get("convention", cfg.convention)
        cfg.out = run.get("out", "")
        if cp.has_section(cfg.family):
            cfg.params = {k: _norm_number(k, v, cfg.scalar) for k, v in cp[cfg.family].items()}
        if cp.has_section("transform"):
            cfg.transform = {k: _norm_number(k, v, cfg.scalar) for k, v in cp["transform"].items()}
        return cfg.validate()


_FLAG_KEYS = {"alpha": "alpha", "lam": "lambda", "k1": "k1", "k2": "k2", "k3": "k3", "n": "n",
              "m": "m", "C": "C", "C1": "C1", "C2": "C2", "kappa": "kappa", "mode": "mode",
              "form": "form", "root": "root", "branch": "branch", "free": "free", "F0": "F0",
              "sign": "sign"}


def build_config(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = RunConfig.from_ini(fh.read())
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc) from None
    else:
        cfg = RunConfig()
    if getattr(args, "family", None):
        if args.family != cfg.family:
            cfg.params = {}
        cfg.family = args.family
    if getattr(args, "scalar", None):
        cfg.scalar = args.scalar
    if getattr(args, "convention", None):
        cfg.convention = args.convention
    if getattr(args, "grid", None):
        cfg.grid = parse_grid(args.grid)
    if getattr(args, "tol", None) is not None:
        cfg.rel_tol = args.tol
    if getattr(args, "out", None):
        cfg.out = args.out
    for attr, key in _FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None and key in FAMILY_KEYS.get(cfg.family, ()):
            cfg.params[key] = _norm_number(key, str(val), cfg.scalar)
    for key in TRANSFORM_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg.transform[key] = _norm_number(key, str(val), cfg.scalar)
    return cfg.validate()


# ---------------------------------------------------------------------------
# bundle assembly


def _domain(cfg: RunConfig):
    g = cfg.grid
    return ((g.x_min, g.x_max), (g.t_min, g.t_max))


def case1_params(cfg: RunConfig) -> red.Case1Params:
    mode = cfg.number("mode", "sn")
    form = cfg.number("form", "derived")
    if mode not in ("sn", "ode"):
        raise ConfigError("case1 mode must be sn or ode")
    lam, alpha = cfg.number("lambda"), cfg.number("alpha")
    explicit = "k1" in cfg.params and "k2" in cfg.params and "k3" in cfg.params
    if mode == "ode" and explicit:
        return red.Case1Params(
            k1=cfg.number("k1"), k2=cfg.number("k2"), k3=cfg.number("k3"), lam=lam, alpha=alpha,
            C=cfg.number("C", 1.0), C1=cfg.number("C1", 0.0), C2=cfg.number("C2", 0.0),
            kappa=cfg.number("kappa", 0.0), form=form, mode="numeric_ode",
            F0=cfg.params.get("F0") and cfg.number("F0"), sign0=cfg.number("sign", 1.0),
            convention=cfg.convention)
    k3, n = cfg.number("k3"), cfg.number("n")
    if form == "printed":
        p = red.case1_sn_printed(lam, alpha, k3, n, convention=cfg.convention)
    else:
        root = cfg.params.get("root")
        p = red.case1_sn_derived(lam, alpha, k3, n, C=cfg.number("C", 1.0),
                                 root=None if root is None else int(root), convention=cfg.convention)
    if mode == "ode":
        p = red.case1_numeric_twin(p)
    return p


def case2_params(cfg: RunConfig) -> red.Case2Params:
    form = cfg.number("form", "derived")
    branch = cfg.number("branch", 1)
    if not 1 <= branch <= 8:
        raise ConfigError("case2 branch must be 1..8")
    sets = red.case2_branches(cfg.number("C", 1.0), cfg.number("alpha"), cfg.number("lambda"),
                              cfg.number("m"), cfg.number("free", 1.0), form=form,
                              k2=cfg.number("k2", 0.0), Ctilde1=cfg.number("C1", 1.0),
                              convention=cfg.convention)
    return sets[branch - 1]


def make_bundle(cfg: RunConfig) -> fam.SolutionBundle:
    if cfg.family == "seed":
        alpha = cfg.number("alpha", 1.0)
        if isinstance(alpha, complex) and cfg.scalar != "complex":
            raise ConfigError("complex alpha needs scalar = complex")
        s = fam.seed_soliton(alpha, _domain(cfg))
    elif cfg.family == "case1":
        s = fam.case1_bundle(case1_params(cfg), _domain(cfg))
    else:
        s = fam.case2_bundle(case2_params(cfg), _domain(cfg))
    return s


def apply_transform(cfg: RunConfig, s: fam.SolutionBundle) -> fam.SolutionBundle:
    if not cfg.transform:
        return s
    raw = cfg.transform.get("eps")
    if raw is None:
        raise ConfigError("transform needs eps")
    eps = complex(raw) if "j" in raw else float(raw)
    repeat = int(cfg.transform.get("repeat", "1"))
    if repeat < 0:
        raise ConfigError("repeat must be non-negative")
    for _ in range(repeat):
        s = fam.finite_transform(s, eps)
    return s


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v: float) -> str:
    return "%.17g" % v


def grid_dump(s: fam.SolutionBundle, grid: V.Grid) -> str:
    """CSV of (x, t, Re/Im u, v, f, masked); masked rows leave the field cells empty."""
    X, T = grid.mesh()
    x, t = X.ravel(), T.ravel()
    bad = s.singular(x, t)
    vals = {}
    if np.any(~bad):
        F = s.evaluate(x[~bad], t[~bad])
        for name in ("u", "v", "f"):
            col = np.full(x.shape, np.nan, dtype=complex)
            col[~bad] = F.__getattribute__(name).value
            vals[name] = col
    lines = ["x,t,re_u,im_u,re_v,im_v,re_f,im_f,masked"]
    for i in range(x.size):
        head = "%s,%s" % (_fmt(x[i]), _fmt(t[i]))
        if bad[i]:
            lines.append(head + ",,,,,,,1")
            continue
        cells = []
        for name in ("u", "v", "f"):
            z = vals[name][i]
            cells += [_fmt(z.real + 0.0), _fmt(z.imag + 0.0)]
        lines.append(head + "," + ",".join(cells) + ",0")
    return "\n".join(lines) + "\n"


def read_dump(text: str):
    """Parse a grid dump back into arrays (masked cells become NaN)."""
    rows = text.strip("\n").split("\n")[1:]
    data = []
    for r in rows:
        cells = r.split(",")
        data.append([float(c) if c else np.nan for c in cells])
    return np.array(data)


def _write(path: str, text: str) -> None:
    if not path or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=V._json_default) + "\n"


def quasi_period(values: np.ndarray, dx: float) -> float:
    """Shift P minimizing the spread of log|u(x+P)| - log|u(x)| along one row.

    A periodic background under an exponential envelope keeps this difference
    constant at the true period.  The minimum is refined by a parabola through
    the neighbouring shifts.
    """
    w = np.log(np.abs(values) + 1e-300)
    n = w.size
    spreads = np.full(n // 2, np.inf)
    for j in range(2, n // 2):
        d = w[j:] - w[:-j]
        spreads[j] = np.std(d)
    # the first deep local minimum is the fundamental period
    cand = [j for j in range(3, n // 2 - 1) if spreads[j] < spreads[j - 1] and spreads[j] <= spreads[j + 1]]
    if not cand:
        return float("nan")
    floor = min(spreads[j] for j in cand)
    j = next(j for j in cand if spreads[j] <= 2 * floor + 1e-12)
    a, b, c = spreads[j - 1], spreads[j], spreads[j + 1]
    den = a - 2 * b + c
    off = 0.5 * (a - c) / den if den > 0 else 0.0
    return float((j + off) * dx)


def case1_figure_summary(s: fam.Case1Bundle, grid: V.Grid, away: float = 8.0) -> dict:
    """Front count per time row and the measured spatial period of the background."""
    p = s.p
    K = specfun.ellip_K(p.n, p.convention)
    predicted = 4 * K / abs(p.k2)
    X, T = grid.mesh()
    xs = X[:, 0]
    dx = xs[1] - xs[0]
    fronts, periods = [], []
    for j in range(grid.nt):
        t = T[0, j]
        F = s.evaluate(xs, np.full_like(xs, t))
        f = np.real(F.f.value)
        sgn = np.sign(f)
        sgn = sgn[sgn != 0]
        fronts.append(int(np.count_nonzero(np.diff(sgn) != 0)))
        # background: the part of the row at least ``away`` from the front
        k = int(np.argmin(np.abs(f)))
        side = xs > xs[k] + away if xs[-1] - xs[k] > xs[k] - xs[0] else xs < xs[k] - away
        u = np.real(F.u.value)[side]
        if u.size > 8:
            periods.append(quasi_period(u, dx))
    measured = float(np.nanmedian(periods)) if periods else float("nan")
    return {
        "fronts_per_row": sorted(set(fronts)),
        "predicted_period_x": predicted,
        "measured_period_x": measured,
        "period_rel_error": abs(measured - predicted) / predicted,
        "row_min_u": [float(np.min(np.real(s.evaluate(xs, np.full_like(xs, T[0, j])).u.value)))
                      for j in (0, grid.nt // 2, grid.nt - 1)],
        "row_max_u": [float(np.max(np.real(s.evaluate(xs, np.full_like(xs, T[0, j])).u.value)))
                      for j in (0, grid.nt // 2, grid.nt - 1)],
    }


def parse_fig1(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, _, val = item.partition("=")
        out[key.strip()] = float(val)
    return out


def fig1_config(text: str, base: RunConfig) -> tuple[RunConfig, list[str]]:
    """Literal figure parameter list run through the general numeric profile flow.

    k3 and C2 are absent from the list; they come from the configuration with
    defaults k3 = 1, C2 = 0.
    """
    given = parse_fig1(text)
    missing = [k for k in ("lambda", "alpha", "k1", "k2") if k not in given]
    if missing:
        raise ConfigError("figure list lacks %s" % ", ".join(missing))
    extra = base.params if base.family == "case1" else {}
    params = {"mode": "ode", "form": "printed"}
    for key in ("lambda", "alpha", "k1", "k2", "n", "C", "C1"):
        if key in given:
            params[key] = repr(given[key])
    params["k3"] = extra.get("k3", "1.0")
    params["C2"] = extra.get("C2", "0.0")
    notes = ["under-specified in source: k3 and C2 are not listed (using k3 = %s, C2 = %s)"
             % (params["k3"], params["C2"])]
    lam, alpha, k2 = given["lambda"], given["alpha"], given["k2"]
    if "n" in given:
        k3_sn = 1 / (2 * lam * alpha * k2)
        k1_sn = float(red.case1_sn_printed_exact(lam, alpha, k3_sn, given["n"])["k1"])
        notes.append("listed k1 = %r disagrees with the sn constraints, which give k1 = %r at k3 = %r"
                     % (given["k1"], k1_sn, k3_sn))
    notes.append("amplitude claim for this figure is not reproducible from the listed parameters")
    cfg = replace(base, family="case1", params=params, transform={})
    return cfg.validate(), notes


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, perturb: str | None = None) -> int:
    s = apply_transform(cfg, make_bundle(cfg))
    if perturb:
        name, _, amount = perturb.partition(":")
        try:
            s = fam.PerturbedBundle(s, name, float(amount))
        except ValueError as exc:
            raise ConfigError("bad --perturb %r: %s" % (perturb, exc)) from None
    report = V.full_residual(s, cfg.grid, cfg.rel_tol)
    _write(cfg.out, report.dumps() + "\n")
    for line in report.lines():
        print(line, file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_transform(cfg: RunConfig, dump: str | None = None) -> int:
    base = make_bundle(cfg)
    if base.params.lam != 0:
        raise red.ConstraintViolation("the finite transformation needs lambda = 0")
    if "eps" not in cfg.transform:
        raise ConfigError("transform needs --eps")
    s = apply_transform(cfg, base)
    report = V.full_residual(s, cfg.grid, cfg.rel_tol)
    out = report.to_json()
    out["transform"] = {"eps": cfg.transform["eps"], "repeat": cfg.transform.get("repeat", "1")}
    out["singular_locus"] = s.singular_locus() if isinstance(s, fam.TransformedBundle) else []
    _write(cfg.out, _json(out))
    if dump:
        _write(dump, grid_dump(s, cfg.grid))
    return EXIT_PASS if report.passed else EXIT_FAIL


def _params_dict(p) -> dict:
    d = {k: v for k, v in vars(p).items() if k != "notes"}
    d = {k: (float(v) if isinstance(v, (np.floating, np.integer)) else v) for k, v in d.items()}
    d["notes"] = list(p.notes)
    return d


def cmd_reduce(cfg: RunConfig, case: int, ode_csv: str | None = None, ode_points: int = 201) -> int:
    if case == 1:
        cfg.family = "case1"
        lam, alpha = cfg.number("lambda"), cfg.number("alpha")
        k3, n = cfg.number("k3"), cfg.number("n")
        exact = red.case1_sn_printed_exact(lam, alpha, k3, n)
        printed = red.case1_sn_printed(lam, alpha, k3, n, convention=cfg.convention)
        echo = {
            "case": 1,
            "printed": {key: float(val) for key, val in exact.items()},
            "printed_rational": {key: str(val) for key, val in exact.items()},
            "printed_matched": {"C": printed.C, "C1": printed.C1, "C2": printed.C2},
            "derived_candidates": [{k: float(v) for k, v in c.items()}
                                   for c in red.case1_sn_candidates(lam, alpha, k3, n, cfg.convention)],
        }
        p = case1_params(cfg)
        s = fam.case1_bundle(p, _domain(cfg))
    elif case == 2:
        cfg.family = "case2"
        p = case2_params(cfg)
        branch = cfg.number("branch", 1)
        other = "printed" if p.form == "derived" else "derived"
        twin = case2_params(replace(cfg, params={**cfg.params, "form": other}))
        echo = {"case": 2, "branch": branch,
                p.form: _branch_echo(p), other: _branch_echo(twin)}
        s = fam.case2_bundle(p, _domain(cfg))
    else:
        raise ConfigError("case must be 1 or 2")
    echo["selected"] = _params_dict(p)
    report = V.full_residual(s, cfg.grid, cfg.rel_tol)
    echo["notes"] = list(s.notes)
    echo["report"] = report.to_json()
    _write(cfg.out, _json(echo))
    if ode_csv:
        lo, hi = (s.xi_range if case == 1 else s.s_range)
        z = np.linspace(lo, hi, ode_points)
        F, dF, _ = s.profile.values(z)
        rows = ["xi,F,F_xi"] + ["%s,%s,%s" % (_fmt(a), _fmt(b), _fmt(c)) for a, b, c in zip(z, F, dF)]
        _write(ode_csv, "\n".join(rows) + "\n")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _branch_echo(p: red.Case2Params) -> dict:
    out = {k: float(getattr(p, k)) for k in ("k1", "k2", "k3", "l0", "l1", "Ctilde1", "Ctilde2", "kappa")}
    if p.k2 == 0:
        out["note"] = "elliptic (no exponential envelope)"
    return out


def cmd_export(cfg: RunConfig, fig1: str | None = None, summary: str | None = None,
               gnuplot: str | None = None) -> int:
    notes = []
    if fig1 is not None:
        cfg, notes = fig1_config(fig1 or FIG1_SOURCE, cfg)
        try:
            s = make_bundle(cfg)
        except (red.NegativeRadicand, red.StiffnessError) as exc:
            notes.append("no bounded profile for these parameters: %s" % exc)
            A = red.case1_radicand(case1_params(cfg))
            notes.append("radicand coefficients (ascending): %s" % ", ".join(repr(float(a)) for a in A))
            if summary:
                _write(summary, _json({"bundle": "case1(figure list)", "grid": vars(cfg.grid),
                                       "notes": notes, "reproducible": False}))
            for line in notes:
                print(line, file=sys.stderr)
            return EXIT_FAIL
    else:
        s = make_bundle(cfg)
    s = apply_transform(cfg, s)
    _write(cfg.out, grid_dump(s, cfg.grid))
    if summary:
        info = {"bundle": s.label, "grid": vars(cfg.grid), "notes": notes + list(s.notes)}
        if isinstance(s, fam.Case1Bundle):
            info.update(case1_figure_summary(s, cfg.grid))
        _write(summary, _json(info))
    if gnuplot:
        _write(gnuplot, "set datafile separator ','\nset xlabel 'x'\nset ylabel 't'\n"
                        "splot '%s' every ::1 using 1:2:3 with points pt 7 ps 0.3 title 'Re u'\n"
                        % (cfg.out or "grid.csv"))
    return EXIT_PASS


def _u_values(tokens: str, k: float, convention: str) -> list[float]:
    out = []
    for tok in tokens.split(","):
        tok = tok.strip()
        if tok.endswith("K"):
            scale = tok[:-1]
            out.append((float(scale) if scale else 1.0) * specfun.ellip_K(k, convention))
        else:
            out.append(float(tok))
    return out


def cmd_specfun(which: str, k_values: list[float], u_range: str | None, u_list: str | None,
                convention: str, out: str) -> int:
    lines = []
    if which == "K":
        lines.append("k,K")
        for k in k_values:
            lines.append("%r,%r" % (k, specfun.ellip_K(k, convention)))
    else:
        fn = {"sn": specfun.sn, "cn": specfun.cn, "dn": specfun.dn}[which]
        lines.append("u,k,%s" % which)
        for k in k_values:
            if u_list:
                us = _u_values(u_list, k, convention)
            else:
                a, b, n = (u_range or "0:1:11").split(":")
                us = list(np.linspace(float(a), float(b), int(n)))
            for u in us:
                lines.append("%r,%r,%r" % (float(u), k, fn(u, k, convention)))
    _write(out, "\n".join(lines) + "\n")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--alpha", type=str)
    p.add_argument("--lambda", dest="lam", type=str)
    for name in ("k1", "k2", "k3", "n", "m", "C", "C1", "C2", "kappa", "free", "F0", "sign"):
        p.add_argument("--" + name, type=str)
    p.add_argument("--mode", choices=("sn", "ode"))
    p.add_argument("--form", choices=("derived", "printed"))
    p.add_argument("--root", type=int)
    p.add_argument("--branch", type=int)
    p.add_argument("--eps", type=str)
    p.add_argument("--repeat", type=int)
    p.add_argument("--grid", help="x_min:x_max:nx,t_min:t_max:nt")
    p.add_argument("--tol", type=float)
    p.add_argument("--scalar", choices=("real", "complex"))
    p.add_argument("--convention", choices=("modulus", "parameter"))
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--dump-config", help="write the merged configuration to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vcakns", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("verify", help="residual report for a family")
    _family_flags(p)
    p.add_argument("--perturb", help="field:amount added to one field (failure probe)")

    p = sub.add_parser("transform", help="apply the finite symmetry transformation")
    _family_flags(p)
    p.add_argument("--dump", help="also write the transformed grid CSV here")

    p = sub.add_parser("reduce", help="similarity-reduction constants and check")
    _family_flags(p)
    p.add_argument("--case", type=int, choices=(1, 2), required=True)
    p.add_argument("--ode-csv", help="write (xi, F, F_xi) dense output here")
    p.add_argument("--ode-points", type=int, default=201)

    p = sub.add_parser("export", help="grid CSV for plotting")
    _family_flags(p)
    p.add_argument("--fig1", nargs="?", const="", default=None,
                   help="use the figure parameter list (default %s)" % FIG1_SOURCE)
    p.add_argument("--summary", help="write a JSON summary of the surface here")
    p.add_argument("--gnuplot", help="write a gnuplot script here")

    p = sub.add_parser("specfun", help="tables of sn, cn, dn or K")
    p.add_argument("--which", choices=("sn", "cn", "dn", "K"), required=True)
    p.add_argument("--k", default="0.5", help="comma-separated moduli")
    p.add_argument("--u-range", help="a:b:n")
    p.add_argument("--u", dest="u_list", help="comma-separated u values; 'K' and '2K' allowed")
    p.add_argument("--convention", choices=("modulus", "parameter"), default="modulus")
    p.add_argument("--out", default="")
    return parser


_RANGE_FLAGS = ("--grid", "--u-range")


def _join_ranges(argv: list[str]) -> list[str]:
    """Glue range values that start with '-' to their flag so argparse keeps them."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append("%s=%s" % (argv[i], argv[i + 1]))
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = _join_ranges(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_PASS if not exc.code else EXIT_CONFIG
    try:
        if args.command == "specfun":
            try:
                ks = [float(k) for k in args.k.split(",")]
            except ValueError:
                raise ConfigError("bad --k %r" % args.k) from None
            return cmd_specfun(args.which, ks, args.u_range, args.u_list, args.convention, args.out)
        if args.command == "reduce" and not args.family:
            args.family = "case%d" % args.case
        cfg = build_config(args)
        if args.dump_config:
            _write(args.dump_config, cfg.to_ini())
        if args.command == "verify":
            return cmd_verify(cfg, args.perturb)
        if args.command == "transform":
            return cmd_transform(cfg, args.dump)
        if args.command == "reduce":
            return cmd_reduce(cfg, args.case, args.ode_csv, args.ode_points)
        return cmd_export(cfg, args.fig1, args.summary, args.gnuplot)
    except (ConfigError, specfun.ModulusOutOfRange) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (red.ConstraintViolation, red.ZeroFreeParameter) as exc:
        print("constraint violated: %s" % exc, file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ArithmeticError, ValueError, RuntimeError) as exc:
        print("evaluation error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
