"""Acceptance criteria 1-9, one printed PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py``; the verdict lines are written
straight to the terminal, bypassing capture.
"""
from __future__ import annotations

import numpy as np
import pytest

from vcakns import cli, specfun
from vcakns import families as fam
from vcakns import reduction as red
from vcakns import verify as V


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> bool:
        with capsys.disabled():
            print("\nacceptance %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))
        return ok
    return emit


def _worst(report: V.ResidualReport) -> float:
    return max(e.max_rel for e in report.equations.values())


SEED_GRID = V.Grid(-10, 10, 101, -5, 5, 51)


def test_1_seed_certificate(verdict):
    s = fam.seed_soliton(1.0)
    r = V.full_residual(s, SEED_GRID, rel_tol=1e-10)
    # hand-substituted terms at a few points: u_t = -2 alpha sech^2, the flux = +2 alpha sech^2
    x, t = np.array([0.3, -1.2, 2.0]), np.array([0.1, 0.4, -0.7])
    F = s.evaluate(x, t)
    sech2 = 1 / np.cosh(2 * t - x) ** 2
    u, v = F.u.value, F.v.value
    flux = 2 * v * u * u - F.u.deriv(2, 0)
    hand = (np.allclose(F.u.deriv(0, 1), -2 * sech2, atol=1e-14, rtol=0)
            and np.allclose(flux, 2 * sech2, atol=1e-14, rtol=0))
    ok = r.passed and hand and len(r.equations) == 9
    assert verdict(1, ok, "seed alpha=1, 101x51, worst max_rel=%.2e, hand terms %s"
                   % (_worst(r), "agree" if hand else "DISAGREE"))


def test_2_transform_certificate(verdict):
    seed = fam.seed_soliton(1.0)
    rng = np.random.default_rng(2)
    x = rng.uniform(-10, 10, 2000)
    t = rng.uniform(-5, 5, 2000)
    parts, ok = [], True
    for eps in (0.1, 0.3, 0.9):
        s = fam.finite_transform(seed, eps)
        r = V.full_residual(s, SEED_GRID, rel_tol=1e-10)
        keep = ~s.singular(x, t)
        u = s.evaluate(x[keep], t[keep]).u.value
        E = np.exp(4 * t[keep] - 2 * x[keep])
        closed = 2 * (2 * eps - 1) * E / (1 - 2 * eps + E)
        err = float(np.max(np.abs(u - closed) / np.maximum(1.0, np.abs(closed))))
        locus = s.singular_locus()
        good = r.passed and err < 1e-12 and (bool(locus) == (eps > 0.5))
        ok &= good
        parts.append("eps=%g max_rel=%.1e closed-form=%.1e masked=%d" % (eps, _worst(r), err, len(r.masked)))
    assert verdict(2, ok, "; ".join(parts))


def test_3_group_law(verdict):
    seed = fam.seed_soliton(1.0)
    rng = np.random.default_rng(3)
    x = rng.uniform(-5, 5, 500)
    t = rng.uniform(-2, 2, 500)
    e1, e2 = 0.17, 0.21
    two = fam.finite_transform(fam.finite_transform(seed, e1), e2).evaluate(x, t).as_dict()
    one = fam.finite_transform(seed, e1 + e2).evaluate(x, t).as_dict()
    err = max(float(np.max(np.abs(two[k].value - one[k].value) / np.maximum(1, np.abs(one[k].value))))
              for k in fam.FIELD_NAMES)
    assert verdict(3, err < 1e-12, "eps1=%g eps2=%g, 500 points, 6 fields, max diff %.1e" % (e1, e2, err))


def test_4_nonlocal_symmetry(verdict):
    seed = fam.seed_soliton(1.0)
    grid = V.Grid(-10, 10, 41, -5, 5, 21)

    def check(g):
        return V.full_residual(seed, grid, rel_tol=1e-10, families=(), generator=g)

    r_orig = check(V.GeneratorCoeffs(c4=1.0, mode="original"))
    r_enl = check(V.GeneratorCoeffs(c3=-1.0, mode="enlarged"))
    rng = np.random.default_rng(4)
    lie_ok, lie_worst = True, 0.0
    for _ in range(20):
        c1, c2, c3 = rng.uniform(-1, 1, 3)
        g = V.GeneratorCoeffs(c1=c1, c2=c2, c3=c3, time_fn=tuple(rng.uniform(-1, 1, 4)), mode="original")
        r = check(g)
        lie_ok &= r.passed
        lie_worst = max(lie_worst, _worst(r))
    enl_names = {"lin_u", "lin_v", "lin_lax1", "lin_lax2", "lin_lax3", "lin_lax4", "lin_f1", "lin_f2"}
    ok = r_orig.passed and r_enl.passed and set(r_enl.equations) == enl_names and lie_ok
    assert verdict(4, ok, "c4=1 original %.1e; c3=-1 enlarged (8 eqs) %.1e; 20 Lie generators worst %.1e"
                   % (_worst(r_orig), _worst(r_enl), lie_worst))


def test_5_special_functions(verdict):
    rng = np.random.default_rng(5)
    u = rng.uniform(-20, 20, 10_000)
    k = rng.uniform(0, 1, 10_000)
    s, c, d = specfun.jacobi_sn_cn_dn(u, k)
    id1 = float(np.max(np.abs(s * s + c * c - 1)))
    id2 = float(np.max(np.abs(d * d + k * k * s * s - 1)))
    w = np.linspace(-10, 10, 401)
    lim0 = float(np.max(np.abs(specfun.sn(w, 0.0) - np.sin(w))))
    lim1 = float(np.max(np.abs(specfun.sn(w, 1.0) - np.tanh(w))))
    kk = np.linspace(0, 0.999, 200)
    quarter = float(np.max(np.abs(specfun.sn(specfun.ellip_K(kk), kk) - 1)))
    worst = max(id1, id2, lim0, lim1, quarter)
    assert verdict(5, worst < 1e-12, "identities %.1e/%.1e, k=0 %.1e, k=1 %.1e, sn(K)=1 %.1e"
                   % (id1, id2, lim0, lim1, quarter))


def _two_period_grid(p: red.Case1Params):
    """x spans two spatial periods of the sn background; t a short window."""
    per = 4 * specfun.ellip_K(p.n) / abs(p.k2)
    tw = min(2.0, per)
    return V.Grid(-per, per, 81, -tw, tw, 21)


def test_6_case1_certificate(verdict):
    lam, alpha, k3, n = 0.1, 1.0, 0.5, 0.1
    # printed constraint list, taken literally
    printed = red.case1_sn_printed(lam, alpha, k3, n)
    g = _two_period_grid(printed)
    s = fam.case1_bundle(printed, ((g.x_min, g.x_max), (g.t_min, g.t_max)))
    r_printed = V.full_residual(s, g, rel_tol=1e-6)
    # our own reduction of the same ansatz, reported alongside
    derived = red.case1_sn_derived(lam, alpha, k3, n)
    g = _two_period_grid(derived)
    s = fam.case1_bundle(derived, ((g.x_min, g.x_max), (g.t_min, g.t_max)))
    r_derived = V.full_residual(s, g, rel_tol=1e-6)
    # numeric flow against the closed form over one full period
    K = specfun.ellip_K(n)
    ode_err = 0.0
    for p in (printed, derived):
        twin = red.case1_numeric_twin(p)
        flow = red.case1_ode_integrate(twin, interval=(0.0, 4 * K))
        z = np.linspace(0.0, 4 * K, 801)
        F_num = flow.values(z)[0]
        F_cf = red.case1_closed_form(p, check=False).values(z)[0]
        ode_err = max(ode_err, float(np.max(np.abs(F_num - F_cf)) / np.max(np.abs(F_cf))))
    exact = red.case1_sn_printed_exact(lam, alpha, k3, n)
    from fractions import Fraction
    rational = exact == dict(b0=Fraction(1, 10), b1=Fraction(1, 500), k1=Fraction(625), k2=Fraction(10))
    ok = r_printed.passed and ode_err < 1e-8 and rational
    assert verdict(6, ok, "printed-constant bundle %s (max_rel %.2e); derived sn bundle %s (%.1e); "
                   "ODE vs closed form %.1e; rational constants %s"
                   % ("PASS" if r_printed.passed else "FAIL", _worst(r_printed),
                      "PASS" if r_derived.passed else "FAIL", _worst(r_derived), ode_err,
                      "exact" if rational else "MISMATCH"))


def _k2_zero_lambda(m: float) -> float:
    # derived branch 1 has k2 = (1 - m^2 - 8 lam^2 - 8 lam m)/4 at C = alpha = 1
    return (-8 * m + np.sqrt(64 * m * m + 32 * (1 - m * m))) / 16


def test_7_case2_certificate(verdict):
    grid = V.Grid(-3, 3, 41, -2, 2, 21)
    dom = ((-3, 3), (-2, 2))
    res = {}
    for form in ("printed", "derived"):
        res[form] = [V.full_residual(fam.case2_bundle(b, dom), grid, rel_tol=1e-6)
                     for b in red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form=form)]
    n_printed = sum(r.passed for r in res["printed"])
    n_derived = sum(r.passed for r in res["derived"])
    # k2 = 0 instances: printed list with k2 = 0, and the derived branch at the lambda giving k2 = 0
    lam0 = _k2_zero_lambda(0.5)
    elliptic = [red.case2_branches(1.0, 1.0, 0.1, 0.5, 1.0, form="printed", k2=0.0)[0],
                red.case2_branches(1.0, 1.0, lam0, 0.5, 1.0, form="derived")[0]]
    flat = True
    for p in elliptic:
        s = fam.case2_bundle(p, dom)
        for tt in (-1.0, 1.0):
            # no envelope: phi1 * D depends on x - k1 t only
            x = np.linspace(-1.5, 1.5, 13)
            x0 = x - p.k1 * tt
            x, x0 = x[np.abs(x0) <= 3], x0[np.abs(x0) <= 3]
            keep = ~s.singular(x, np.full_like(x, tt)) & ~s.singular(x0, np.zeros_like(x))
            x, x0 = x[keep], x0[keep]
            flat &= x.size > 3
            F = s.evaluate(x, np.full_like(x, tt))
            D = 1 / F.f.value
            F0 = s.evaluate(x0, np.zeros_like(x))
            flat &= abs(p.k2) < 1e-14 and np.allclose(F.phi1.value * D, F0.phi1.value / F0.f.value,
                                                      rtol=1e-10, atol=0)
        flat &= any("no exponential envelope" in note for note in s.notes)
    derived_k2_zero = V.full_residual(fam.case2_bundle(elliptic[1], dom), grid, rel_tol=1e-6).passed
    ok = n_printed == 8 and n_derived == 8 and flat and derived_k2_zero
    assert verdict(7, ok, "printed branches passing %d/8 (best max_rel %.1e); derived %d/8 (worst %.1e); "
                   "k2=0 envelope-free %s"
                   % (n_printed, min(_worst(r) for r in res["printed"]), n_derived,
                      max(_worst(r) for r in res["derived"]), "yes" if flat and derived_k2_zero else "NO"))


def test_8_figure_reproduction(verdict, tmp_path):
    out, summ = tmp_path / "fig.csv", tmp_path / "fig.json"
    code = cli.main(["export", "--family", "case1", "--lambda", "0.1", "--alpha", "1", "--k3", "0.5",
                     "--n", "0.1", "--grid", "-20:20:401,-10:15:126", "--out", str(out),
                     "--summary", str(summ)])
    import json
    info = json.loads(summ.read_text())
    front = info["fronts_per_row"] == [1]
    period = info["period_rel_error"] < 0.02
    fig_summary = tmp_path / "fig1.json"
    fig_code = cli.main(["export", "--fig1", "--grid", "-20:20:41,-10:15:26",
                         "--out", str(tmp_path / "fig1.csv"), "--summary", str(fig_summary)])
    fig = json.loads(fig_summary.read_text())
    recorded = (fig_code == cli.EXIT_FAIL and fig["reproducible"] is False
                and any("under-specified" in note for note in fig["notes"]))
    ok = code == 0 and front and period and recorded
    assert verdict(8, ok, "one front per row %s; period %.5f vs %.5f (%.2f%%); figure amplitude recorded "
                   "as not reproducible %s"
                   % (front, info["measured_period_x"], info["predicted_period_x"],
                      100 * info["period_rel_error"], recorded))


def test_9_determinism(verdict, tmp_path):
    commands = [
        ["verify", "--family", "seed", "--alpha", "1", "--grid", "-5:5:21,-2:2:11"],
        ["transform", "--family", "seed", "--eps", "0.9", "--grid", "-5:5:21,-2:2:11", "--dump", "{d}"],
        ["reduce", "--case", "1", "--lambda", "0.1", "--alpha", "1", "--k3", "0.5", "--n", "0.1",
         "--grid", "-3:3:11,-1:1:5"],
        ["reduce", "--case", "2", "--lambda", "0.1", "--alpha", "1", "--m", "0.5", "--branch", "3",
         "--free", "2", "--grid", "-2:2:11,-1:1:5"],
        ["export", "--family", "case1", "--lambda", "0.1", "--alpha", "1", "--k3", "0.5", "--n", "0.1",
         "--grid", "-5:5:21,-2:2:11", "--summary", "{d}"],
        ["specfun", "--which", "sn", "--k", "0,0.5,1", "--u-range", "-2:2:9"],
    ]
    same = 0
    for i, cmd in enumerate(commands):
        outputs = []
        for run in range(2):
            out = tmp_path / ("c%d_r%d.out" % (i, run))
            extra = tmp_path / ("c%d_r%d.extra" % (i, run))
            argv = [a.replace("{d}", str(extra)) for a in cmd] + ["--out", str(out)]
            cli.main(argv)
            blob = out.read_bytes() + (extra.read_bytes() if extra.exists() else b"")
            outputs.append(blob)
        same += outputs[0] == outputs[1] and len(outputs[0]) > 0
    assert verdict(9, same == len(commands), "%d/%d commands byte-identical on rerun" % (same, len(commands)))
