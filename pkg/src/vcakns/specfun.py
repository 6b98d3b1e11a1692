"""Jacobi elliptic functions and the complete elliptic integral K.

The second argument is the modulus ``k`` by default, so ``sn(u, 1) = tanh u``.
Pass ``convention="parameter"`` to supply ``m = k**2`` instead.
"""
from __future__ import annotations

import numpy as np

from . import jet as _jet

MAX_AGM_ITER = 32
_EPS = np.finfo(float).eps


class ModulusOutOfRange(ValueError):
    pass


class AGMNonconvergence(RuntimeError):
    """Internal error: the AGM did not settle within the iteration cap."""


def _modulus(k, convention: str = "modulus") -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if convention == "parameter":
        if np.any((k < 0) | (k > 1)) or np.any(~np.isfinite(k)):
            raise ModulusOutOfRange("parameter m must lie in [0, 1]")
        return np.sqrt(k)
    if convention != "modulus":
        raise ValueError("convention must be 'modulus' or 'parameter'")
    if np.any((k < 0) | (k > 1)) or np.any(~np.isfinite(k)):
        raise ModulusOutOfRange("modulus k must lie in [0, 1]")
    return k


def agm(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    for _ in range(MAX_AGM_ITER):
        if np.all(np.abs(a - b) <= 2 * _EPS * np.abs(a)):
            return (a + b) / 2
        a, b = (a + b) / 2, np.sqrt(a * b)
    raise AGMNonconvergence("AGM did not converge")


def ellip_K(k, convention: str = "modulus") -> np.ndarray | float:
    """Complete elliptic integral of the first kind, K = pi / (2 agm(1, k'))."""
    kk = _modulus(k, convention)
    if np.any(kk >= 1):
        raise ModulusOutOfRange("K diverges at k = 1")
    out = np.pi / (2 * agm(1.0, np.sqrt((1 - kk) * (1 + kk))))
    return float(out) if out.ndim == 0 else out


def _sn_cn_dn(u: np.ndarray, k: np.ndarray):
    """Descending AGM (Landen) recursion for 0 <= k < 1, elementwise."""
    kp = np.sqrt((1 - k) * (1 + k))
    a = [np.ones_like(k)]
    c = [k]
    b = kp
    for _ in range(MAX_AGM_ITER):
        if np.all(np.abs(c[-1]) <= _EPS * a[-1]):
            break
        an, bn, cn = a[-1], b, c[-1]
        a.append((an + bn) / 2)
        c.append((an - bn) / 2)
        b = np.sqrt(an * bn)
    else:
        raise AGMNonconvergence("Landen recursion did not converge")
    n = len(a) - 1
    phi = (2.0**n) * a[-1] * u
    for j in range(n, 0, -1):
        phi = (phi + np.arcsin(np.clip(c[j] / a[j] * np.sin(phi), -1.0, 1.0))) / 2
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt((1 - k * sn) * (1 + k * sn))
    return sn, cn, dn


def jacobi_sn_cn_dn(u, k, convention: str = "modulus"):
    """Return (sn, cn, dn) at real ``u``; arrays broadcast together."""
    kk = _modulus(k, convention)
    u = np.asarray(u, dtype=float)
    u, kk = np.broadcast_arrays(u, kk)
    sn = np.empty(u.shape)
    cn = np.empty(u.shape)
    dn = np.empty(u.shape)
    one = kk == 1
    if np.any(one):
        uu = u[one]
        sn[one] = np.tanh(uu)
        with np.errstate(over="ignore"):
            sech = 1.0 / np.cosh(uu)
        cn[one] = sech
        dn[one] = sech
    rest = ~one
    if np.any(rest):
        kr = kk[rest]
        ur = u[rest]
        # reduce into one real period so the phase recursion starts small
        period = 4 * ellip_K(kr)
        ur = ur - period * np.round(ur / period)
        s, c, d = _sn_cn_dn(ur, kr)
        sn[rest], cn[rest], dn[rest] = s, c, d
    if sn.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def sn(u, k, convention: str = "modulus"):
    return jacobi_sn_cn_dn(u, k, convention)[0]


def cn(u, k, convention: str = "modulus"):
    return jacobi_sn_cn_dn(u, k, convention)[1]


def dn(u, k, convention: str = "modulus"):
    return jacobi_sn_cn_dn(u, k, convention)[2]


def jacobi_coeffs(u0, k, order: int, convention: str = "modulus"):
    """Taylor coefficients of sn, cn, dn about ``u0``.

    Uses sn' = cn dn, cn' = -sn dn, dn' = -k^2 sn cn.  Each returned array has
    shape ``(order + 1,) + shape(u0)``.
    """
    kk = _modulus(k, convention)
    s0, c0, d0 = jacobi_sn_cn_dn(u0, kk)
    s, c, d = [np.asarray(s0)], [np.asarray(c0)], [np.asarray(d0)]
    k2 = kk * kk
    for j in range(order):
        cd = sum(c[i] * d[j - i] for i in range(j + 1))
        sd = sum(s[i] * d[j - i] for i in range(j + 1))
        sc = sum(s[i] * c[j - i] for i in range(j + 1))
        s.append(cd / (j + 1))
        c.append(-sd / (j + 1))
        d.append(-k2 * sc / (j + 1))
    return np.stack(s), np.stack(c), np.stack(d)


def jacobi_jets(u, k, convention: str = "modulus"):
    """Lift (sn, cn, dn) through a jet or series argument."""
    degree = sum(n - 1 for n in u.box)
    if np.iscomplexobj(u.value) and np.any(np.imag(u.value) != 0):
        raise TypeError("complex-argument elliptic functions are not supported")
    s, c, d = jacobi_coeffs(np.real(u.value), k, degree, convention)
    return _jet.compose(u, s), _jet.compose(u, c), _jet.compose(u, d)


def jacobi_sn_jet(u, k, convention: str = "modulus"):
    return jacobi_jets(u, k, convention)[0]

