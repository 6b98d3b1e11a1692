"""Truncated Taylor arithmetic in (x, t) and in a single variable.

A :class:`Jet2D` stores the normalized Taylor coefficients
``d^i/dx^i d^j/dt^j F / (i! j!)`` of a field at a base point, for
``0 <= i <= 4`` and ``0 <= j <= 2``.  Coefficient arrays carry trailing batch
axes, so one jet can describe a whole grid of base points at once; every
operation acts pointwise along the batch axes.

:class:`Series` is the univariate counterpart (order 7 by default).  It is used
for functions of a similarity variable, which are lifted to jets with
:func:`compose`.

Derivative jets (``dx``, ``dt``) have a smaller order box.  Binary operations
truncate to the common box, so a coefficient that was never known cannot leak
into a result.
"""
from __future__ import annotations

import math
from itertools import product
from typing import Callable, Union

import numpy as np

X_ORDER = 4
T_ORDER = 2
SERIES_ORDER = 7

ArrayLike = Union[float, complex, np.ndarray]


class DivisionByZeroJet(ZeroDivisionError):
    pass


class BranchCutError(ValueError):
    pass


class BasePointMismatch(ValueError):
    pass


_DIV_THRESHOLD = np.finfo(float).tiny


# ---------------------------------------------------------------------------
# array kernels; the first ``nbox`` axes are Taylor axes, the rest batch axes


def _common(a: np.ndarray, b: np.ndarray, nbox: int):
    box = tuple(min(p, q) for p, q in zip(a.shape[:nbox], b.shape[:nbox]))
    sl = tuple(slice(0, n) for n in box)
    return a[sl], b[sl], box


def _batch_shape(a: np.ndarray, b: np.ndarray, nbox: int):
    return np.broadcast_shapes(a.shape[nbox:], b.shape[nbox:])


def _mul(a: np.ndarray, b: np.ndarray, nbox: int) -> np.ndarray:
    a, b, box = _common(a, b, nbox)
    dtype = np.result_type(a, b)
    out = np.zeros(box + _batch_shape(a, b, nbox), dtype=dtype)
    for idx in np.ndindex(*box):
        head = tuple(slice(i, None) for i in idx)
        tail = tuple(slice(0, n - i) for i, n in zip(idx, box))
        out[head] += a[idx] * b[tail]
    return out


def _quotient(num, den):
    """num / den, with real-valued denominators divided component-wise.

    Complex division by a complex number with zero imaginary part does not
    round like the real division it stands for, so those entries are routed
    through real arithmetic.
    """
    num = np.asarray(num)
    den = np.asarray(den)
    if not np.iscomplexobj(num) and not np.iscomplexobj(den):
        return num / den
    if not np.iscomplexobj(den):
        return num.real / den + 1j * (num.imag / den)
    out = np.array(num / den, dtype=complex)
    real = np.broadcast_to(den.imag == 0, out.shape)
    if np.any(real):
        d = np.broadcast_to(den.real, out.shape)
        n = np.broadcast_to(num, out.shape).astype(complex)
        out[real] = n.real[real] / d[real] + 1j * (n.imag[real] / d[real])
    return out


def _lex_pairs(box: tuple[int, ...]):
    """For each multi-index, the nonzero lower indices that feed it in a product."""
    table = []
    for idx in np.ndindex(*box):
        lower = [p for p in product(*(range(i + 1) for i in idx)) if any(p)]
        table.append((idx, lower))
    return table


_PAIR_CACHE: dict[tuple[int, ...], list] = {}


def _div(a: np.ndarray, b: np.ndarray, nbox: int) -> np.ndarray:
    a, b, box = _common(a, b, nbox)
    b0 = b[(0,) * nbox]
    if np.any(np.abs(b0) < _DIV_THRESHOLD):
        raise DivisionByZeroJet("divisor jet has a vanishing value")
    dtype = np.result_type(a, b)
    out = np.zeros(box + _batch_shape(a, b, nbox), dtype=dtype)
    pairs = _PAIR_CACHE.get(box)
    if pairs is None:
        pairs = _PAIR_CACHE.setdefault(box, _lex_pairs(box))
    for idx, lower in pairs:
        acc = np.array(a[idx], dtype=dtype, copy=True)
        for p in lower:
            acc = acc - b[p] * out[tuple(i - q for i, q in zip(idx, p))]
        out[idx] = _quotient(acc, b0)
    return out


def _compose(a: np.ndarray, g: np.ndarray, nbox: int) -> np.ndarray:
    """Evaluate the univariate series ``g`` (centred at a's value) on jet ``a``."""
    box = a.shape[:nbox]
    degree = sum(n - 1 for n in box)
    h = np.array(a, copy=True)
    h[(0,) * nbox] = 0
    top = min(degree, g.shape[0] - 1)
    batch = np.broadcast_shapes(a.shape[nbox:], g.shape[1:])
    out = np.zeros(box + batch, dtype=np.result_type(a, g))
    out[(0,) * nbox] = g[top]
    for k in range(top - 1, -1, -1):
        out = _mul(out, h, nbox)
        out[(0,) * nbox] = out[(0,) * nbox] + g[k]
    return out


# ---------------------------------------------------------------------------
# univariate Taylor coefficients of elementary functions at a point


def _pointwise(real_fn: Callable, complex_fn: Callable, v: np.ndarray) -> np.ndarray:
    """Apply a function, using the real-valued routine wherever the imaginary part is 0."""
    v = np.asarray(v)
    if not np.iscomplexobj(v):
        return real_fn(v)
    out = np.asarray(complex_fn(v), dtype=complex)
    real = v.imag == 0
    if np.any(real):
        out = np.array(out, copy=True)
        out[real] = real_fn(v.real[real])
    return out


def _cauchy(a: np.ndarray, b: np.ndarray, k: int):
    return sum(a[j] * b[k - j] for j in range(k + 1))


def exp_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    e = _pointwise(np.exp, np.exp, v)
    return np.stack([_quotient(e, math.factorial(k)) for k in range(n + 1)])


def sin_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    s = _pointwise(np.sin, np.sin, v)
    c = _pointwise(np.cos, np.cos, v)
    cycle = (s, c, -s, -c)
    return np.stack([_quotient(cycle[k % 4], math.factorial(k)) for k in range(n + 1)])


def cos_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    s = _pointwise(np.sin, np.sin, v)
    c = _pointwise(np.cos, np.cos, v)
    cycle = (c, -s, -c, s)
    return np.stack([_quotient(cycle[k % 4], math.factorial(k)) for k in range(n + 1)])


def _sech(v):
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(v)


def tanh_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    t0 = _pointwise(np.tanh, np.tanh, v)
    s0 = _pointwise(_sech, _sech, v)
    t = [t0]
    if n >= 1:
        # first derivative from sech^2, not 1 - tanh^2, to keep far tails accurate
        t.append(s0 * s0)
    for k in range(1, n):
        t.append(_quotient(-_cauchy(t, t, k), k + 1))
    return np.stack(t[: n + 1])


def sech_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    t = tanh_coeffs(v, n)
    s = [_pointwise(_sech, _sech, v)]
    for k in range(n):
        s.append(_quotient(-_cauchy(s, t, k), k + 1))
    return np.stack(s)


def _check_cut(v: np.ndarray) -> None:
    v = np.asarray(v)
    if np.iscomplexobj(v):
        bad = (v.imag == 0) & (v.real <= 0)
    else:
        bad = v <= 0
    if np.any(bad):
        raise BranchCutError("sqrt/log argument at zero or on the negative real axis")


def sqrt_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    _check_cut(v)
    r0 = _pointwise(np.sqrt, np.sqrt, v)
    r = [r0]
    if n >= 1:
        r.append(_quotient(0.5, r0))
    for k in range(2, n + 1):
        r.append(_quotient(-sum(r[j] * r[k - j] for j in range(1, k)), 2 * r0))
    return np.stack(r)


def log_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    _check_cut(v)
    v = np.asarray(v)
    out = [_pointwise(np.log, np.log, v)]
    for k in range(1, n + 1):
        out.append(_quotient((-1) ** (k + 1), k * _ipow(v, k)))
    return np.stack(out)


def reciprocal_coeffs(v: ArrayLike, n: int) -> np.ndarray:
    v = np.asarray(v)
    if np.any(np.abs(v) < _DIV_THRESHOLD):
        raise DivisionByZeroJet("reciprocal of a vanishing value")
    return np.stack([_quotient((-1) ** k, _ipow(v, k + 1)) for k in range(n + 1)])


def _ipow(v: np.ndarray, k: int) -> np.ndarray:
    out = v
    for _ in range(k - 1):
        out = out * v
    return out


_ELEMENTARY = {
    "exp": exp_coeffs,
    "sin": sin_coeffs,
    "cos": cos_coeffs,
    "tanh": tanh_coeffs,
    "sech": sech_coeffs,
    "sqrt": sqrt_coeffs,
    "log": log_coeffs,
}


# ---------------------------------------------------------------------------
# jet classes


class _Taylor:
    _nbox = 0

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.dtype.kind not in "fc":
            coeffs = coeffs.astype(float)
        if coeffs.flags.writeable:
            coeffs = np.array(coeffs, copy=True)
            coeffs.flags.writeable = False
        self.coeffs = coeffs

    # subclass hooks
    def _like(self, coeffs):
        raise NotImplementedError

    def _check_base(self, other) -> None:
        raise NotImplementedError

    @property
    def box(self) -> tuple[int, ...]:
        return self.coeffs.shape[: self._nbox]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[self._nbox:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[(0,) * self._nbox]

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, _Taylor):
            self._check_base(other)
            return other.coeffs
        other = np.asarray(other)
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        out = np.zeros(self.box + shape, dtype=np.result_type(other, float))
        out[(0,) * self._nbox] = other
        return out

    def __add__(self, other):
        b = self._lift(other)
        a, b, _ = _common(self.coeffs, b, self._nbox)
        return self._like(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        b = self._lift(other)
        a, b, _ = _common(self.coeffs, b, self._nbox)
        return self._like(a - b)

    def __rsub__(self, other):
        b = self._lift(other)
        a, b, _ = _common(self.coeffs, b, self._nbox)
        return self._like(b - a)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, _Taylor):
            return self._like(self.coeffs * _batch_scalar(other, self._nbox))
        self._check_base(other)
        return self._like(_mul(self.coeffs, other.coeffs, self._nbox))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, _Taylor):
            other = np.asarray(other)
            if np.any(np.abs(other) < _DIV_THRESHOLD):
                raise DivisionByZeroJet("division by a vanishing constant")
            return self._like(_quotient(self.coeffs, _batch_scalar(other, self._nbox)))
        self._check_base(other)
        return self._like(_div(self.coeffs, other.coeffs, self._nbox))

    def __rtruediv__(self, other):
        return self._like(_div(self._lift(other), self.coeffs, self._nbox))

    def __pow__(self, n: int):
        return pow_int(self, n)

    @property
    def real(self):
        return self._like(np.real(self.coeffs))

    @property
    def imag(self):
        return self._like(np.imag(self.coeffs))

    def conj(self):
        return self._like(np.conj(self.coeffs))


def _batch_scalar(c, nbox: int) -> np.ndarray:
    c = np.asarray(c)
    return c.reshape((1,) * nbox + c.shape)


class Jet2D(_Taylor):
    """Truncated Taylor expansion in (x, t) about ``(x, t)`` base points."""

    _nbox = 2
    __slots__ = ("x", "t")

    def __init__(self, coeffs, x, t):
        super().__init__(coeffs)
        self.x = np.asarray(x, dtype=float)
        self.t = np.asarray(t, dtype=float)

    @classmethod
    def constant(cls, value, x, t, box=(X_ORDER + 1, T_ORDER + 1)) -> "Jet2D":
        value = np.asarray(value)
        shape = np.broadcast_shapes(value.shape, np.shape(x), np.shape(t))
        out = np.zeros(box + shape, dtype=np.result_type(value, float))
        out[0, 0] = value
        return cls(out, x, t)

    def _like(self, coeffs):
        return Jet2D(coeffs, self.x, self.t)

    def _check_base(self, other) -> None:
        if not isinstance(other, Jet2D):
            raise TypeError("cannot combine Jet2D with %s" % type(other).__name__)
        if other.x is self.x and other.t is self.t:
            return
        if not (np.array_equal(other.x, self.x) and np.array_equal(other.t, self.t)):
            raise BasePointMismatch("jets expanded about different base points")

    @property
    def base_point(self):
        return self.x, self.t

    def coeff(self, i: int, j: int) -> np.ndarray:
        return self.coeffs[i, j]

    def deriv(self, i: int, j: int) -> np.ndarray:
        """The mixed partial d^i/dx^i d^j/dt^j at the base point."""
        return self.coeffs[i, j] * (math.factorial(i) * math.factorial(j))

    def dx(self) -> "Jet2D":
        nx = self.coeffs.shape[0]
        if nx < 2:
            raise ValueError("no x-derivative information left in this jet")
        w = np.arange(1, nx, dtype=float).reshape((nx - 1, 1) + (1,) * len(self.batch_shape))
        return self._like(self.coeffs[1:] * w)

    def dt(self) -> "Jet2D":
        nt = self.coeffs.shape[1]
        if nt < 2:
            raise ValueError("no t-derivative information left in this jet")
        w = np.arange(1, nt, dtype=float).reshape((1, nt - 1) + (1,) * len(self.batch_shape))
        return self._like(self.coeffs[:, 1:] * w)

    def __repr__(self) -> str:
        return "Jet2D(box=%s, batch=%s)" % (self.box, self.batch_shape)


class Series(_Taylor):
    """Truncated univariate Taylor series about ``at``."""

    _nbox = 1
    __slots__ = ("at",)

    def __init__(self, coeffs, at):
        super().__init__(coeffs)
        self.at = np.asarray(at, dtype=float)

    @classmethod
    def variable(cls, at, order: int = SERIES_ORDER) -> "Series":
        at = np.asarray(at, dtype=float)
        out = np.zeros((order + 1,) + at.shape)
        out[0] = at
        if order >= 1:
            out[1] = 1.0
        return cls(out, at)

    @classmethod
    def constant(cls, value, at, order: int = SERIES_ORDER) -> "Series":
        value = np.asarray(value)
        shape = np.broadcast_shapes(value.shape, np.shape(at))
        out = np.zeros((order + 1,) + shape, dtype=np.result_type(value, float))
        out[0] = value
        return cls(out, at)

    def _like(self, coeffs):
        return Series(coeffs, self.at)

    def _check_base(self, other) -> None:
        if not isinstance(other, Series):
            raise TypeError("cannot combine Series with %s" % type(other).__name__)
        if other.at is self.at or np.array_equal(other.at, self.at):
            return
        raise BasePointMismatch("series expanded about different points")

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    def deriv(self, k: int = 1) -> np.ndarray:
        return self.coeffs[k] * math.factorial(k)

    def differentiate(self) -> "Series":
        n = self.coeffs.shape[0]
        w = np.arange(1, n, dtype=float).reshape((n - 1,) + (1,) * len(self.batch_shape))
        return self._like(self.coeffs[1:] * w)

    def integrate(self, value_at_base) -> "Series":
        """Antiderivative whose value at ``at`` is ``value_at_base``; order is kept."""
        n = self.coeffs.shape[0]
        w = np.arange(1, n, dtype=float).reshape((n - 1,) + (1,) * len(self.batch_shape))
        value_at_base = np.asarray(value_at_base)
        shape = np.broadcast_shapes(self.batch_shape, value_at_base.shape)
        out = np.zeros((n,) + shape, dtype=np.result_type(self.coeffs, value_at_base))
        out[0] = value_at_base
        out[1:] = _quotient(self.coeffs[:-1], w)
        return self._like(out)

    def truncate(self, order: int) -> "Series":
        return self._like(self.coeffs[: order + 1])

    def __repr__(self) -> str:
        return "Series(order=%d, batch=%s)" % (self.order, self.batch_shape)


# ---------------------------------------------------------------------------
# public operations


def jet_var(axis: str, value, other=0.0) -> Jet2D:
    """Jet of the coordinate function ``axis`` at ``value``.

    ``other`` is the remaining coordinate of the base point.
    """
    value = np.asarray(value, dtype=float)
    other = np.asarray(other, dtype=float)
    shape = np.broadcast_shapes(value.shape, other.shape)
    out = np.zeros((X_ORDER + 1, T_ORDER + 1) + shape)
    out[0, 0] = value
    if axis == "x":
        out[1, 0] = 1.0
        x, t = value, other
    elif axis == "t":
        out[0, 1] = 1.0
        x, t = other, value
    else:
        raise ValueError("axis must be 'x' or 't'")
    return Jet2D(out, np.broadcast_to(x, shape), np.broadcast_to(t, shape))


def coordinates(x, t) -> tuple[Jet2D, Jet2D]:
    """Coordinate jets of x and t sharing one base-point array pair."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    shape = x.shape
    jx = np.zeros((X_ORDER + 1, T_ORDER + 1) + shape)
    jx[0, 0] = x
    jx[1, 0] = 1.0
    jt = np.zeros_like(jx)
    jt[0, 0] = t
    jt[0, 1] = 1.0
    return Jet2D(jx, x, t), Jet2D(jt, x, t)


def jet_arith(a: Jet2D, b: Jet2D, op: str) -> Jet2D:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown operation %r" % op)


def compose(a: _Taylor, coeffs: np.ndarray) -> _Taylor:
    """Substitute ``a`` into a univariate series centred at ``a.value``."""
    return a._like(_compose(a.coeffs, np.asarray(coeffs), a._nbox))


def _elem(name: str):
    gen = _ELEMENTARY[name]

    def fn(a: _Taylor) -> _Taylor:
        degree = sum(n - 1 for n in a.box)
        return compose(a, gen(a.value, degree))

    fn.__name__ = name
    fn.__doc__ = "Taylor-lifted %s." % name
    return fn


exp = _elem("exp")
sin = _elem("sin")
cos = _elem("cos")
tanh = _elem("tanh")
sech = _elem("sech")
sqrt = _elem("sqrt")
log = _elem("log")


def reciprocal(a: _Taylor) -> _Taylor:
    degree = sum(n - 1 for n in a.box)
    return compose(a, reciprocal_coeffs(a.value, degree))


def pow_int(a: _Taylor, n: int) -> _Taylor:
    if int(n) != n:
        raise TypeError("pow_int needs an integer exponent")
    n = int(n)
    if n < 0:
        return 1.0 / pow_int(a, -n)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    if result is None:
        return a._like(a._lift(np.ones(a.batch_shape)))
    return result


def jet_elem(a: _Taylor, fn: str, n: int | None = None) -> _Taylor:
    if fn == "pow_int":
        if n is None:
            raise ValueError("pow_int needs an exponent")
        return pow_int(a, n)
    if fn not in _ELEMENTARY:
        raise ValueError("unknown elementary function %r" % fn)
    return _elem(fn)(a)
