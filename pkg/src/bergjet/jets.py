"""Truncated multivariate power series ("jets") and jet matrices.

A :class:`Jet` in ``m`` variables with truncation degree ``D`` stores the
coefficients of all monomials of total degree ``<= D``.  Two coefficient
fields are supported and fixed per jet:

* exact mode: Gaussian rationals, stored as integer real and imaginary
  numerators over one common positive denominator;
* float mode: complex doubles, stored as separate real and imaginary tables.

Every operation records the degree up to which its result is valid: products
take the minimum of the operand degrees, differentiation loses one degree,
composition takes the minimum over the whole chain.

Jets are immutable after construction.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

import numpy as np

from . import _backend
from ._fields import QQi
from ._keys import (
    MAX_DEGREE,
    MAX_VARS,
    UNIT,
    VAR_BITS,
    VAR_MASK,
    degree_of,
    exponent,
    limit,
    pack,
    unpack,
)
from .errors import (
    CompositionError,
    DegreeBudgetError,
    SingularDivisionError,
)

__all__ = [
    "Jet",
    "JetMatrix",
    "compose",
    "det",
    "differentiate",
    "invert_map",
    "invert_unit",
    "jet_exp",
    "jet_log",
    "matrix_inverse",
    "variables",
]


def _split_exact(value):
    """Gaussian rational -> (re_num, im_num, den) with a shared denominator."""
    q = QQi.coerce(value)
    d = lcm(q.re.denominator, q.im.denominator)
    return (
        q.re.numerator * (d // q.re.denominator),
        q.im.numerator * (d // q.im.denominator),
        d,
    )


def _combine(a, sa, b, sb, lim):
    out = {k: v * sa for k, v in a.items() if k < lim}
    get = out.get
    for k, v in b.items():
        if k < lim:
            out[k] = get(k, 0) + v * sb
    return {k: v for k, v in out.items() if v}


def _scaled(a, s):
    return {k: v * s for k, v in a.items()} if s != 1 else dict(a)


def _sub_tables(a, b):
    return _combine(a, 1, b, -1, 1 << 62)


def _add_tables(a, b):
    return _combine(a, 1, b, 1, 1 << 62)


class Jet:
    """Truncated power series in ``nvars`` variables, valid to total degree ``degree``.

    Parameters
    ----------
    nvars : int
        Number of formal variables (1 to 9).
    degree : int
        Truncation degree (0 to 63).  Terms above it are discarded.
    terms : mapping, optional
        ``{exponent_tuple: coefficient}``.
    exact : bool
        Gaussian-rational coefficients when true, complex doubles otherwise.
    """

    __slots__ = ("_den", "_im", "_re", "degree", "exact", "nvars")

    def __init__(self, nvars, degree, terms=None, *, exact=True):
        _check_shape(nvars, degree)
        lim = limit(degree)
        re, im = {}, {}
        den = 1
        if terms:
            packed = []
            for exps, c in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != nvars or min(exps) < 0:
                    raise ValueError(f"bad multi-index {exps} for {nvars} variables")
                key = pack(exps)
                if key < lim:
                    packed.append((key, c))
            if exact:
                parts = [(k, _split_exact(c)) for k, c in packed]
                den = lcm(1, *(p[2] for _, p in parts))
                for k, (a, b, d) in parts:
                    s = den // d
                    if a:
                        re[k] = re.get(k, 0) + a * s
                    if b:
                        im[k] = im.get(k, 0) + b * s
            else:
                for k, c in packed:
                    c = complex(c)
                    if c.real:
                        re[k] = re.get(k, 0.0) + c.real
                    if c.imag:
                        im[k] = im.get(k, 0.0) + c.imag
        self._init(nvars, degree, exact, re, im, den)

    def _init(self, nvars, degree, exact, re, im, den):
        self.nvars = nvars
        self.degree = degree
        self.exact = exact
        re = {k: v for k, v in re.items() if v}
        im = {k: v for k, v in im.items() if v}
        if exact:
            if den < 0:
                den = -den
                re = {k: -v for k, v in re.items()}
                im = {k: -v for k, v in im.items()}
            if not re and not im:
                den = 1
            else:
                g = gcd(den, *re.values(), *im.values())
                if g > 1:
                    den //= g
                    re = {k: v // g for k, v in re.items()}
                    im = {k: v // g for k, v in im.items()}
        self._re = re
        self._im = im
        self._den = den

    @classmethod
    def _make(cls, nvars, degree, exact, re, im, den=1):
        self = object.__new__(cls)
        self._init(nvars, degree, exact, re, im, den)
        return self

    # -- construction helpers -------------------------------------------

    @classmethod
    def constant(cls, value, nvars, degree, *, exact=True):
        return cls(nvars, degree, {(0,) * nvars: value}, exact=exact)

    @classmethod
    def zero(cls, nvars, degree, *, exact=True):
        return cls._make(nvars, degree, exact, {}, {}, 1)

    @classmethod
    def one(cls, nvars, degree, *, exact=True):
        return cls.constant(1, nvars, degree, exact=exact)

    @classmethod
    def variable(cls, index, nvars, degree, *, exact=True):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, degree, {tuple(exps): 1}, exact=exact)

    def _like(self, re, im, den=1, degree=None, nvars=None):
        return Jet._make(
            self.nvars if nvars is None else nvars,
            self.degree if degree is None else degree,
            self.exact,
            re,
            im,
            den,
        )

    # -- access -----------------------------------------------------------

    def _value(self, key):
        a = self._re.get(key, 0)
        b = self._im.get(key, 0)
        if self.exact:
            return QQi(Fraction(a, self._den), Fraction(b, self._den))
        return complex(a, b)

    def _keys(self):
        return sorted(set(self._re) | set(self._im))

    def __getitem__(self, exps):
        return self._value(pack(exps))

    coefficient = __getitem__

    def items(self):
        """``(exponents, coefficient)`` pairs in degree-then-index order."""
        for k in self._keys():
            yield unpack(k, self.nvars), self._value(k)

    def __len__(self):
        return len(set(self._re) | set(self._im))

    @property
    def constant_term(self):
        return self._value(0)

    def is_zero(self):
        return not self._re and not self._im

    def max_abs(self):
        """Largest coefficient modulus, as a float."""
        best = 0.0
        for k in self._keys():
            best = max(best, abs(complex(self._value(k))))
        return best

    def order(self):
        """Lowest total degree present (``degree + 1`` for the zero jet)."""
        keys = self._keys()
        return degree_of(keys[0]) if keys else self.degree + 1

    def is_real(self):
        return not self._im

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Jet):
            if (self.nvars, self.exact) != (other.nvars, other.exact):
                return False
            d = min(self.degree, other.degree)
            a, b = self.truncate(d), other.truncate(d)
            return a._re == b._re and a._im == b._im and a._den == b._den
        try:
            return self == self._coerce(other)
        except TypeError:
            return NotImplemented

    __hash__ = None

    def allclose(self, other, tol=1e-12):
        """Coefficientwise ``|a - b| <= tol * max(1, |a|, |b|)``."""
        other = self._coerce(other)
        d = self - other
        for k in d._keys():
            diff = abs(complex(d._value(k)))
            scale = max(1.0, abs(complex(self._value(k))), abs(complex(other._value(k))))
            if diff > tol * scale:
                return False
        return True

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            if other.exact != self.exact:
                raise TypeError("cannot mix exact and float jets")
            return other
        if isinstance(other, JetMatrix):
            raise TypeError("jet/matrix mixing needs an explicit broadcast")
        return Jet.constant(other, self.nvars, self.degree, exact=self.exact)

    def __add__(self, other):
        return self._lincomb(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._lincomb(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._like(
            {k: -v for k, v in self._re.items()},
            {k: -v for k, v in self._im.items()},
            self._den,
        )

    def _lincomb(self, other, sign):
        if isinstance(other, JetMatrix):
            return NotImplemented
        o = self._coerce(other)
        degree = min(self.degree, o.degree)
        lim = limit(degree)
        if self.exact:
            den = lcm(self._den, o._den)
            sa, sb = den // self._den, sign * (den // o._den)
        else:
            den, sa, sb = 1, 1.0, float(sign)
        return self._like(
            _combine(self._re, sa, o._re, sb, lim),
            _combine(self._im, sa, o._im, sb, lim),
            den,
            degree,
        )

    def __mul__(self, other):
        if isinstance(other, JetMatrix):
            return other.__rmul__(self)
        if not isinstance(other, Jet):
            return self._scale(other)
        o = self._coerce(other)
        degree = min(self.degree, o.degree)
        lim = limit(degree)
        conv = _backend.convolve if self.exact else _backend.convolve_float
        ar, ai, br, bi = self._re, self._im, o._re, o._im
        re = conv(ar, br, lim)
        if ai and bi:
            re = _sub_tables(re, conv(ai, bi, lim))
        im = {}
        if bi:
            im = conv(ar, bi, lim)
        if ai:
            im = _add_tables(im, conv(ai, br, lim))
        return self._like(re, im, self._den * o._den if self.exact else 1, degree)

    def __rmul__(self, other):
        return self.__mul__(other)

    def _scale(self, value):
        if self.exact:
            p, q, r = _split_exact(value)
            re = _combine(self._re, p, self._im, -q, 1 << 62) if q else _scaled(self._re, p)
            im = _combine(self._im, p, self._re, q, 1 << 62) if q else _scaled(self._im, p)
            return self._like(re, im, self._den * r)
        c = complex(value)
        if c.imag == 0:
            return self._like(_scaled(self._re, c.real), _scaled(self._im, c.real))
        return self._like(
            _combine(self._re, c.real, self._im, -c.imag, 1 << 62),
            _combine(self._im, c.real, self._re, c.imag, 1 << 62),
        )

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * invert_unit(other)
        if self.exact:
            return self._scale(QQi(1) / QQi.coerce(other))
        return self._scale(1.0 / complex(other))

    def __rtruediv__(self, other):
        return invert_unit(self) * other

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Jet.one(self.nvars, self.degree, exact=self.exact)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def conj(self):
        """Conjugate every coefficient (variables untouched)."""
        return self._like(dict(self._re), {k: -v for k, v in self._im.items()}, self._den)

    # -- structural operations --------------------------------------------

    def truncate(self, degree):
        if degree > self.degree:
            raise DegreeBudgetError(
                f"cannot raise truncation degree {self.degree} to {degree}",
                required=degree,
            )
        if degree == self.degree:
            return self
        if degree < 0:
            raise DegreeBudgetError("negative truncation degree", required=0)
        lim = limit(degree)
        return self._like(
            {k: v for k, v in self._re.items() if k < lim},
            {k: v for k, v in self._im.items() if k < lim},
            self._den,
            degree,
        )

    def _relabel(self, degree):
        """Same terms, different recorded degree (caller vouches for validity)."""
        j = self.truncate(min(degree, self.degree))
        return self._like(j._re, j._im, j._den, degree)

    def differentiate(self, var):
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable {var} out of range for {self.nvars} variables")
        if self.degree == 0:
            raise DegreeBudgetError("differentiating a degree-0 jet leaves nothing valid", required=1)
        unit = UNIT[var]
        shift = VAR_BITS * var

        def d(table):
            out = {}
            for k, v in table.items():
                e = (k >> shift) & VAR_MASK
                if e:
                    out[k - unit] = v * e
            return out

        return self._like(d(self._re), d(self._im), self._den, self.degree - 1)

    def remap(self, targets, nvars):
        """Linear relabelling of variables.

        ``targets[i]`` is the new index of old variable ``i``; ``None`` sets
        that variable to zero.  Several old variables may share a target
        (restriction to a diagonal such as ``y = x``).
        """
        if len(targets) != self.nvars:
            raise ValueError("targets must list every variable")
        _check_shape(nvars, self.degree)

        def m(table):
            out = {}
            for k, v in table.items():
                nk = 0
                for i, t in enumerate(targets):
                    e = (k >> (VAR_BITS * i)) & VAR_MASK
                    if e:
                        if t is None:
                            break
                        nk += e * UNIT[t]
                else:
                    out[nk] = out.get(nk, 0) + v
            return out

        return self._like(m(self._re), m(self._im), self._den, nvars=nvars)

    def embed(self, positions, nvars):
        """Place this jet's variables at ``positions`` inside ``nvars`` variables."""
        return self.remap(list(positions), nvars)

    def compose(self, args, degree=None):
        return compose(self, args, degree)

    def inverse(self):
        return invert_unit(self)

    def exp(self):
        return jet_exp(self)

    def log(self):
        return jet_log(self)

    def to_float(self):
        if not self.exact:
            return self
        d = self._den
        return Jet._make(
            self.nvars,
            self.degree,
            False,
            {k: v / d for k, v in self._re.items()},
            {k: v / d for k, v in self._im.items()},
        )

    # -- numerics ----------------------------------------------------------

    def _arrays(self):
        keys = self._keys()
        exps = np.array([unpack(k, self.nvars) for k in keys], dtype=np.int64).reshape(-1, self.nvars)
        d = float(self._den) if self.exact else 1.0
        coef = np.array(
            [complex(self._re.get(k, 0) / d, self._im.get(k, 0) / d) for k in keys],
            dtype=complex,
        )
        return exps, coef

    def evaluate(self, points):
        """Evaluate the truncated polynomial at complex point(s).

        ``points`` has shape ``(nvars,)`` or ``(..., nvars)``.
        """
        pts = np.asarray(points, dtype=complex)
        if pts.shape[-1] != self.nvars:
            raise ValueError(f"points must have trailing dimension {self.nvars}")
        exps, coef = self._arrays()
        flat = pts.reshape(-1, self.nvars)
        out = np.zeros(flat.shape[0], dtype=complex)
        if len(coef):
            for start in range(0, flat.shape[0], 2048):
                block = flat[start : start + 2048]
                mono = np.ones((block.shape[0], len(coef)), dtype=complex)
                for v in range(self.nvars):
                    e = exps[:, v]
                    if e.any():
                        mono *= block[:, v : v + 1] ** e
                out[start : start + 2048] = mono @ coef
        return out.reshape(pts.shape[:-1]) if pts.ndim > 1 else out[0]

    __call__ = evaluate

    def __repr__(self):
        shown = []
        for exps, c in list(self.items())[:6]:
            shown.append(f"{c}*{exps}")
        more = " + ..." if len(self) > 6 else ""
        mode = "exact" if self.exact else "float"
        return f"Jet({self.nvars} vars, D={self.degree}, {mode}: {' + '.join(shown) or '0'}{more})"


def _check_shape(nvars, degree):
    if not 1 <= nvars <= MAX_VARS:
        raise ValueError(f"jets support 1..{MAX_VARS} variables, got {nvars}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"truncation degree must lie in 0..{MAX_DEGREE}, got {degree}")


def variables(nvars, degree, *, exact=True):
    return [Jet.variable(i, nvars, degree, exact=exact) for i in range(nvars)]


def differentiate(f, var):
    return f.differentiate(var)


def compose(f, args, degree=None):
    """Substitute ``args[i]`` for variable ``i`` of ``f``.

    Every argument must have zero constant term; the result is valid to
    ``min(f.degree, arg degrees)`` (further capped by ``degree``).
    """
    args = list(args)
    if len(args) != f.nvars:
        raise CompositionError(f"expected {f.nvars} arguments, got {len(args)}")
    if not args:
        raise CompositionError("nothing to compose")
    p = args[0].nvars
    for i, a in enumerate(args):
        if a.nvars != p or a.exact != f.exact:
            raise CompositionError("arguments must share variable count and field")
        if not a.constant_term == 0:
            raise CompositionError(
                f"argument {i} has nonzero constant term {a.constant_term}; recenter first"
            )
    D = min([f.degree] + [a.degree for a in args])
    if degree is not None:
        D = min(D, degree)
    args = [a.truncate(D) for a in args]
    cache = {0: Jet.one(p, D, exact=f.exact)}

    def mono(key):
        got = cache.get(key)
        if got is not None:
            return got
        last = max(i for i in range(f.nvars) if exponent(key, i))
        got = mono(key - UNIT[last]) * args[last]
        cache[key] = got
        return got

    lim = limit(D)
    keys = [k for k in f._keys() if k < lim]
    result = Jet.zero(p, D, exact=f.exact)
    for k in keys:
        result = result + mono(k)._scale(f._value(k))
    return result


def _scalar_inverse(c, exact):
    if exact:
        q = QQi.coerce(c)
        if not q:
            raise SingularDivisionError("constant term is zero")
        return QQi(1) / q
    c = complex(c)
    if c == 0:
        raise SingularDivisionError("constant term is zero")
    return 1.0 / c


def invert_unit(f):
    """Multiplicative inverse of a jet with nonzero constant term (Newton iteration)."""
    c = f.constant_term
    if not c:
        raise SingularDivisionError("cannot invert a jet with zero constant term")
    g = Jet.constant(_scalar_inverse(c, f.exact), f.nvars, 0, exact=f.exact)
    prec = 0
    while prec < f.degree:
        prec = min(2 * prec + 1, f.degree)
        ft = f.truncate(prec)
        g = g._relabel(prec)
        g = g * (2 - ft * g)
    return g


def jet_exp(f):
    """``exp`` of a jet; exact mode needs a zero constant term."""
    c = f.constant_term
    if f.exact:
        if c:
            raise ValueError("exact exp needs a zero constant term")
        scale = 1
    else:
        scale = complex(np.exp(complex(c)))
    u = f - c
    term = Jet.one(f.nvars, f.degree, exact=f.exact)
    total = term
    for j in range(1, f.degree + 1):
        term = (term * u) / j
        if term.is_zero():
            break
        total = total + term
    return total * scale


def jet_log(f):
    """``log`` of a jet; exact mode needs constant term 1."""
    c = f.constant_term
    if not c:
        raise SingularDivisionError("log of a jet with zero constant term")
    if f.exact:
        if c != 1:
            raise ValueError("exact log needs constant term 1")
        base = 0
        v = f - 1
    else:
        base = complex(np.log(complex(c)))
        v = f / c - 1
    total = Jet.constant(base, f.nvars, f.degree, exact=f.exact)
    power = Jet.one(f.nvars, f.degree, exact=f.exact)
    for j in range(1, f.degree + 1):
        power = power * v
        if power.is_zero():
            break
        total = total + power * (Fraction((-1) ** (j + 1), j) if f.exact else (-1) ** (j + 1) / j)
    return total


def _scalar_matrix_inverse(M, exact, name="matrix"):
    n = len(M)
    if exact:
        A = [[QQi.coerce(x) for x in row] + [QQi(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
        for col in range(n):
            piv = next((r for r in range(col, n) if A[r][col]), None)
            if piv is None:
                raise SingularDivisionError(f"{name} is singular")
            A[col], A[piv] = A[piv], A[col]
            inv = QQi(1) / A[col][col]
            A[col] = [x * inv for x in A[col]]
            for r in range(n):
                if r != col and A[r][col]:
                    f = A[r][col]
                    A[r] = [x - f * y for x, y in zip(A[r], A[col])]
        return [row[n:] for row in A]
    arr = np.array([[complex(x) for x in row] for row in M], dtype=complex)
    if np.linalg.cond(arr) > 1e13:
        raise SingularDivisionError(f"{name} is numerically singular")
    return np.linalg.inv(arr).tolist()


def invert_map(F, name="map"):
    """Formal inverse of a map ``F: (w_0..w_{m-1}) -> (F_0..F_{m-1})``.

    All components must vanish at the origin with a nonsingular linear part.
    Solved by the fixed-point iteration ``G = L^{-1}(w - N(G))`` where ``N``
    is the nonlinear part; each sweep fixes one more degree.
    """
    F = list(F)
    m = len(F)
    if any(f.nvars != m for f in F):
        raise CompositionError("invert_map needs m components in m variables")
    exact = F[0].exact
    D = min(f.degree for f in F)
    for i, f in enumerate(F):
        if not f.constant_term == 0:
            raise CompositionError(f"component {i} of {name} does not vanish at the origin")
    L = [[F[i][tuple(int(r == j) for r in range(m))] for j in range(m)] for i in range(m)]
    Linv = _scalar_matrix_inverse(L, exact, f"Jacobian of {name} at 0")
    w = variables(m, D, exact=exact)
    linear = [sum((w[j] * L[i][j] for j in range(m)), Jet.zero(m, D, exact=exact)) for i in range(m)]
    nonlinear = [F[i].truncate(D) - linear[i] for i in range(m)]

    def apply_linv(vec, deg):
        return [
            sum((vec[j] * Linv[i][j] for j in range(m) if Linv[i][j]), Jet.zero(m, deg, exact=exact))
            for i in range(m)
        ]

    G = apply_linv([x.truncate(min(1, D)) for x in w], min(1, D))
    for d in range(2, D + 1):
        Gd = [g._relabel(d) for g in G]
        comp = [
            compose(nl, Gd, degree=d) if not nl.is_zero() else Jet.zero(m, d, exact=exact)
            for nl in nonlinear
        ]
        G = apply_linv([w[j].truncate(d) - comp[j] for j in range(m)], d)
    return [g._relabel(D) for g in G]


class JetMatrix:
    """Small dense matrix of jets sharing variables, field and degree bookkeeping."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise ValueError("empty jet matrix")
        width = len(rows[0])
        first = rows[0][0]
        for r in rows:
            if len(r) != width:
                raise ValueError("ragged jet matrix")
            for e in r:
                if not isinstance(e, Jet) or e.nvars != first.nvars or e.exact != first.exact:
                    raise ValueError("jet matrix entries must be jets in the same variables and field")
        self.entries = tuple(tuple(r) for r in rows)

    @classmethod
    def identity(cls, size, nvars, degree, *, exact=True):
        return cls(
            [
                [Jet.constant(int(i == j), nvars, degree, exact=exact) for j in range(size)]
                for i in range(size)
            ]
        )

    @classmethod
    def zeros(cls, rows, cols, nvars, degree, *, exact=True):
        return cls([[Jet.zero(nvars, degree, exact=exact)] * cols for _ in range(rows)])

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    @property
    def rows(self):
        return len(self.entries)

    @property
    def cols(self):
        return len(self.entries[0])

    @property
    def nvars(self):
        return self.entries[0][0].nvars

    @property
    def exact(self):
        return self.entries[0][0].exact

    @property
    def degree(self):
        return min(e.degree for r in self.entries for e in r)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def map(self, fn):
        return JetMatrix([[fn(e) for e in r] for r in self.entries])

    def _zip(self, other, fn):
        if not isinstance(other, JetMatrix):
            return NotImplemented
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return JetMatrix([[fn(a, b) for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self):
        return self.map(lambda e: -e)

    def __mul__(self, other):
        if isinstance(other, JetMatrix):
            raise TypeError("use @ for matrix products")
        return self.map(lambda e: e * other)

    def __rmul__(self, other):
        return self.map(lambda e: other * e)

    def __matmul__(self, other):
        if not isinstance(other, JetMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = self.entries[i][0] * other.entries[0][j]
                for k in range(1, self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return JetMatrix(out)

    def __eq__(self, other):
        if not isinstance(other, JetMatrix) or other.shape != self.shape:
            return False
        return all(a == b for r, s in zip(self.entries, other.entries) for a, b in zip(r, s))

    __hash__ = None

    def allclose(self, other, tol=1e-12):
        return all(
            a.allclose(b, tol) for r, s in zip(self.entries, other.entries) for a, b in zip(r, s)
        )

    def transpose(self):
        return JetMatrix([list(c) for c in zip(*self.entries)])

    T = property(transpose)

    def trace(self):
        if self.rows != self.cols:
            raise ValueError("trace of a non-square matrix")
        acc = self.entries[0][0]
        for i in range(1, self.rows):
            acc = acc + self.entries[i][i]
        return acc

    def constant_matrix(self):
        return [[e.constant_term for e in r] for r in self.entries]

    def truncate(self, degree):
        return self.map(lambda e: e.truncate(degree))

    def differentiate(self, var):
        return self.map(lambda e: e.differentiate(var))

    def remap(self, targets, nvars):
        return self.map(lambda e: e.remap(targets, nvars))

    def compose(self, args, degree=None):
        return self.map(lambda e: compose(e, args, degree))

    def conj(self):
        return self.map(lambda e: e.conj())

    def is_zero(self):
        return all(e.is_zero() for r in self.entries for e in r)

    def max_abs(self):
        return max(e.max_abs() for r in self.entries for e in r)

    def det(self, name="matrix"):
        return det(self, name)

    def inverse(self, name="matrix"):
        return matrix_inverse(self, name)

    def evaluate(self, point):
        return np.array([[e.evaluate(point) for e in r] for r in self.entries])

    def __repr__(self):
        return f"JetMatrix({self.rows}x{self.cols}, {self.nvars} vars, D={self.degree})"


def _pivot(column, exact):
    if exact:
        return next((i for i, e in column if e.constant_term), None)
    best, where = 0.0, None
    for i, e in column:
        a = abs(complex(e.constant_term))
        if a > best:
            best, where = a, i
    return where if best > 1e-14 else None


def det(M, name="matrix"):
    """Determinant by elimination with constant-term pivoting."""
    if M.rows != M.cols:
        raise ValueError(f"determinant of non-square {name}")
    A = [list(r) for r in M.entries]
    n = M.rows
    result = None
    sign = 1
    for col in range(n):
        p = _pivot([(r, A[r][col]) for r in range(col, n)], M.exact)
        if p is None:
            raise SingularDivisionError(f"{name} has singular constant term")
        if p != col:
            A[col], A[p] = A[p], A[col]
            sign = -sign
        pivot = A[col][col]
        result = pivot if result is None else result * pivot
        if col + 1 < n:
            inv = invert_unit(pivot)
            for r in range(col + 1, n):
                if A[r][col].is_zero():
                    continue
                f = A[r][col] * inv
                A[r] = [A[r][j] - f * A[col][j] if j > col else A[r][j] for j in range(n)]
    return result if sign == 1 else -result


def matrix_inverse(M, name="matrix"):
    """Inverse by Gauss-Jordan elimination on jets."""
    if M.rows != M.cols:
        raise ValueError(f"inverse of non-square {name}")
    n = M.rows
    eye = JetMatrix.identity(n, M.nvars, M.degree, exact=M.exact)
    A = [list(r) + list(e) for r, e in zip(M.entries, eye.entries)]
    for col in range(n):
        p = _pivot([(r, A[r][col]) for r in range(col, n)], M.exact)
        if p is None:
            raise SingularDivisionError(f"{name} has singular constant term")
        A[col], A[p] = A[p], A[col]
        inv = invert_unit(A[col][col])
        A[col] = [e * inv for e in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return JetMatrix([row[n:] for row in A])
