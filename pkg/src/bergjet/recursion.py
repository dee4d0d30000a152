"""The S-operator, negligible amplitudes, and the b_m recursion.

Amplitudes live in ``(x, y, theta)`` (block order as in :mod:`bergjet.kuranishi`).
A :class:`KExpansion` is a finite list of coefficients of ``k^{-m}``.  The
coefficients may be jets or, in the twisted case, jet matrices; the code
below only needs ``differentiate``, ``remap``, ``compose``, ``+`` and scaling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import factorial

import numpy as np

from ._fields import QQi
from .errors import ConsistencyError, DegreeBudgetError
from .geometry import polarize
from .jets import Jet, JetMatrix, variables
from .kuranishi import delta0 as _delta0
from .kuranishi import invert_theta, restrict_y_to_x, theta_map

# float-mode slack for the y = x identity check; exact mode compares exactly
DIAGONAL_TOL = 1e-9


class OutsideValidityRadius(UserWarning):
    """Kernel evaluated outside the configured validity radius."""


@dataclass
class KExpansion:
    """``sum_m coeffs[m - lowest] k^{-m}`` for ``m = lowest, lowest + 1, ...``."""

    coeffs: list
    lowest: int = 0

    @property
    def highest(self):
        return self.lowest + len(self.coeffs) - 1

    def at(self, m):
        i = m - self.lowest
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else None


def _mul(a, b):
    if isinstance(a, JetMatrix):
        return a @ b
    return a * b


def _zero_like(f, degree):
    if isinstance(f, JetMatrix):
        return JetMatrix.zeros(f.rows, f.cols, f.nvars, degree, exact=f.exact)
    return Jet.zero(f.nvars, degree, exact=f.exact)


def _exact_of(f):
    return f.exact


def _inv_factorial(l, exact):
    return Fraction(1, factorial(l)) if exact else 1.0 / factorial(l)


def dd(f, n):
    """``D_theta . D_y = sum_i d^2 / dtheta_i dy_i``."""
    acc = None
    for i in range(n):
        t = f.differentiate(2 * n + i).differentiate(n + i)
        acc = t if acc is None else acc + t
    return acc


def apply_S(a, N, n, inverse=False):
    """Apply ``S = exp(D_theta . D_y / k)`` (or its inverse) through order ``lowest + N``.

    The coefficient of ``k^{-m}`` in the result is
    ``sum_l (+-1)^l (D_theta . D_y)^l / l! a_{m - l}``.
    """
    top = a.lowest + N
    for j in range(a.lowest, min(top, a.highest) + 1):
        need = 2 * (top - j)
        if a.at(j).degree < need:
            raise DegreeBudgetError(
                f"order-{j} amplitude has degree {a.at(j).degree}; applying S to order {top} "
                f"needs {need}",
                required=need,
            )
    powers = {}

    def power(j, l):
        chain = powers.setdefault(j, [a.at(j)])
        while len(chain) <= l:
            chain.append(dd(chain[-1], n))
        return chain[l]

    first = a.coeffs[0]
    exact = _exact_of(first)
    out = []
    for m in range(a.lowest, top + 1):
        acc = None
        for l in range(m - a.lowest + 1):
            j = m - l
            if a.at(j) is None:
                continue
            c = _inv_factorial(l, exact) * (-1 if inverse and l % 2 else 1)
            term = power(j, l) * c
            acc = term if acc is None else acc + term
        if acc is None:
            acc = _zero_like(first, max(first.degree - 2 * (m - a.lowest), 0))
        out.append(acc)
    return KExpansion(out, a.lowest)


def nabla(A, n):
    """Negligible amplitude ``a = D_theta . A + k (x - y) . A``.

    ``A`` is a :class:`KExpansion` whose coefficients are length-``n`` lists of
    jets (components on the ``d theta_j``-hat basis).  The ``k (x - y)`` term
    shifts orders down by one, so the result starts at ``A.lowest - 1``.
    """
    sample = A.coeffs[0][0]
    D = sample.degree
    v = variables(3 * n, D, exact=sample.exact)
    diff = [v[i] - v[n + i] for i in range(n)]
    out = []
    for m in range(A.lowest - 1, A.highest + 1):
        acc = Jet.zero(3 * n, D, exact=sample.exact)
        cur = A.at(m)
        if cur is not None:
            for i in range(n):
                acc = acc + cur[i].differentiate(2 * n + i)
        nxt = A.at(m + 1)
        if nxt is not None:
            for i in range(n):
                acc = acc + diff[i] * nxt[i]
        out.append(acc)
    return KExpansion(out, A.lowest - 1)


def random_amplitude(n, N, rng, degree, poly_degree=3, *, exact=True):
    """Random polynomial ``A_0..A_{N+1}``, each an ``n``-vector of jets in ``(x, y, theta)``."""
    m = 3 * n
    monos = [e for e in product(range(poly_degree + 1), repeat=m) if sum(e) <= poly_degree]
    coeffs = []
    for _ in range(N + 2):
        vec = []
        for _ in range(n):
            terms = {}
            for e in monos:
                if rng.random() < 0.35:
                    re = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
                    im = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
                    terms[e] = complex(re, im) if not exact else QQi(re, im)
            vec.append(Jet(m, degree, terms, exact=exact))
        coeffs.append(vec)
    return KExpansion(coeffs, 0)


def verify_negligible(A, N, n):
    """Residual of ``S(nabla A)|_{y=x}`` at orders ``-1..N`` (all zero in theory)."""
    a = nabla(A, n)
    Sa = apply_S(a, N - a.lowest, n)
    orders, residuals, zero = [], [], True
    for m in range(a.lowest, N + 1):
        r = restrict_y_to_x(Sa.at(m), n)
        orders.append(m)
        residuals.append(r.max_abs())
        zero = zero and r.is_zero()
    return {
        "orders": orders,
        "residuals": residuals,
        "max_residual": max(residuals),
        "exactly_zero": zero,
    }


@dataclass
class CoefficientSequence:
    """Solved ``b_0..b_N`` as jets in ``(x, z)``.

    ``diagonal[m]`` is the same table read in ``(x, xbar)``; ``valid_degrees[m]``
    is ``work_degree - 2m``.
    """

    n: int
    order: int
    b: list
    work_degree: int
    valid_degrees: list = field(default_factory=list)

    @property
    def exact(self):
        return self.b[0].exact

    @property
    def diagonal(self):
        return list(self.b)

    @property
    def base_values(self):
        return [
            c.constant_matrix() if isinstance(c, JetMatrix) else c.constant_term for c in self.b
        ]

    def truncated(self, degree):
        return [c.truncate(min(degree, c.degree)) for c in self.b]


def _identity_like(delta, nvars, degree):
    if isinstance(delta, JetMatrix):
        return JetMatrix.identity(delta.rows, nvars, degree, exact=delta.exact)
    return Jet.one(nvars, degree, exact=delta.exact)


def solve_recursion(delta, z_map, theta, N):
    """Solve ``sum_l (D_theta . D_y)^l / l! (b_{m-l}(x, z(x,y,theta)) Delta)|_{y=x} = 0``.

    ``delta`` is the scalar amplitude base (or its matrix twist).  For each
    ``m >= 1`` the known part is restricted to ``y = x``, negated (the division
    by ``Delta|_{y=x}`` is asserted to be by one), and pulled back from
    ``(x, theta)`` to ``(x, z)`` through ``theta = psi_x(x, z)``.
    """
    n = z_map.n
    D = delta.degree
    if D < 2 * N:
        raise DegreeBudgetError(
            f"amplitude degree {D} cannot support order {N} (needs {2 * N})", required=2 * N
        )
    diag = restrict_y_to_x(delta, n)
    ident = _identity_like(delta, 2 * n, D)
    if not (diag == ident if delta.exact else diag.allclose(ident, DIAGONAL_TOL)):
        raise ConsistencyError("amplitude base does not restrict to the identity on y = x")
    exact = delta.exact
    args = [a.truncate(min(a.degree, D)) for a in z_map.pullback_args()]
    back = variables(2 * n, D, exact=exact)[:n] + [t.truncate(min(t.degree, D)) for t in theta.at_diagonal()]
    b = [_identity_like(delta, 2 * n, D)]
    chains = []

    def chain(j, l):
        while len(chains) <= j:
            i = len(chains)
            Dj = D - 2 * i
            pulled = b[i].compose([x.truncate(Dj) for x in args])
            g = _mul(pulled, delta.truncate(Dj))
            chains.append([g])
        c = chains[j]
        while len(c) <= l:
            c.append(dd(c[-1], n))
        return c[l]

    for m in range(1, N + 1):
        Dm = D - 2 * m
        acc = None
        for l in range(1, m + 1):
            term = restrict_y_to_x(chain(m - l, l), n).truncate(Dm) * _inv_factorial(l, exact)
            acc = term if acc is None else acc + term
        c_m = -acc
        b.append(c_m.compose([x.truncate(Dm) for x in back]))
    return CoefficientSequence(n, N, b, D, [D - 2 * m for m in range(N + 1)])


def work_degree(order, degree_out):
    return degree_out + 2 * (order + 1)


def expand(phi, order, degree_out=0):
    """Coefficients ``b_0..b_order`` for a potential, each valid to at least ``degree_out``.

    The potential must be valid to ``degree_out + 2 (order + 1) + 2``.
    """
    Dw = work_degree(order, degree_out)
    if phi.degree < Dw + 2:
        raise DegreeBudgetError(
            f"potential truncated at degree {phi.degree}; order {order} with output degree "
            f"{degree_out} needs {Dw + 2}",
            required=Dw + 2,
        )
    psi = polarize(phi)
    th = theta_map(psi, Dw + 1)
    zm = invert_theta(type(th)(th.n, tuple(t.truncate(Dw) for t in th.theta)))
    d0 = _delta0(psi, th, zm, Dw)
    return solve_recursion(d0.delta0, zm, th, order)


class AsymptoticKernel:
    """``K^(N)(x, conj y) = (k/pi)^n (sum_m b_m(x, conj y) k^{-m}) exp(k psi(x, conj y))``.

    ``bundle`` (a rank-r :class:`~bergjet.twisted.BundleMetricJet`) switches to the
    twisted kernel ``... B(x, conj y) G(x, conj y)^{-1}`` whose Bergman function is
    ``K(x, conj x) G(x, conj x) exp(-k phi(x))``.
    """

    def __init__(self, seq, psi, k, radius=None, bundle=None):
        if k <= 0:
            raise ValueError("k must be positive")
        self.seq = seq
        self.n = seq.n
        self.k = float(k)
        self.radius = radius
        self.bundle = bundle
        self._b = [c.map(lambda e: e.to_float()) if isinstance(c, JetMatrix) else c.to_float() for c in seq.b]
        self._psi = psi.psi.to_float()
        self._G = None if bundle is None else bundle.G.map(lambda e: e.to_float())

    def _check(self, *pts):
        if self.radius is None:
            return
        for p in pts:
            if np.linalg.norm(np.atleast_1d(p)) > self.radius:
                warnings.warn(
                    f"evaluation point {p} lies outside the validity radius {self.radius}",
                    OutsideValidityRadius,
                    stacklevel=3,
                )

    def amplitude(self, x, y):
        pt = np.concatenate([np.atleast_1d(x), np.conj(np.atleast_1d(y))]).astype(complex)
        total = 0
        for m, c in enumerate(self._b):
            total = total + c.evaluate(pt) * self.k ** (-m)
        return total

    def kernel(self, x, y):
        self._check(x, y)
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        pt = np.concatenate([x, y.conj()])
        pre = (self.k / math.pi) ** self.n * np.exp(self.k * self._psi.evaluate(pt))
        amp = self.amplitude(x, y)
        if self._G is not None:
            amp = amp @ np.linalg.inv(self._G.evaluate(pt))
        return pre * amp

    def bergman(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        pt = np.concatenate([x, x.conj()])
        K = self.kernel(x, x) * np.exp(-self.k * self._psi.evaluate(pt).real)
        if self._G is not None:
            return K @ self._G.evaluate(pt)
        return float(np.real(K))


def assemble_kernel(seq, psi, k, radius=None, bundle=None):
    return AsymptoticKernel(seq, psi, k, radius, bundle)


def bergman_at_base(base_values, k, n):
    """``(k/pi)^n sum_m b_m(0, 0) k^{-m}`` from exact or float base values."""
    total = sum(complex(b).real * k ** (-m) for m, b in enumerate(base_values))
    return (k / math.pi) ** n * total
