"""Kähler potentials, their polarization, and the metric/connection/curvature jets.

A potential in dimension ``n`` is a jet in ``2n`` variables ordered
``(x_1..x_n, xbar_1..xbar_n)``.  Polarization reinterprets the second block
as independent variables ``z``, so the same coefficient table is the
holomorphic function ``psi(x, z)`` with ``psi(x, conj(x)) = phi(x)``.

Curvature conventions: with ``H_ij = d^2 psi / dy_i dz_j`` and
``eta_j = H^{-1} dH/dy_j``, the (1,1)-form coefficients of ``dbar eta`` in the
``dy_j ^ dz_k`` basis are ``-d eta_j / dz_k``, and contraction is
``Lambda T = sum_jk (H^{-1})_kj T_jk`` so that ``Lambda H = n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._fields import QQi
from .errors import (
    ConfigError,
    RealityError,
    SingularDivisionError,
    StrictPositivityError,
)
from .jets import Jet, JetMatrix, compose, jet_log, matrix_inverse, variables

MODEL_NAMES = ("flat", "fubini-study", "radial-quartic")


def hermitian_defect(jet, n, tol=1e-12, block=None):
    """First coefficient pair violating ``c[a, b] == conj(c[b, a])``, or ``None``.

    ``jet`` lives in ``2n`` variables (holomorphic block first).  ``block``
    optionally supplies the partner jet for matrix entries (``G_ji`` for
    ``G_ij``).
    """
    partner = jet if block is None else block
    keys = {exps for exps, _ in jet.items()} | {exps for exps, _ in partner.items()}
    for exps in sorted(keys):
        swapped = exps[n:] + exps[:n]
        a = jet[exps]
        b = partner[swapped]
        if jet.exact:
            if a != b.conjugate():
                return exps, a, swapped, b
        elif abs(complex(a) - complex(b).conjugate()) > tol * max(1.0, abs(complex(a))):
            return exps, a, swapped, b
    return None


def _hermitian_positive(M, exact):
    """Positive definiteness of a Hermitian scalar matrix."""
    n = len(M)
    if exact:
        for size in range(1, n + 1):
            minor = JetMatrix(
                [[Jet.constant(M[i][j], 1, 0) for j in range(size)] for i in range(size)]
            )
            try:
                d = minor.det().constant_term
            except SingularDivisionError:
                return False
            if d.im != 0 or d.re <= 0:
                return False
        return True
    arr = np.array([[complex(v) for v in row] for row in M])
    if not np.allclose(arr, arr.conj().T, atol=1e-12):
        return False
    return bool(np.linalg.eigvalsh(arr).min() > 0)


@dataclass(frozen=True)
class PotentialJet:
    """Real, strictly plurisubharmonic weight ``phi(x, xbar)`` at the chart origin."""

    n: int
    phi: Jet
    check: bool = True

    def __post_init__(self):
        if self.phi.nvars != 2 * self.n:
            raise ConfigError(f"potential in dimension {self.n} needs {2 * self.n} variables")
        if self.check:
            bad = hermitian_defect(self.phi, self.n)
            if bad is not None:
                a_exps, a, b_exps, b = bad
                raise RealityError(
                    f"potential is not real: coefficient {a} at {a_exps} vs {b} at {b_exps}"
                )
            if not _hermitian_positive(self.levi_form(), self.phi.exact):
                raise StrictPositivityError("complex Hessian at the origin is not positive definite")

    @property
    def exact(self):
        return self.phi.exact

    @property
    def degree(self):
        return self.phi.degree

    def levi_form(self):
        """``phi_{i jbar}(0)`` as a nested list of scalars."""
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                exps = [0] * (2 * n)
                exps[i] += 1
                exps[n + j] += 1
                row.append(self.phi[tuple(exps)])
            out.append(row)
        return out

    def min_eigenvalue(self):
        arr = np.array([[complex(v) for v in r] for r in self.levi_form()])
        return float(np.linalg.eigvalsh(arr).min())

    def evaluate(self, x):
        """``phi`` at complex point(s) ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=complex)
        return self.phi.evaluate(np.concatenate([x, x.conj()], axis=-1)).real

    def to_float(self):
        return PotentialJet(self.n, self.phi.to_float(), check=False)


@dataclass(frozen=True)
class PolarizedPhase:
    """``psi(x, z)``: the holomorphic extension with ``psi(x, xbar) = phi(x)``."""

    n: int
    psi: Jet

    def restrict_to_diagonal(self):
        return PotentialJet(self.n, self.psi)


def polarize(phi):
    """Replace ``xbar_i`` by an independent variable ``z_i``.

    The term table is kept verbatim; the reality invariant is rechecked so a
    hand-built (unchecked) potential cannot slip through.
    """
    bad = hermitian_defect(phi.phi, phi.n)
    if bad is not None:
        a_exps, a, b_exps, b = bad
        raise RealityError(f"cannot polarize: coefficient {a} at {a_exps} vs {b} at {b_exps}")
    return PolarizedPhase(phi.n, phi.phi)


# -- model potentials ------------------------------------------------------------


def _norm_squared(n, degree, exact):
    v = variables(2 * n, degree, exact=exact)
    acc = Jet.zero(2 * n, degree, exact=exact)
    for i in range(n):
        acc = acc + v[i] * v[n + i]
    return acc


def flat_potential(n, degree, *, exact=True):
    return PotentialJet(n, _norm_squared(n, degree, exact))


def fubini_study_potential(n, degree, *, exact=True):
    return PotentialJet(n, jet_log(1 + _norm_squared(n, degree, exact)))


def radial_quartic_potential(n, degree, c=Fraction(1, 10), *, exact=True):
    t = _norm_squared(n, degree, exact)
    c = Fraction(c) if exact else float(c)
    return PotentialJet(n, t + t * t * c)


def model_potential(name, n, degree, *, exact=True, c=Fraction(1, 10)):
    """Built-in model by name: ``flat``, ``fubini-study`` or ``radial-quartic``."""
    if name == "flat":
        return flat_potential(n, degree, exact=exact)
    if name == "fubini-study":
        return fubini_study_potential(n, degree, exact=exact)
    if name == "radial-quartic":
        return radial_quartic_potential(n, degree, c, exact=exact)
    raise ConfigError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")


def _small_gaussian(rng, scale=4, imag=True):
    re = Fraction(int(rng.integers(-2, 3)), scale)
    im = Fraction(int(rng.integers(-2, 3)), scale) if imag else Fraction(0)
    return QQi(re, im)


def random_quartic_potential(n, rng, degree=4, *, exact=True, density=0.6):
    """Random real polynomial potential of degree <= 4 with positive Levi form.

    The quadratic Hermitian part is ``I + B B*`` for a small random ``B``; cubic
    and quartic terms (pluriharmonic ones included) get small Gaussian-rational
    coefficients with the conjugate symmetry that makes ``phi`` real.
    """
    m = 2 * n
    terms = {}
    B = [[_small_gaussian(rng) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            h = QQi(int(i == j)) + sum((B[i][k] * B[j][k].conjugate() for k in range(n)), QQi(0))
            exps = [0] * m
            exps[i] += 1
            exps[n + j] += 1
            terms[tuple(exps)] = h
    for total in (3, 4):
        for exps in itertools.product(range(total + 1), repeat=m):
            if sum(exps) != total or exps in terms:
                continue
            swapped = exps[n:] + exps[:n]
            if rng.random() > density:
                continue
            c = _small_gaussian(rng, scale=8, imag=exps != swapped)
            terms[exps] = c
            terms[swapped] = c.conjugate()
    jet = Jet(m, degree, terms, exact=True)
    if not exact:
        jet = jet.to_float()
    return PotentialJet(n, jet)


def linear_change(phi, U):
    """Pull back ``phi`` along ``x -> U x`` (``xbar -> conj(U) xbar``)."""
    n = phi.n
    v = variables(2 * n, phi.degree, exact=phi.exact)
    args = []
    for i in range(n):
        args.append(sum((v[j] * U[i][j] for j in range(n)), Jet.zero(2 * n, phi.degree, exact=phi.exact)))
    for i in range(n):
        args.append(
            sum(
                (v[n + j] * _conj(U[i][j]) for j in range(n)),
                Jet.zero(2 * n, phi.degree, exact=phi.exact),
            )
        )
    return PotentialJet(n, compose(phi.phi, args))


def _conj(c):
    return c.conjugate() if hasattr(c, "conjugate") else c


# -- metric, connection, curvature ------------------------------------------------


@dataclass(frozen=True)
class MetricJet:
    """``H_ij(y, z) = d^2 psi / dy_i dz_j``."""

    n: int
    H: JetMatrix

    def inverse(self):
        try:
            return matrix_inverse(self.H, "metric H")
        except SingularDivisionError as exc:
            raise StrictPositivityError(f"metric is degenerate at the base point: {exc}") from exc


@dataclass(frozen=True)
class ConnectionJet:
    """``eta_j = H^{-1} dH/dy_j`` for ``j = 0..n-1``."""

    eta: tuple


@dataclass(frozen=True)
class ScalarCurvatureJet:
    s: Jet

    @property
    def base_value(self):
        return self.s.constant_term


def hermitian_metric(psi):
    n = psi.n
    p = psi.psi
    return MetricJet(
        n,
        JetMatrix([[p.differentiate(i).differentiate(n + j) for j in range(n)] for i in range(n)]),
    )


def connection(metric, Hinv=None):
    Hinv = metric.inverse() if Hinv is None else Hinv
    return ConnectionJet(tuple(Hinv @ metric.H.differentiate(j) for j in range(metric.n)))


def contract(T, metric, Hinv=None):
    """Metric contraction ``sum_jk (H^{-1})_kj T_jk``.

    ``T[j][k]`` is the coefficient of ``dy_j ^ dz_k``; entries may be jets or
    jet matrices (bundle-valued forms).
    """
    n = metric.n
    rows = T.entries if isinstance(T, JetMatrix) else T
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"contraction needs an {n}x{n} form")
    Hinv = metric.inverse() if Hinv is None else Hinv
    D = min(metric.H.degree, min(t.degree for r in rows for t in r))
    acc = None
    for j in range(n):
        for k in range(n):
            h = Hinv[k, j].truncate(min(Hinv[k, j].degree, D))
            term = h * rows[j][k]
            acc = term if acc is None else acc + term
    return acc


def curvature_form(conn, n):
    """``dbar eta`` coefficients: ``T[j][k] = -d eta_j / dz_k`` (matrix valued)."""
    return [[-conn.eta[j].differentiate(n + k) for k in range(n)] for j in range(n)]


def scalar_curvature(metric):
    """``s = Lambda Tr(dbar eta)``; equals ``-sum_j Tr d eta_j/dzbar_j`` where ``H = I``."""
    Hinv = metric.inverse()
    conn = connection(metric, Hinv)
    n = metric.n
    T = [[-conn.eta[j].differentiate(n + k).trace() for k in range(n)] for j in range(n)]
    return ScalarCurvatureJet(contract(T, metric, Hinv))
