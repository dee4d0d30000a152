"""Twisting by a Hermitian vector bundle, and general volume forms as rank-1 twists."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from ._fields import QQi
from .errors import (
    ConfigError,
    DegreeBudgetError,
    RealityError,
    SingularDivisionError,
    StrictPositivityError,
)
from .geometry import (
    _hermitian_positive,
    contract,
    hermitian_defect,
    hermitian_metric,
    polarize,
    scalar_curvature,
)
from .jets import Jet, JetMatrix
from .kuranishi import delta0 as _delta0
from .kuranishi import invert_theta, theta_map
from .recursion import solve_recursion, work_degree


@dataclass(frozen=True)
class BundleMetricJet:
    """Hermitian ``r x r`` matrix jet ``G(x, xbar)``, positive definite at 0."""

    n: int
    G: JetMatrix
    check: bool = True

    def __post_init__(self):
        G = self.G
        if G.rows != G.cols:
            raise ConfigError("bundle metric must be square")
        if G.nvars != 2 * self.n:
            raise ConfigError(f"bundle metric over dimension {self.n} needs {2 * self.n} variables")
        if self.check:
            for i in range(G.rows):
                for j in range(G.rows):
                    bad = hermitian_defect(G[i, j], self.n, block=G[j, i])
                    if bad is not None:
                        raise RealityError(
                            f"bundle metric entry ({i},{j}) breaks Hermitian symmetry at {bad[0]}"
                        )
            if not _hermitian_positive(G.constant_matrix(), G.exact):
                raise StrictPositivityError("bundle metric is not positive definite at the origin")

    @property
    def rank(self):
        return self.G.rows

    @property
    def degree(self):
        return self.G.degree


@dataclass(frozen=True)
class TwistedAmplitude:
    n: int
    deltaG: JetMatrix


@dataclass(frozen=True)
class BundleCurvature:
    eta_E: tuple
    theta_E: list
    lambda_theta: JetMatrix


def delta_G(delta0, G, z_map):
    """``Delta_0 G(x, z)^{-1} G(y, z)`` with ``z = z(x, y, theta)``; left factor inverted."""
    n = z_map.n
    D = min(delta0.delta0.degree, G.degree, z_map.degree)
    try:
        Ginv = G.G.truncate(D).inverse("bundle metric G")
    except SingularDivisionError as exc:
        raise StrictPositivityError(str(exc)) from exc
    ax = [a.truncate(D) for a in z_map.pullback_args()]
    ay = [a.truncate(D) for a in z_map.pullback_args(with_y=True)]
    left = Ginv.compose(ax)
    right = G.G.truncate(D).compose(ay)
    return TwistedAmplitude(n, (left @ right) * delta0.delta0.truncate(D))


def solve_recursion_twisted(deltaG, z_map, theta, N):
    return solve_recursion(deltaG.deltaG, z_map, theta, N)


def bundle_curvature(G, metric):
    """``eta_E = G^{-1} dG``, ``Theta_E = dbar eta_E`` and its metric contraction."""
    n = G.n
    Ginv = G.G.inverse("bundle metric G")
    eta = tuple(Ginv @ G.G.differentiate(j) for j in range(n))
    T = [[-eta[j].differentiate(n + k) for k in range(n)] for j in range(n)]
    return BundleCurvature(eta, T, contract(T, metric))


def predicted_b1(phi, G):
    """``(s/2) I + Lambda Theta_E`` at the base point, from geometry alone."""
    metric = hermitian_metric(polarize(phi))
    s = scalar_curvature(metric).base_value
    lam = bundle_curvature(G, metric).lambda_theta.constant_matrix()
    r = G.rank
    half = s / 2 if phi.exact else complex(s) / 2
    return [[lam[i][j] + (half if i == j else 0) for j in range(r)] for i in range(r)]


def volume_twist(ratio, n):
    """Density ``mu_n / omega_n`` as a rank-1 bundle metric on the trivial bundle."""
    c = ratio.constant_term
    if complex(c).imag != 0 or complex(c).real <= 0:
        raise StrictPositivityError(f"volume density must be positive at the origin, got {c}")
    return BundleMetricJet(n, JetMatrix([[ratio]]))


def identity_bundle(n, rank, degree, *, exact=True):
    return BundleMetricJet(n, JetMatrix.identity(rank, 2 * n, degree, exact=exact))


def random_bundle_metric(n, rank, rng, degree=4, *, exact=True, density=0.6):
    """Random Hermitian ``rank x rank`` polynomial metric (degree <= 2) with ``G(0) > 0``."""
    m = 2 * n
    tables = [[{} for _ in range(rank)] for _ in range(rank)]
    B = [[QQi(Fraction(int(rng.integers(-2, 3)), 4), Fraction(int(rng.integers(-2, 3)), 4)) for _ in range(rank)] for _ in range(rank)]
    zero = (0,) * m
    for i in range(rank):
        for j in range(rank):
            tables[i][j][zero] = QQi(int(i == j)) + sum(
                (B[i][k] * B[j][k].conjugate() for k in range(rank)), QQi(0)
            )
    monos = [e for e in itertools.product(range(3), repeat=m) if 1 <= sum(e) <= 2]
    for i in range(rank):
        for j in range(i, rank):
            for e in monos:
                swapped = e[n:] + e[:n]
                if i == j and swapped < e:
                    continue
                if rng.random() > density:
                    continue
                c = QQi(
                    Fraction(int(rng.integers(-3, 4)), 6),
                    Fraction(int(rng.integers(-3, 4)), 6) if (i != j or e != swapped) else 0,
                )
                tables[i][j][e] = c
                tables[j][i][swapped] = c.conjugate()
    G = JetMatrix([[Jet(m, degree, tables[i][j]) for j in range(rank)] for i in range(rank)])
    if not exact:
        G = G.map(lambda e: e.to_float())
    return BundleMetricJet(n, G)


def expand_twisted(phi, bundle, order, degree_out=0):
    """Matrix coefficients ``b_0..b_order`` for ``L^k (x) E``."""
    Dw = work_degree(order, degree_out)
    if phi.degree < Dw + 2:
        raise DegreeBudgetError(f"potential needs degree {Dw + 2}", required=Dw + 2)
    if bundle.degree < Dw:
        raise DegreeBudgetError(f"bundle metric needs degree {Dw}", required=Dw)
    psi = polarize(phi)
    th = theta_map(psi, Dw + 1)
    zm = invert_theta(type(th)(th.n, tuple(t.truncate(Dw) for t in th.theta)))
    d0 = _delta0(psi, th, zm, Dw)
    dG = delta_G(d0, bundle, zm)
    return solve_recursion_twisted(dG, zm, th, order)
