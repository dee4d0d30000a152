"""Division map theta(x, y, z), its inverse z(x, y, theta), and the amplitude base.

All ``3n``-variable jets use the block order ``(x, y, z)`` or ``(x, y, theta)``:
indices ``0..n-1`` are ``x``, ``n..2n-1`` are ``y``, ``2n..3n-1`` the last block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import CompositionError, SingularDivisionError, StrictPositivityError
from .jets import Jet, JetMatrix, compose, invert_map, invert_unit, variables


def x_block(n):
    return range(n)


def y_block(n):
    return range(n, 2 * n)


def z_block(n):
    return range(2 * n, 3 * n)


def restrict_y_to_x(jet, n):
    """``f(x, y, w) -> f(x, x, w)`` as a jet in ``(x, w)``."""
    targets = list(range(n)) + list(range(n)) + list(range(n, 2 * n))
    return jet.remap(targets, 2 * n)


def embed_yz(jet, n):
    """A ``(y, z)`` jet viewed in the ``(x, y, z)`` space."""
    return jet.remap(list(range(n, 3 * n)), 3 * n)


def embed_xz(jet, n):
    """A ``(x, z)`` jet viewed in the ``(x, y, z)`` space."""
    return jet.remap(list(range(n)) + list(range(2 * n, 3 * n)), 3 * n)


@dataclass(frozen=True)
class ThetaMap:
    n: int
    theta: tuple

    @property
    def degree(self):
        return min(t.degree for t in self.theta)

    def at_diagonal(self):
        """``theta(x, x, z)`` as jets in ``(x, z)``."""
        return tuple(restrict_y_to_x(t, self.n) for t in self.theta)

    def jacobian_z(self):
        n = self.n
        return JetMatrix([[t.differentiate(2 * n + j) for j in range(n)] for t in self.theta])


@dataclass(frozen=True)
class ZOfTheta:
    n: int
    z_map: tuple

    @property
    def degree(self):
        return min(z.degree for z in self.z_map)

    def pullback_args(self, with_y=False):
        """Arguments substituting ``(x, z) -> (x, z(x, y, theta))``.

        With ``with_y`` the first block is ``y`` instead (for ``G(y, z)`` etc.).
        """
        n = self.n
        v = variables(3 * n, self.degree, exact=self.z_map[0].exact)
        first = [v[i] for i in (y_block(n) if with_y else x_block(n))]
        return first + list(self.z_map)


@dataclass(frozen=True)
class AmplitudeBase:
    n: int
    delta0: Jet


def theta_map(psi, degree=None):
    """``theta_i = int_0^1 (d psi / dx_i)(t x + (1 - t) y, z) dt``, integrated exactly.

    Each monomial ``prod (t x_j + (1-t) y_j)^a_j`` is expanded binomially; the
    ``t``-integrals are Beta values ``A! B! / (A + B + 1)!``.
    """
    n = psi.n
    exact = psi.psi.exact
    D = psi.psi.degree - 1
    if degree is not None:
        D = min(D, degree)
    thetas = []
    for i in range(n):
        g = psi.psi.differentiate(i).truncate(D)
        terms = {}
        for exps, c in g.items():
            alpha, gamma = exps[:n], exps[n:]
            total = sum(alpha)
            for split in itertools.product(*(range(a + 1) for a in alpha)):
                A = sum(split)
                w = Fraction(factorial(A) * factorial(total - A), factorial(total + 1))
                for a, s in zip(alpha, split):
                    w *= comb(a, s)
                key = tuple(split) + tuple(a - s for a, s in zip(alpha, split)) + tuple(gamma)
                val = c * (w if exact else float(w))
                terms[key] = terms[key] + val if key in terms else val
        thetas.append(Jet(3 * n, D, terms, exact=exact))
    return ThetaMap(n, tuple(thetas))


def invert_theta(theta):
    """Solve ``theta(x, y, z) = w`` for ``z`` as jets in ``(x, y, w)``."""
    n = theta.n
    exact = theta.theta[0].exact
    D = theta.degree
    v = variables(3 * n, D, exact=exact)
    F = v[: 2 * n] + list(theta.theta)
    try:
        G = invert_map(F, name="(x, y, z) -> (x, y, theta)")
    except SingularDivisionError as exc:
        raise StrictPositivityError(f"psi_xz(0, 0) is singular: {exc}") from exc
    except CompositionError as exc:
        raise CompositionError(
            f"{exc}; theta(0, 0, 0) must vanish (drop linear pluriharmonic terms of phi)"
        ) from exc
    return ZOfTheta(n, tuple(G[2 * n :]))


def delta0(psi, theta, z_map, degree=None):
    """``det psi_yz(y, z) / det theta_z(x, y, z)`` with ``z = z(x, y, theta)``."""
    n = psi.n
    D = min(psi.psi.degree - 2, theta.degree - 1, z_map.degree)
    if degree is not None:
        D = min(D, degree)
    H = JetMatrix(
        [[psi.psi.differentiate(i).differentiate(n + j).truncate(D) for j in range(n)] for i in range(n)]
    )
    det_h = embed_yz(H.det("psi_yz"), n)
    det_tz = theta.jacobian_z().truncate(D).det("theta_z")
    args = list(variables(3 * n, D, exact=psi.psi.exact)[: 2 * n]) + [z.truncate(D) for z in z_map.z_map]
    num = compose(det_h, args)
    den = compose(det_tz, args)
    return AmplitudeBase(n, num * invert_unit(den))


def kuranishi(psi, degree):
    """Convenience: ``(theta, z_map, delta0)`` all valid to ``degree``."""
    th = theta_map(psi, degree + 1)
    zm = invert_theta(ThetaMap(th.n, tuple(t.truncate(min(t.degree, degree)) for t in th.theta)))
    return th, zm, delta0(psi, th, zm, degree)


def _sample_ball(rng, count, n, radius):
    g = rng.standard_normal((count, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / (2 * n))
    pts = g * r[:, None]
    return pts[:, :n] + 1j * pts[:, n:]


def good_contour_check(phi, psi, theta, radius=0.3, margin=None, samples=10_000, seed=0):
    """Sample the good-contour inequality on ``z = conj(y)``.

    Checks ``2 Re theta.(x - y) + margin |x - y|^2 + phi(y) - phi(x) <= 0`` and
    ``2 Re psi(x, conj y) - phi(x) - phi(y) <= -margin |x - y|^2`` at uniform
    samples of the ball of the given radius.  Violations are reported, not raised.
    """
    n = phi.n
    if margin is None:
        margin = 0.5 * phi.min_eigenvalue()
    rng = np.random.default_rng(seed)
    x = _sample_ball(rng, samples, n, radius)
    y = _sample_ball(rng, samples, n, radius)
    fphi = phi.phi.to_float()
    fpsi = psi.psi.to_float()
    phix = fphi.evaluate(np.concatenate([x, x.conj()], axis=1)).real
    phiy = fphi.evaluate(np.concatenate([y, y.conj()], axis=1)).real
    pts = np.concatenate([x, y, y.conj()], axis=1)
    th = np.stack([t.to_float().evaluate(pts) for t in theta.theta], axis=1)
    dxy = x - y
    dist2 = np.sum(np.abs(dxy) ** 2, axis=1)
    slack = 2 * np.real(np.sum(th * dxy, axis=1)) + margin * dist2 + phiy - phix
    psixy = fpsi.evaluate(np.concatenate([x, y.conj()], axis=1))
    slack_psi = 2 * psixy.real - phix - phiy + margin * dist2
    tol = 1e-12 * (1 + np.abs(phix) + np.abs(phiy))
    bad = slack > tol
    bad_psi = slack_psi > tol
    worst = int(np.argmax(slack))

    def pair(v):
        return [[float(c.real), float(c.imag)] for c in v]

    return {
        "samples": int(samples),
        "radius": float(radius),
        "margin": float(margin),
        "seed": int(seed),
        "violations": int(bad.sum()),
        "psi_violations": int(bad_psi.sum()),
        "max_slack": float(slack.max()),
        "max_psi_slack": float(slack_psi.max()),
        "witness": {"x": pair(x[worst]), "y": pair(y[worst])},
    }
