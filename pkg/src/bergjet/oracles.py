"""Finite-k Bergman kernels computed independently of the recursion.

Two sources: closed-form monomial norms on projective space, and
Gauss-Legendre radial quadrature for rotation-invariant weights on a disc.
Both store ``log`` norms so large ``k`` neither overflows nor underflows.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, QuadratureResolutionError
from .geometry import PotentialJet, model_potential, polarize
from .recursion import assemble_kernel, bergman_at_base, expand, work_degree

# first differences with step 1e-4 carry round-off near 1e-12 relative to B_k / k^n
DIFFERENCE_FLOOR = 1e-11

# -- kernels -----------------------------------------------------------------


@dataclass
class FiniteKKernel:
    """``K_k(x, y) = sum_a x^a conj(y)^a / ||x^a||^2`` for an orthogonal monomial basis."""

    model: str
    k: float
    n: int
    exponents: np.ndarray
    log_norms: np.ndarray
    weight: object
    density: object
    drift: float = 0.0
    radius: float = math.inf

    @property
    def basis_norms(self):
        return np.exp(self.log_norms)

    def _log_monomials(self, x):
        """``log |x^a|^2`` for every basis exponent; shape ``(..., M)``."""
        x = np.asarray(x, dtype=complex)
        with np.errstate(divide="ignore"):
            L = 2.0 * np.log(np.abs(x))
        out = np.zeros(x.shape[:-1] + (len(self.exponents),))
        for i in range(self.n):
            a = self.exponents[:, i]
            Li = L[..., i : i + 1]
            at_zero = np.isneginf(Li)
            out += np.where(at_zero, np.where(a == 0, 0.0, -np.inf), a * np.where(at_zero, 0.0, Li))
        return out

    def kernel(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        mono = np.prod(np.power(x[..., None, :] * np.conj(y[..., None, :]), self.exponents), axis=-1)
        return np.sum(mono * np.exp(-self.log_norms), axis=-1)

    def bergman(self, x):
        """``B_k(x) = K_k(x, x) exp(-k phi(x))``; accepts shape ``(n,)`` or ``(P, n)``."""
        x = np.asarray(x, dtype=complex)
        if x.ndim == 0:
            x = x.reshape(1)
        logs = self._log_monomials(x) - self.log_norms - self.k * self.weight(x)[..., None]
        return np.exp(logsumexp(logs, axis=-1))

    def mass(self, nodes=400):
        """``int B_k`` against the measure defining the norms (``n = 1``, compact models).

        Uses ``r = tan(a)`` so the full plane maps to ``a in [0, pi/2)``.
        """
        if self.n != 1:
            raise ConfigError("mass is implemented for one-dimensional kernels")
        t, w = np.polynomial.legendre.leggauss(nodes)
        a = (t + 1) * math.pi / 4
        w = w * math.pi / 4
        r = np.tan(a)
        dens = self.density(r**2)
        jac = r / np.cos(a) ** 2
        return float(2 * math.pi * np.sum(w * self.bergman(r[:, None]) * dens * jac))

    def apply(self, u, x, panels=64, nodes=24, angles=256):
        """``int K(x, y) u(y) exp(-k phi(y)) dens(y) dlambda(y)`` over the kernel's domain (``n = 1``).

        A finite domain is the quadrature disc; the whole plane is reached through ``r = tan(a)``.
        """
        if self.n != 1:
            raise ConfigError("apply is implemented for one-dimensional kernels")
        if math.isfinite(self.radius):
            r, wr = _composite_nodes(0.0, self.radius, panels, nodes)
        else:
            a, wa = _composite_nodes(0.0, math.pi / 2, panels, nodes)
            r, wr = np.tan(a), wa / np.cos(a) ** 2
        ang = 2 * math.pi * np.arange(angles) / angles
        y = (r[:, None] * np.exp(1j * ang)[None, :]).reshape(-1, 1)
        weights = (wr * r)[:, None].repeat(angles, axis=1).reshape(-1) * (2 * math.pi / angles)
        vals = self.kernel(np.full_like(y, x), y) * u(y[:, 0])
        vals = vals * np.exp(-self.k * self.weight(y)) * self.density(np.abs(y[:, 0]) ** 2)
        return complex(np.sum(vals * weights))


def _cpn_weight(x):
    return np.log1p(np.sum(np.abs(np.asarray(x)) ** 2, axis=-1))


def exact_cpn_kernel(k, n=1):
    """Projective-space kernel from ``||x^a||^2 = pi^n a! (k - |a|)! / (k + n)!``."""
    if k < 0 or int(k) != k:
        raise ConfigError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    exps = np.array([a for a in itertools.product(range(k + 1), repeat=n) if sum(a) <= k], dtype=np.int64)
    log_norms = (
        n * math.log(math.pi)
        + np.sum(gammaln(exps + 1), axis=1)
        + gammaln(k - exps.sum(axis=1) + 1)
        - gammaln(k + n + 1)
    )
    return FiniteKKernel(
        "fubini-study",
        k,
        n,
        exps,
        log_norms,
        _cpn_weight,
        lambda t: (1 + t) ** (-(n + 1)),
    )


def exact_cp1_kernel(k):
    return exact_cpn_kernel(k, 1)


@dataclass(frozen=True)
class RadialWeight:
    """``phi(x) = f(|x|^2)`` in one variable with density ``phi_{x xbar} = f' + t f''``."""

    name: str
    f: object
    df: object
    d2f: object

    def __call__(self, x):
        return self.f(np.abs(np.asarray(x)[..., 0]) ** 2)

    def density(self, t):
        return self.df(t) + t * self.d2f(t)


def radial_weight(source, c=Fraction(1, 10)):
    """A :class:`RadialWeight` from a model name or a radial one-variable potential jet.

    Jet input is read as the polynomial it stores (no truncation error is assumed).
    """
    if isinstance(source, RadialWeight):
        return source
    if isinstance(source, str):
        if source == "flat":
            return RadialWeight("flat", lambda t: t, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
        if source == "fubini-study":
            return RadialWeight("fubini-study", np.log1p, lambda t: 1 / (1 + t), lambda t: -1 / (1 + t) ** 2)
        if source == "radial-quartic":
            cf = float(c)
            return RadialWeight(
                "radial-quartic",
                lambda t: t + cf * t**2,
                lambda t: 1 + 2 * cf * t,
                lambda t: np.full_like(t, 2 * cf),
            )
        raise ConfigError(f"no radial oracle for model {source!r}")
    if isinstance(source, PotentialJet):
        if source.n != 1:
            raise ConfigError("quadrature oracle needs a one-dimensional potential")
        coeffs = {}
        for (a, b), v in source.phi.items():
            v = complex(v)
            if a != b or abs(v.imag) > 1e-14:
                raise ConfigError(f"potential is not radial: term x^{a} xbar^{b}")
            coeffs[a] = v.real
        poly = np.polynomial.Polynomial([coeffs.get(i, 0.0) for i in range(max(coeffs, default=0) + 1)])
        d1, d2 = poly.deriv(1), poly.deriv(2)
        return RadialWeight("custom", poly, d1, d2)
    raise ConfigError(f"cannot build a radial weight from {type(source).__name__}")


def _composite_nodes(a, b, panels, nodes):
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    return x, ww


def _radial_log_norms(weight, k, radius, M, panels, nodes, extra):
    r, w = _composite_nodes(0.0, radius, panels, nodes)
    t = r**2
    dens = weight.density(t) * (1.0 if extra is None else extra(t))
    if np.any(dens <= 0):
        raise ConfigError("weight density is not positive on the quadrature disc")
    base = np.log(w) + np.log(dens) - k * weight.f(t) + np.log(r)
    j = np.arange(M)[:, None]
    with np.errstate(divide="ignore"):
        logs = base[None, :] + 2 * j * np.log(r)[None, :]
    return math.log(2 * math.pi) + logsumexp(logs, axis=1)


def quadrature_kernel(weight, k, radius=4.0, M=None, panels=64, nodes=24, *, density=None, tol=1e-10, c=Fraction(1, 10)):
    """Disc kernel for a radial weight; norms by composite Gauss-Legendre quadrature.

    The measure is ``exp(-k phi) phi_{x xbar} dlambda``, optionally multiplied by
    ``density(|x|^2)``.  Norms are recomputed with doubled panels and any
    relative change above ``tol`` raises :class:`QuadratureResolutionError`.
    """
    w = radial_weight(weight, c)
    if k <= 0:
        raise ConfigError("k must be positive")
    M = int(2 * k + 20) if M is None else int(M)
    coarse = _radial_log_norms(w, k, radius, M, panels, nodes, density)
    fine = _radial_log_norms(w, k, radius, M, 2 * panels, nodes, density)
    drift = float(np.max(np.abs(np.expm1(fine - coarse))))
    if not drift < tol:
        raise QuadratureResolutionError(
            f"quadrature norms moved by {drift:.3e} under panel doubling (tolerance {tol:.0e})"
        )
    extra = density

    def total_density(t):
        return w.density(t) * (1.0 if extra is None else extra(t))

    return FiniteKKernel(w.name, k, 1, np.arange(M)[:, None], fine, w, total_density, drift, radius)


# -- reproducing formula -----------------------------------------------------


def cutoff(r):
    """``1`` on ``[0, 1/2]``, quintic smoothstep down to ``0`` at ``1``; ``C^2``."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - 0.5) / 0.5, 0.0, 1.0)
    return 1.0 - s**3 * (10 - 15 * s + 6 * s**2)


def _contour_integrand(model, x, y, k):
    """``exp(k theta.(x - y)) d theta/d z`` on ``z = conj(y)``, one variable."""
    if model == "flat":
        return np.exp(k * np.conj(y) * (x - y))
    if model == "fubini-study":
        z = np.conj(y)
        return ((1 + x * z) / (1 + y * z)) ** k / ((1 + x * z) * (1 + y * z))
    raise ConfigError(f"reproducing check supports flat and fubini-study, not {model!r}")


def _contour_integral(model, u, x, k, panels, nodes, angles):
    r, wr = np.concatenate(
        [a for a in (_composite_nodes(0.0, 0.5, panels, nodes), _composite_nodes(0.5, 1.0, panels, nodes))], axis=1
    )
    ang = 2 * math.pi * np.arange(angles) / angles
    y = r[:, None] * np.exp(1j * ang)[None, :]
    f = _contour_integrand(model, x, y, k) * u(y) * cutoff(r)[:, None]
    return complex((k / math.pi) * np.sum(f * (wr * r)[:, None]) * (2 * math.pi / angles))


@dataclass(frozen=True)
class ReproducingResult:
    residual: float
    value: complex
    integral: complex
    drift: float


def reproducing_check(u, model, k, x=0.0, *, panels=16, nodes=32, angles=256, tol=1e-10):
    """``|u(x) - I_0| exp(-k phi(x) / 2)`` for the contour integral over the unit disc.

    ``u`` is a vectorized callable of ``y``; one complex dimension.
    """
    x = complex(x)
    if abs(x) >= 0.5:
        raise ConfigError("x must lie in the inner ball |x| < 1/2")
    coarse = _contour_integral(model, u, x, k, panels, nodes, angles)
    fine = _contour_integral(model, u, x, k, 2 * panels, nodes, 2 * angles)
    drift = abs(fine - coarse)
    if not drift <= tol * max(1.0, abs(fine)):
        raise QuadratureResolutionError(f"contour integral moved by {drift:.3e} under refinement")
    ux = complex(np.asarray(u(np.array([x])))[0])
    phi = abs(x) ** 2 if model == "flat" else math.log1p(abs(x) ** 2)
    return ReproducingResult(abs(ux - fine) * math.exp(-k * phi / 2), ux, fine, drift)


def decay_rate(ks, residuals, floor=1e-14):
    """Exponential rate ``-d log r / dk`` and monotonicity, ignoring values at round-off.

    Returns ``(rate, monotone)``; ``rate`` is ``inf`` when every residual is at the floor.
    """
    ks = np.asarray(ks, dtype=float)
    res = np.maximum(np.asarray(residuals, dtype=float), floor)
    monotone = bool(np.all(np.diff(res) <= 0))
    live = res > floor
    if live.sum() < 2:
        return math.inf, monotone
    slope = np.polyfit(ks[live], np.log(res[live]), 1)[0]
    return float(-slope), monotone


# -- expansion error sweeps --------------------------------------------------


@dataclass
class SweepResult:
    model: str
    order: int
    n: int
    k: list
    oracle: list
    expansion: list
    rel_error: list
    slope: float | None
    fit_residual: float | None
    max_ratio: float
    drift: float
    runtime: float
    base_values: list = field(default_factory=list)
    deriv_error: list = field(default_factory=list)
    deriv_slope: float | None = None
    probe: float | None = None

    def rows(self):
        deriv = self.deriv_error or [None] * len(self.k)
        return list(zip(self.k, self.oracle, self.expansion, self.rel_error, deriv))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "oracle_value", "expansion_value", "rel_error", "deriv_error", "slope"])
        slope = "" if self.slope is None else repr(self.slope)
        for row in self.rows():
            w.writerow(["" if v is None else repr(v) for v in row] + [slope])
        return buf.getvalue()

    def summary(self):
        return {
            "model": self.model,
            "order": self.order,
            "n": self.n,
            "k": list(self.k),
            "slope": self.slope,
            "fit_residual": self.fit_residual,
            "max_bergman_over_k_n": self.max_ratio,
            "quadrature_drift": self.drift,
            "runtime_seconds": self.runtime,
            "base_values": [str(b) for b in self.base_values],
            "probe": self.probe,
            "deriv_slope": self.deriv_slope,
        }

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def fit_slope(ks, errors, floor=1e-14):
    """Least-squares slope of ``log err`` against ``log k``; ``None`` if errors sit at round-off."""
    ks = np.asarray(ks, dtype=float)
    err = np.asarray(errors, dtype=float)
    live = err > floor
    if live.sum() < 2:
        return None, None
    X, Y = np.log(ks[live]), np.log(err[live])
    coef = np.polyfit(X, Y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, X) - Y) ** 2)))
    return float(coef[0]), resid


def oracle_for(model, k, n=1, *, c=Fraction(1, 10), radius=4.0, M=None):
    if model == "fubini-study":
        if int(k) != k:
            raise ConfigError("the projective-space oracle needs integer k")
        return exact_cpn_kernel(int(k), n)
    if n != 1:
        raise ConfigError(f"the quadrature oracle for {model!r} is one-dimensional")
    return quadrature_kernel(model, k, radius=radius, M=M, c=c)


def _central_difference(f, x0, h):
    return (f(x0 + h) - f(x0 - h)) / (2 * h)


def expansion_error_sweep(
    model, order, k_values, *, n=1, c=Fraction(1, 10), radius=4.0, exact=True, probe=0.1, step=1e-4, probe_degree=8
):
    """Relative error of ``B_k^(N)(0)`` against an independent oracle across ``k``.

    Alongside the base value, the first difference of ``B_k`` along the real
    axis of ``x_1`` at ``probe`` is compared; its error is divided by ``k^n``
    and fitted separately.  Set ``probe=None`` to skip it.
    """
    start = time.perf_counter()
    if isinstance(model, PotentialJet):
        phi, name = model, "custom"
        n = phi.n
        probe_degree = min(probe_degree, phi.degree - work_degree(order, 0) - 2)
    else:
        name = model
        phi = model_potential(model, n, work_degree(order, probe_degree) + 2, exact=exact, c=c)
    if probe is None or probe_degree < 2:
        probe, probe_degree = None, 0
    seq = expand(phi, order, probe_degree)
    psi = polarize(phi)
    unit = np.eye(n)[0]
    oracle_vals, approx, errors, ratios, deriv_errors = [], [], [], [], []
    drift = 0.0
    for k in k_values:
        if name == "custom":
            K = quadrature_kernel(phi, k, radius=radius)
        else:
            K = oracle_for(name, k, n, c=c, radius=radius)
        drift = max(drift, K.drift)
        b = float(K.bergman(np.zeros(n))[()])
        e = bergman_at_base(seq.base_values, k, n)
        oracle_vals.append(b)
        approx.append(e)
        errors.append(abs(e - b) / b)
        ratios.append(b / k**n)
        if probe is not None:
            A = assemble_kernel(seq, psi, k)
            d_oracle = _central_difference(lambda t, K=K: float(K.bergman(t * unit)[()]), probe, step)
            d_approx = _central_difference(lambda t, A=A: A.bergman(t * unit), probe, step)
            deriv_errors.append(abs(d_oracle - d_approx) / k**n)
    slope, resid = fit_slope(k_values, errors)
    deriv_slope = fit_slope(k_values, deriv_errors, floor=DIFFERENCE_FLOOR)[0] if deriv_errors else None
    return SweepResult(
        name,
        order,
        n,
        list(k_values),
        oracle_vals,
        approx,
        errors,
        slope,
        resid,
        max(ratios),
        drift,
        time.perf_counter() - start,
        list(seq.base_values),
        deriv_errors,
        deriv_slope,
        probe,
    )


def growth_witness(k_values, points, n=1):
    """``max_x B_k(x) / k^n`` on the projective-space oracle for each ``k``."""
    pts = np.asarray(points, dtype=complex).reshape(-1, n)
    return [float(np.max(exact_cpn_kernel(k, n).bergman(pts)) / k**n) for k in k_values]
