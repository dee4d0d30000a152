"""Exit criteria.  Each test carries an ``acceptance`` marker; the conftest hook
prints one PASS/FAIL line per criterion at the end of the run."""

import itertools
import math
import time

import numpy as np
import pytest

from bergjet.geometry import (
    flat_potential,
    fubini_study_potential,
    hermitian_metric,
    polarize,
    random_quartic_potential,
    scalar_curvature,
)
from bergjet.jets import Jet, JetMatrix, compose, variables
from bergjet.kuranishi import (
    embed_xz,
    embed_yz,
    good_contour_check,
    kuranishi,
    restrict_y_to_x,
    theta_map,
)
from bergjet.oracles import (
    decay_rate,
    exact_cp1_kernel,
    expansion_error_sweep,
    growth_witness,
    reproducing_check,
)
from bergjet.recursion import (
    bergman_at_base,
    expand,
    random_amplitude,
    verify_negligible,
)
from bergjet.twisted import (
    expand_twisted,
    identity_bundle,
    predicted_b1,
    random_bundle_metric,
)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, limit {self.seconds} s"


@pytest.mark.acceptance(1, "flat model coefficients vanish as full jets")
def test_flat_exactness():
    with Budget(10):
        for n in (1, 2):
            seq = expand(flat_potential(n, 14), 4, 2)
            assert seq.b[0] == Jet.one(2 * n, seq.b[0].degree)
            for b in seq.b[1:]:
                assert b.is_zero()


@pytest.mark.acceptance(2, "b1 equals half the scalar curvature")
def test_b1_half_scalar_curvature():
    rng = np.random.default_rng(2024)
    with Budget(120):
        for i in range(20):
            n = 1 + i % 2
            phi = random_quartic_potential(n, rng, 6)
            s = scalar_curvature(hermitian_metric(polarize(phi))).base_value
            assert expand(phi, 1).base_values[1] == s / 2


@pytest.mark.acceptance(2, "b1 equals half the scalar curvature")
def test_b1_half_scalar_curvature_float():
    rng = np.random.default_rng(2025)
    for i in range(4):
        n = 1 + i % 2
        phi = random_quartic_potential(n, rng, 6, exact=False)
        s = complex(scalar_curvature(hermitian_metric(polarize(phi))).base_value)
        b1 = complex(expand(phi, 1).base_values[1])
        assert abs(b1 - s / 2) <= 1e-10 * abs(s / 2)


@pytest.mark.acceptance(3, "projective line coefficients and closed-form oracle")
def test_fubini_study_exactness():
    with Budget(30):
        seq = expand(fubini_study_potential(1, 10), 3)
        assert seq.base_values == [1, 1, 0, 0]
        for k in (1, 5, 20, 100):
            approx = bergman_at_base(seq.base_values, k, 1)
            oracle = float(exact_cp1_kernel(k).bergman(np.zeros(1)))
            assert abs(approx / oracle - 1) < 1e-12
            assert abs(oracle - (k + 1) / math.pi) < 1e-12 * oracle


@pytest.mark.acceptance(4, "truncation error decays like k^-(N+1) on the radial quartic")
@pytest.mark.parametrize("order", [0, 1, 2])
def test_decay_rate(order):
    with Budget(300):
        sweep = expansion_error_sweep("radial-quartic", order, list(range(10, 41, 5)))
        assert sweep.slope <= -(order + 0.5)
        assert sweep.drift < 1e-10


@pytest.mark.acceptance(5, "negligible amplitudes vanish on the diagonal")
def test_negligible_amplitudes():
    rng = np.random.default_rng(5)
    with Budget(60):
        for i in range(100):
            n = 1 + i % 2
            rep = verify_negligible(random_amplitude(n, 3, rng, 12), 3, n)
            assert rep["exactly_zero"], (i, rep)


def _round_trip_ok(th, zm, n, degree):
    v = variables(3 * n, degree)
    fwd = [compose(t.truncate(degree), v[: 2 * n] + list(zm.z_map)) for t in th.theta]
    back = [compose(z, v[: 2 * n] + [t.truncate(degree) for t in th.theta]) for z in zm.z_map]
    return fwd == v[2 * n :] and back == v[2 * n :]


def _division_ok(psi, th):
    n = psi.n
    D = th.degree + 1
    v = variables(3 * n, D)
    lhs = sum((th.theta[i] * (v[i] - v[n + i]) for i in range(n)), Jet.zero(3 * n, D))
    rhs = (embed_xz(psi.psi, n) - embed_yz(psi.psi, n)).truncate(D)
    return (lhs - rhs).is_zero()


@pytest.mark.acceptance(6, "division identity, unit amplitude base, theta inversion")
def test_kuranishi_identities():
    rng = np.random.default_rng(6)
    phis = [flat_potential(1, 8), flat_potential(2, 8), fubini_study_potential(1, 8), fubini_study_potential(2, 8)]
    phis += [random_quartic_potential(1 + i % 2, rng, 8) for i in range(10)]
    with Budget(60):
        for phi in phis:
            psi = polarize(phi)
            n = psi.n
            assert _division_ok(psi, theta_map(psi))
            th, zm, d = kuranishi(psi, 6)
            assert restrict_y_to_x(d.delta0, n) == Jet.one(2 * n, 6)
            assert _round_trip_ok(th, zm, n, 6)


@pytest.mark.acceptance(7, "twisted b1 and trivial bundle reduction")
def test_twisted():
    rng = np.random.default_rng(7)
    with Budget(120):
        for i in range(10):
            n = 1 + i % 2
            phi = random_quartic_potential(n, rng, 6)
            G = random_bundle_metric(n, 2, rng, 4)
            assert expand_twisted(phi, G, 1).base_values[1] == predicted_b1(phi, G)
        for phi in (fubini_study_potential(1, 8), random_quartic_potential(2, rng, 8)):
            twisted = expand_twisted(phi, identity_bundle(phi.n, 2, 6), 2)
            plain = expand(phi, 2)
            for T, b in zip(twisted.b, plain.b):
                assert T == JetMatrix.identity(2, 2 * phi.n, b.degree) * b


@pytest.mark.acceptance(8, "reproducing defect decays exponentially")
@pytest.mark.parametrize("power", [0, 1, 2])
@pytest.mark.parametrize("x", [0.0, 0.1])
def test_reproducing(power, x):
    ks = [10, 20, 30, 40, 50]
    with Budget(300):
        res = [reproducing_check(lambda y: y**power, "flat", k, x).residual for k in ks]
        rate, monotone = decay_rate(ks, res)
        assert monotone
        assert rate >= 0.05


@pytest.mark.acceptance(9, "good contour holds on the projective line")
def test_good_contour():
    with Budget(10):
        phi = fubini_study_potential(1, 8, exact=False)
        psi = polarize(phi)
        rep = good_contour_check(phi, psi, theta_map(psi), samples=10_000)
        assert rep["violations"] == 0 and rep["psi_violations"] == 0


@pytest.mark.acceptance(10, "Bergman function grows like k^n")
def test_growth_witness():
    rng = np.random.default_rng(10)
    pts = (rng.standard_normal((200, 1)) + 1j * rng.standard_normal((200, 1))) * 2.0
    with Budget(30):
        w = growth_witness(range(1, 101), pts)
    assert all(b <= a + 1e-9 for a, b in itertools.pairwise(w))
    assert all(v > 1 / math.pi for v in w)
    # the excess over 1/pi shrinks like 1/k
    assert w[-1] - 1 / math.pi <= 0.011 * (w[0] - 1 / math.pi)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
