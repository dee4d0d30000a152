from fractions import Fraction

import numpy as np
import pytest

from bergjet.errors import StrictPositivityError
from bergjet.geometry import (
    PotentialJet,
    flat_potential,
    fubini_study_potential,
    polarize,
    radial_quartic_potential,
    random_quartic_potential,
)
from bergjet.jets import Jet, compose, variables
from bergjet.kuranishi import (
    ThetaMap,
    embed_xz,
    embed_yz,
    good_contour_check,
    invert_theta,
    kuranishi,
    restrict_y_to_x,
    theta_map,
)


def division_defect(psi, th):
    n = psi.n
    v = variables(3 * n, th.degree + 1, exact=psi.psi.exact)
    lhs = sum((th.theta[i] * (v[i] - v[n + i]) for i in range(n)), Jet.zero(3 * n, th.degree + 1))
    rhs = embed_xz(psi.psi, n) - embed_yz(psi.psi, n)
    return lhs - rhs.truncate(th.degree + 1)


def test_theta_flat():
    th = theta_map(polarize(flat_potential(1, 6)))
    _x, _y, z = variables(3, 5)
    assert th.theta[0] == z


def test_theta_hand_integral():
    x, xb = variables(2, 6)
    phi = PotentialJet(1, x * xb + x * x * xb * xb * Fraction(1, 2))
    th = theta_map(polarize(phi))
    X, Y, Z = variables(3, 5)
    assert th.theta[0] == Z + Z * Z * (X + Y) * Fraction(1, 2)


def test_theta_on_diagonal_is_gradient():
    psi = polarize(fubini_study_potential(2, 8))
    th = theta_map(psi)
    for i, t in enumerate(th.at_diagonal()):
        assert t == psi.psi.differentiate(i)


@pytest.mark.parametrize("seed", range(4))
def test_division_identity_random(seed):
    rng = np.random.default_rng(seed)
    psi = polarize(random_quartic_potential(1 + seed % 2, rng, 6))
    assert division_defect(psi, theta_map(psi)).is_zero()


def test_invert_theta_flat_is_identity():
    zm = invert_theta(theta_map(polarize(flat_potential(1, 6))))
    _x, _y, w = variables(3, 5)
    assert zm.z_map[0] == w


def test_invert_theta_round_trip_fubini_study():
    th, zm, _ = kuranishi(polarize(fubini_study_potential(1, 10)), 8)
    v = variables(3, 8)
    fwd = [compose(t.truncate(8), v[:2] + list(zm.z_map)) for t in th.theta]
    assert fwd[0] == v[2]
    back = [compose(z, v[:2] + [t.truncate(8) for t in th.theta]) for z in zm.z_map]
    assert back[0] == v[2]


def test_z_map_on_diagonal_recovers_z():
    psi = polarize(radial_quartic_potential(1, 10))
    _th, zm, _ = kuranishi(psi, 8)
    x, z = variables(2, 8)
    args = [x, x, psi.psi.differentiate(0).truncate(8)]
    assert compose(zm.z_map[0], args) == z


def test_singular_theta_is_strict_positivity_error():
    _x, _y, z = variables(3, 4)
    with pytest.raises(StrictPositivityError):
        invert_theta(ThetaMap(1, (z * z,)))


def test_delta0_flat_is_one():
    _, _, d = kuranishi(polarize(flat_potential(2, 6)), 4)
    assert d.delta0 == Jet.one(6, 4)


@pytest.mark.parametrize("seed", range(3))
def test_delta0_diagonal_is_one(seed):
    psi = polarize(random_quartic_potential(1 + seed % 2, np.random.default_rng(seed), 6))
    _, _, d = kuranishi(psi, 4)
    n = psi.n
    assert restrict_y_to_x(d.delta0, n) == Jet.one(2 * n, 4)


def test_delta0_linear_term_is_half_connection_trace():
    # on FS n=1: the (x - y) coefficient of Delta_0 in (y, z) variables is -eta/2
    psi = polarize(fubini_study_potential(1, 10))
    th, _zm, d = kuranishi(psi, 7)
    v = variables(3, 6)
    back = compose(d.delta0.truncate(6), v[:2] + [t.truncate(6) for t in th.theta])
    slope = back.differentiate(0)
    on_diag = restrict_y_to_x(slope, 1)
    X, Z = variables(2, 5)
    eta = (Z * -2) * (1 + X * Z).inverse()
    assert on_diag == (eta * Fraction(-1, 2)).truncate(on_diag.degree)


def test_det_composition_matches_pointwise():
    psi = polarize(fubini_study_potential(1, 14, exact=False))
    _th, zm, _ = kuranishi(psi, 12)
    H = psi.psi.differentiate(0).differentiate(1)
    v = variables(3, 12, exact=False)
    composed = compose(H.remap([1, 2], 3).truncate(12), v[:2] + list(zm.z_map))
    rng = np.random.default_rng(0)
    pts = 0.03 * (rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3)))
    zvals = zm.z_map[0].evaluate(pts)
    direct = 1 / (1 + pts[:, 1] * zvals) ** 2
    np.testing.assert_allclose(composed.evaluate(pts), direct, rtol=1e-12)


def test_good_contour_flat():
    phi = flat_potential(1, 4, exact=False)
    psi = polarize(phi)
    rep = good_contour_check(phi, psi, theta_map(psi), radius=0.5, margin=0.9, samples=2000)
    assert rep["violations"] == 0 and rep["psi_violations"] == 0


def test_good_contour_fubini_study():
    phi = fubini_study_potential(1, 10, exact=False)
    psi = polarize(phi)
    rep = good_contour_check(phi, psi, theta_map(psi), radius=0.3, margin=0.25, samples=10_000)
    assert rep["violations"] == 0
    assert set(rep) >= {"samples", "violations", "max_slack", "witness"}


def test_good_contour_aggressive_margin_reports_witness():
    phi = random_quartic_potential(1, np.random.default_rng(2), 4, exact=False)
    psi = polarize(phi)
    rep = good_contour_check(phi, psi, theta_map(psi), radius=0.05, margin=2 * phi.min_eigenvalue(), samples=500)
    assert rep["violations"] > 0
    assert len(rep["witness"]["x"]) == 1
    assert rep["max_slack"] > 0
