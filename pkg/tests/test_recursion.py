import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from bergjet._fields import QQi
from bergjet.errors import ConsistencyError, DegreeBudgetError
from bergjet.geometry import (
    flat_potential,
    fubini_study_potential,
    hermitian_defect,
    hermitian_metric,
    linear_change,
    polarize,
    radial_quartic_potential,
    random_quartic_potential,
    scalar_curvature,
)
from bergjet.jets import Jet, variables
from bergjet.kuranishi import kuranishi
from bergjet.recursion import (
    KExpansion,
    OutsideValidityRadius,
    apply_S,
    assemble_kernel,
    expand,
    random_amplitude,
    solve_recursion,
    verify_negligible,
    work_degree,
)


def laplace_radial_coefficients(c, order):
    """``b_m(0)`` for ``phi = t + c t^2`` in one variable, from the Laplace series of ``||1||^2``.

    ``(k / pi) ||1||^2 = k int_0^inf exp(-k t - k c t^2) (1 + 4 c t) dt``; expanding
    ``exp(-k c t^2)`` termwise gives a series in ``1/k`` with rational coefficients.
    """
    c = Fraction(c)
    series = [Fraction(0)] * (order + 1)
    for j in range(order + 1):
        w = (-c) ** j / math.factorial(j)
        # k^{j+1} int t^{2j} e^{-kt} = (2j)! k^{-j}, and the 4ct density term gains one more k^{-1}
        series[j] += w * math.factorial(2 * j)
        if j + 1 <= order:
            series[j + 1] += w * 4 * c * math.factorial(2 * j + 1)
    inv = [Fraction(1)] + [Fraction(0)] * order
    for m in range(1, order + 1):
        inv[m] = -sum(series[i] * inv[m - i] for i in range(1, m + 1))
    return inv


def test_S_of_constant():
    one = Jet.one(3, 4)
    out = apply_S(KExpansion([one]), 2, 1)
    assert out.at(0) == one and out.at(1).is_zero() and out.at(2).is_zero()


def test_S_single_mixed_derivative():
    _x, y, t = variables(3, 4)
    out = apply_S(KExpansion([t * y]), 1, 1)
    assert out.at(0) == t * y
    assert out.at(1) == Jet.one(3, 2)


def test_S_inverse_round_trip():
    rng = np.random.default_rng(0)
    for n in (1, 2):
        A = random_amplitude(n, 2, rng, 10)
        a = KExpansion([vec[0] for vec in A.coeffs[:3]])
        back = apply_S(apply_S(a, 2, n), 2, n, inverse=True)
        for m in range(3):
            assert back.at(m) == a.at(m).truncate(back.at(m).degree)


def test_S_degree_budget():
    with pytest.raises(DegreeBudgetError) as info:
        apply_S(KExpansion([Jet.one(3, 2)]), 3, 1)
    assert info.value.required == 6


def test_negligible_zero_and_constant():
    zero = Jet.zero(3, 8)
    rep = verify_negligible(KExpansion([[zero], [zero]]), 1, 1)
    assert rep["exactly_zero"]
    const = Jet.constant(QQi(2, 1), 3, 8)
    rep = verify_negligible(KExpansion([[const], [const]]), 1, 1)
    assert rep["exactly_zero"]


@pytest.mark.parametrize("n", [1, 2])
def test_negligible_random(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        A = random_amplitude(n, 3, rng, 12)
        rep = verify_negligible(A, 3, n)
        assert rep["exactly_zero"], rep


def test_negligible_float_mode():
    rng = np.random.default_rng(7)
    A = random_amplitude(1, 3, rng, 12, exact=False)
    assert verify_negligible(A, 3, 1)["max_residual"] < 1e-12


def test_flat_coefficients_vanish():
    seq = expand(flat_potential(1, 14), 4, 2)
    assert seq.b[0] == Jet.one(2, seq.b[0].degree)
    assert all(b.is_zero() for b in seq.b[1:])


def test_fubini_study_base_values():
    seq = expand(fubini_study_potential(1, 10), 3)
    assert seq.base_values == [1, 1, 0, 0]


def test_fubini_study_dimension_two():
    # (k+1)(k+2)/k^2 = 1 + 3/k + 2/k^2
    seq = expand(fubini_study_potential(2, 8), 2)
    assert seq.base_values == [1, 3, 2]


def test_radial_quartic_matches_laplace_series():
    seq = expand(radial_quartic_potential(1, 10), 3)
    assert seq.base_values == laplace_radial_coefficients(Fraction(1, 10), 3)


def test_b1_is_half_scalar_curvature():
    rng = np.random.default_rng(21)
    for n in (1, 2):
        phi = random_quartic_potential(n, rng, 6)
        s = scalar_curvature(hermitian_metric(polarize(phi))).base_value
        assert expand(phi, 1).base_values[1] == s / 2


def test_valid_degrees_follow_budget():
    seq = expand(fubini_study_potential(1, 12), 3, 2)
    assert seq.work_degree == work_degree(3, 2) == 10
    assert seq.valid_degrees == [10, 8, 6, 4]
    assert [b.degree for b in seq.b] == seq.valid_degrees


def test_expand_degree_budget_reports_requirement():
    with pytest.raises(DegreeBudgetError) as info:
        expand(fubini_study_potential(1, 6), 3)
    assert info.value.required == 10


def test_diagonal_coefficients_are_real():
    phi = random_quartic_potential(2, np.random.default_rng(3), 9)
    seq = expand(phi, 2, 1)
    for b in seq.diagonal:
        assert hermitian_defect(b, 2) is None
    for v in seq.base_values:
        assert v.im == 0


def test_unitary_invariance_of_base_values():
    rng = np.random.default_rng(5)
    phi = random_quartic_potential(2, rng, 8)
    U = [[QQi(Fraction(3, 5)), QQi(0, Fraction(-4, 5))], [QQi(0, Fraction(-4, 5)), QQi(Fraction(3, 5))]]
    assert expand(phi, 2).base_values == expand(linear_change(phi, U), 2).base_values


def test_non_unit_delta_is_rejected():
    psi = polarize(fubini_study_potential(1, 8))
    th, zm, d = kuranishi(psi, 6)
    with pytest.raises(ConsistencyError):
        solve_recursion(d.delta0 * 2, zm, th, 2)


def test_float_mode_agrees_with_exact():
    phi = random_quartic_potential(1, np.random.default_rng(9), 10)
    exact = expand(phi, 3).base_values
    approx = expand(phi.to_float(), 3).base_values
    for a, b in zip(exact, approx):
        assert abs(complex(a) - complex(b)) < 1e-10 * max(1, abs(complex(a)))


def test_kernel_flat_at_origin():
    seq = expand(flat_potential(2, 8), 1)
    K = assemble_kernel(seq, polarize(flat_potential(2, 8)), 7.0)
    assert abs(K.kernel([0, 0], [0, 0]) - (7 / math.pi) ** 2) < 1e-12


def test_kernel_fubini_study_bergman():
    seq = expand(fubini_study_potential(1, 8), 1)
    K = assemble_kernel(seq, polarize(fubini_study_potential(1, 8)), 10.0)
    assert abs(K.bergman(0) - 11 / math.pi) < 1e-12


def test_kernel_flat_off_diagonal_decay():
    k = 12.0
    seq = expand(flat_potential(1, 6), 1)
    K = assemble_kernel(seq, polarize(flat_potential(1, 6)), k)
    x, y = 0.1, 0.0
    val = abs(K.kernel(x, y)) * math.exp(-k * (abs(x) ** 2 + abs(y) ** 2) / 2)
    assert abs(val - (k / math.pi) * math.exp(-k * abs(x - y) ** 2 / 2)) < 1e-12


def test_kernel_warns_outside_radius():
    seq = expand(flat_potential(1, 6), 1)
    K = assemble_kernel(seq, polarize(flat_potential(1, 6)), 5.0, radius=0.2)
    with pytest.warns(OutsideValidityRadius):
        K.kernel(0.5, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        K.kernel(0.1, 0.0)
